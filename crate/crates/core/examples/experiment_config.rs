//! Runs a config-driven experiment in-process, the same way the `sicnet`
//! binary does: simulate, train, evaluate, report.
//!
//!     cargo run --release --example experiment_config -- [config.toml]

use std::path::PathBuf;

use sicnet::expcli::{self, Command, ExperimentConfig};

fn main() -> sicnet::Result<()> {
    let path = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("configs/toy_rnn.toml"));
    let mut cfg = ExperimentConfig::load(&path)?;
    cfg.output = std::env::temp_dir().join("sicnet-runs");
    println!("config {} -> {}", path.display(), cfg.run_dir()?.display());
    for cmd in [Command::Simulate, Command::Sweep] {
        let manifest = expcli::run(cmd, &cfg)?;
        println!("{}: {} artifacts, {:.0} ms", manifest.command, manifest.artifacts.len(), manifest.wall_clock_ms);
    }
    println!("{}", expcli::render_report(&cfg.run_dir()?)?);
    Ok(())
}
