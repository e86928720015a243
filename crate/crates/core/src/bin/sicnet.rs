use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use sicnet::expcli::{self, Command, ExperimentConfig};

#[derive(Parser)]
#[command(name = "sicnet", version, about = "Run channel-detection experiments from a TOML config")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Simulate and dump the evaluation blocks
    Simulate { config: PathBuf },
    /// Train one network per stage and power, warm-starting upward
    Train { config: PathBuf },
    /// Estimate SIC rates and write rates.csv, summary.json, complexity.csv
    Evaluate { config: PathBuf },
    /// Train (for networks) and evaluate
    Sweep { config: PathBuf },
    /// Print the results of a finished run
    Report { config: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let (cmd, path) = match cli.command {
        Cmd::Simulate { config } => (Command::Simulate, config),
        Cmd::Train { config } => (Command::Train, config),
        Cmd::Evaluate { config } => (Command::Evaluate, config),
        Cmd::Sweep { config } => (Command::Sweep, config),
        Cmd::Report { config } => (Command::Report, config),
    };
    let result = expcli::configure_workers()
        .and_then(|_| ExperimentConfig::load(&path))
        .and_then(|cfg| expcli::run(cmd, &cfg).map(|m| (cfg, m)));
    match result {
        Ok((cfg, manifest)) => {
            if cmd == Command::Sweep {
                if let Ok(dir) = cfg.run_dir() {
                    if let Ok(text) = expcli::render_report(&dir) {
                        println!("{text}");
                    }
                }
            }
            log::info!("{} finished: {} artifacts", manifest.command, manifest.artifacts.len());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sicnet: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
