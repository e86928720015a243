//! Config-driven experiments: simulate, train, evaluate, sweep and report.
//!
//! A run lives in `<output>/<config-hash>/` and holds the resolved
//! `config.toml`, `blocks/`, `models/`, `rates.csv`, `summary.json`,
//! `complexity.csv` and `manifest.json`. Every CSV is a pure function of the
//! config, so two runs with the same seed produce identical bytes.

mod commands;
mod complexity;
mod config;

pub use commands::{
    checkpoint_stem, code_version, power_tag, read_manifest, render_report, run, Command, RunManifest,
};
pub use complexity::{reference_rows, run_rows, to_csv as complexity_csv, ComplexityRow, COMPLEXITY_HEADER};
pub use config::{
    DetectorConfig, EvalSection, ExperimentConfig, RnnSection, SicSection, SweepSection, TrainSection,
};

use crate::error::{Error, Result};

/// Environment variable holding the worker-thread count.
pub const WORKERS_ENV: &str = "SICNET_WORKERS";

/// Sizes the global thread pool from [`WORKERS_ENV`]; returns the count used.
pub fn configure_workers() -> Result<Option<usize>> {
    let Ok(text) = std::env::var(WORKERS_ENV) else {
        return Ok(None);
    };
    let n: usize = text
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Config(format!("{WORKERS_ENV} must be a positive integer, got `{text}`")))?;
    // a second call keeps the first pool
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(Some(n))
}
