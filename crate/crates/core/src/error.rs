use thiserror::Error;

/// Errors produced anywhere in the simulation and detection pipeline.
#[derive(Debug, Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numeric(String),

    #[error("trellis table needs {needed} entries, budget is {budget}")]
    TableBudget { needed: u128, budget: usize },

    #[error("inconsistent pinning: every path through trellis step {step} has zero probability")]
    InconsistentPinning { step: usize },

    #[error("training diverged at iteration {iter}: loss {loss:.4} bits above {limit:.4} for {run} consecutive steps")]
    Diverged {
        iter: usize,
        loss: f64,
        limit: f64,
        run: usize,
    },

    #[error("missing artifact: {0}")]
    Missing(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("serialization error: {0}")]
    Serde(String),
}

impl Error {
    /// Process exit code used by the command-line runner.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Numeric(_) | Error::InconsistentPinning { .. } | Error::Diverged { .. } => 3,
            _ => 2,
        }
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Serde(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
