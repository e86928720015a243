//! The common currency of all detectors: per-symbol APP rows.

use crate::error::{Error, Result};
use crate::sicframe::StageView;
use crate::signalchain::Block;
use crate::util::log_sum_exp;

/// Symbol-wise a-posteriori probabilities for the targets of one stage.
#[derive(Clone, Debug, PartialEq)]
pub struct AppMatrix {
    size: usize,
    targets: Vec<usize>,
    probs: Vec<f64>,
    logs: Vec<f64>,
    multiplications: u64,
}

impl AppMatrix {
    /// Normalizes unnormalized natural-log weights row by row.
    pub fn from_log_weights(targets: Vec<usize>, size: usize, mut logs: Vec<f64>) -> Result<Self> {
        if size == 0 || logs.len() != targets.len() * size {
            return Err(Error::Shape(format!(
                "{} log weights for {} rows of size {size}",
                logs.len(),
                targets.len()
            )));
        }
        for (r, row) in logs.chunks_mut(size).enumerate() {
            let norm = log_sum_exp(row);
            if !norm.is_finite() {
                return Err(Error::Numeric(format!("APP row {r} has no finite weight")));
            }
            row.iter_mut().for_each(|v| *v -= norm);
        }
        let probs = logs.iter().map(|v| v.exp()).collect();
        Ok(Self {
            size,
            targets,
            probs,
            logs,
            multiplications: 0,
        })
    }

    /// From nonnegative weights; each row is renormalized.
    pub fn from_probs(targets: Vec<usize>, size: usize, probs: Vec<f64>) -> Result<Self> {
        if probs.iter().any(|&p| !(p >= 0.0) || !p.is_finite()) {
            return Err(Error::Numeric("APP weights must be finite and nonnegative".into()));
        }
        Self::from_log_weights(targets, size, probs.iter().map(|p| p.ln()).collect())
    }

    pub fn uniform(targets: Vec<usize>, size: usize) -> Self {
        let rows = targets.len();
        Self {
            size,
            targets,
            probs: vec![1.0 / size as f64; rows * size],
            logs: vec![-(size as f64).ln(); rows * size],
            multiplications: 0,
        }
    }

    pub fn with_multiplications(mut self, count: u64) -> Self {
        self.multiplications = count;
        self
    }

    /// Alphabet size `|A|`.
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn rows(&self) -> usize {
        self.targets.len()
    }

    /// 1-based serial index of each row's symbol.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.probs[r * self.size..(r + 1) * self.size]
    }

    pub fn log_row(&self, r: usize) -> &[f64] {
        &self.logs[r * self.size..(r + 1) * self.size]
    }

    pub fn prob(&self, r: usize, a: usize) -> f64 {
        self.probs[r * self.size + a]
    }

    /// Natural log of the probability.
    pub fn ln_prob(&self, r: usize, a: usize) -> f64 {
        self.logs[r * self.size + a]
    }

    /// Real multiplications spent producing this matrix (0 if not instrumented).
    pub fn multiplications(&self) -> u64 {
        self.multiplications
    }

    pub fn multiplications_per_app(&self) -> f64 {
        self.multiplications as f64 / self.rows().max(1) as f64
    }
}

/// Anything that turns a received block into APPs for one SIC stage.
///
/// `seed` drives any internal randomness; deterministic detectors ignore it.
pub trait AppDetector: Sync {
    fn id(&self) -> String;

    fn detect(&self, block: &Block, view: &StageView, seed: u64) -> Result<AppMatrix>;

    /// Closed-form real multiplications per APP estimate at this view's stage.
    fn multiplications_per_app(&self, view: &StageView) -> u64;
}

/// Always outputs the uniform PMF.
#[derive(Clone, Copy, Debug)]
pub struct UniformDetector {
    pub size: usize,
}

impl AppDetector for UniformDetector {
    fn id(&self) -> String {
        "uniform".into()
    }

    fn detect(&self, _block: &Block, view: &StageView, _seed: u64) -> Result<AppMatrix> {
        Ok(AppMatrix::uniform(view.targets(), self.size))
    }

    fn multiplications_per_app(&self, _view: &StageView) -> u64 {
        0
    }
}

/// Cheats by reading the transmitted symbols: a point mass on the truth.
#[derive(Clone, Copy, Debug)]
pub struct OracleDetector {
    pub size: usize,
}

impl AppDetector for OracleDetector {
    fn id(&self) -> String {
        "oracle".into()
    }

    fn detect(&self, block: &Block, view: &StageView, _seed: u64) -> Result<AppMatrix> {
        let targets = view.targets();
        let mut logs = vec![f64::NEG_INFINITY; targets.len() * self.size];
        for (r, &k) in targets.iter().enumerate() {
            logs[r * self.size + block.x[k - 1]] = 0.0;
        }
        AppMatrix::from_log_weights(targets, self.size, logs)
    }

    fn multiplications_per_app(&self, _view: &StageView) -> u64 {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rows_are_normalized() {
        let m = AppMatrix::from_log_weights(vec![1, 2], 3, vec![0.0, 1.0, 2.0, -5.0, -5.0, 900.0]).unwrap();
        for r in 0..2 {
            assert!((m.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
        assert!((m.prob(1, 2) - 1.0).abs() < 1e-12);
        assert!(AppMatrix::from_log_weights(vec![1], 2, vec![f64::NEG_INFINITY; 2]).is_err());
        assert!(AppMatrix::from_probs(vec![1], 2, vec![1.0, -0.5]).is_err());
    }

    #[test]
    fn uniform_rows() {
        let m = AppMatrix::uniform(vec![3, 6], 4);
        assert_eq!(m.rows(), 2);
        assert!((m.ln_prob(0, 1) + 4f64.ln()).abs() < 1e-15);
    }
}
