use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum AlphabetKind {
    /// Levels `{0, 1, ..., M-1}`.
    UnipolarPam,
    /// Levels `{±1, ±3, ..., ±(M-1)}`.
    BipolarAsk,
}

/// Real-valued symbol alphabet with `M = 2^m` strictly increasing levels.
///
/// Symbols are passed around as indices into [`Alphabet::points`].
#[derive(Clone, Debug, PartialEq)]
pub struct Alphabet {
    kind: AlphabetKind,
    bits: usize,
    points: Vec<f64>,
}

impl Alphabet {
    pub fn new(kind: AlphabetKind, order: usize) -> Result<Self> {
        if order < 2 || !order.is_power_of_two() {
            return Err(Error::Config(format!(
                "alphabet order must be a power of two >= 2, got {order}"
            )));
        }
        let points = match kind {
            AlphabetKind::UnipolarPam => (0..order).map(|i| i as f64).collect(),
            AlphabetKind::BipolarAsk => (0..order)
                .map(|i| 2.0 * i as f64 - (order as f64 - 1.0))
                .collect(),
        };
        Ok(Self {
            kind,
            bits: order.trailing_zeros() as usize,
            points,
        })
    }

    pub fn pam(order: usize) -> Result<Self> {
        Self::new(AlphabetKind::UnipolarPam, order)
    }

    pub fn ask(order: usize) -> Result<Self> {
        Self::new(AlphabetKind::BipolarAsk, order)
    }

    pub fn kind(&self) -> AlphabetKind {
        self.kind
    }

    /// Cardinality `M`.
    pub fn size(&self) -> usize {
        self.points.len()
    }

    /// Bits per symbol `m = log2 M`.
    pub fn bits(&self) -> usize {
        self.bits
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    #[inline]
    pub fn level(&self, index: usize) -> f64 {
        self.points[index]
    }

    pub fn levels(&self, indices: &[usize]) -> Vec<f64> {
        indices.iter().map(|&i| self.points[i]).collect()
    }

    /// `E[A^2]` under the uniform input distribution.
    pub fn mean_square(&self) -> f64 {
        self.points.iter().map(|a| a * a).sum::<f64>() / self.size() as f64
    }

    pub fn rms(&self) -> f64 {
        self.mean_square().sqrt()
    }

    pub fn index_of(&self, level: f64) -> Option<usize> {
        self.points.iter().position(|&p| p == level)
    }
}
