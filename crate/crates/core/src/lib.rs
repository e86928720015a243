//! Simulation and equalization toolkit for bandlimited channels with a
//! memoryless nonlinearity.
//!
//! The pipeline is: [`signalchain`] simulates the ground-truth channel,
//! [`sicframe`] splits each block into successive-interference-cancellation
//! stages, a detector ([`trellis`], [`gibbs`] or the recurrent network in
//! [`rnneq`], trained by [`trainer`]) produces symbol-wise a-posteriori
//! probabilities, and [`rates`] turns them into achievable-rate estimates.
//! [`expcli`] wires everything into config-driven experiments.

pub mod detector;
pub mod error;
pub mod expcli;
pub mod gibbs;
pub mod rates;
pub mod rnneq;
pub mod sicframe;
pub mod signalchain;
pub mod trainer;
pub mod trellis;
pub mod util;

pub use detector::{AppDetector, AppMatrix};
pub use error::{Error, Result};
