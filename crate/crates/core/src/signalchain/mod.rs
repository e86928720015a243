//! Discrete-time ground-truth channel: pulse shaping with fiber dispersion, a
//! memoryless nonlinearity, receiver filtering, sampling and noise.

mod alphabet;
mod channel;
mod config;
pub mod dump;
mod filter;

#[cfg(test)]
mod tests;

pub use alphabet::{Alphabet, AlphabetKind};
pub use channel::{
    apply_nonlinearity, differential_decode, differential_precode, nonlinearity_multiplications,
    Block, ComplexSample, DiscreteChannel,
};
pub use config::{
    Beta2, ChannelConfig, FiberSpec, NoiseKind, Nonlinearity, Precoding, PulseNorm, PulseSpec,
    ReceiverSpec,
};
pub use filter::{
    apply_dispersion, build_pulse, build_receiver, dispersion_response, fiber_impulse_response,
    sinc, FirFilter,
};
