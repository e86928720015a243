//! Forward-backward APP detection over a truncated-memory auxiliary channel.
//!
//! The auxiliary channel sees `Ñ + 1` symbols per receiver slot: `D_pre`
//! before the slot symbol and `D_post` after it (see
//! [`crate::signalchain::DiscreteChannel::context_split`]). Everything outside that window is
//! taken as a zero symbol, which is exact when `Ñ = K~` and a deliberate
//! mismatch otherwise.

mod aux;
mod fba;

pub use aux::{build_aux_channel, AuxChannel, DEFAULT_TABLE_BUDGET};
pub use fba::{
    count_fba_multiplications, fba_app, fba_multiplications_per_app, fba_posteriors, fba_ub, log_likelihood, FbaDetector,
    FbaOutput, UbEstimate,
};
