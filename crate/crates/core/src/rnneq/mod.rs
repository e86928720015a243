//! Periodically time-varying bidirectional recurrent APP detector.
//!
//! Stage `s` of an `S`-stage plan runs `P = S - s + 1` phases. Every
//! recurrent layer keeps one forward and one backward cell per phase; the
//! cell of phase `j` is reused at every `t`. The forward state map applied at
//! phase `j` belongs to phase `j - 1` (wrapping to the last phase of `t - 1`),
//! the backward one to phase `j + 1`. Only phase-`s` steps feed the softmax.

mod forward;
mod inputs;
mod io;
mod shape;

pub use forward::{forward, forward_cached, Activations, RnnDetector};
pub use inputs::{assemble_inputs, assemble_segment, InputEncoding, InputTensor};
pub use io::{load_model, save_model, ModelSidecar, MODEL_FORMAT};
pub use shape::{
    c_mul_per_step, count_rnn_multiplications, CellOffsets, Direction, ParamLayout, RnnModel, RnnShape,
};
