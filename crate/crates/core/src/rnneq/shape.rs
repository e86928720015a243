use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::inputs::InputEncoding;
use crate::error::{Error, Result};

/// Layer widths and windowing of one stage's network.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnnShape {
    /// `(ℓ_1, ..., ℓ_L)`: recurrent layer inputs, then the output layer input.
    pub dims: Vec<usize>,
    /// Receiver samples per observation window.
    pub l_y: usize,
    /// Known symbols per window.
    pub l_ic: usize,
    /// Reals per receiver sample.
    pub obs_dims: usize,
    pub n_os: usize,
    pub stages: usize,
    pub stage: usize,
    /// `|A|`.
    pub alphabet_size: usize,
}

impl RnnShape {
    pub fn validate(&self) -> Result<()> {
        if self.dims.len() < 2 {
            return Err(Error::Config("an RNN needs at least one recurrent layer".into()));
        }
        if self.dims[0] != self.obs_dims * self.l_y + self.l_ic {
            return Err(Error::Config(format!(
                "l_1 = {} but the input window has {} x {} observations + {} known symbols",
                self.dims[0], self.obs_dims, self.l_y, self.l_ic
            )));
        }
        if let Some(bad) = self.dims[1..].iter().find(|&&d| d == 0 || d % 2 == 1) {
            return Err(Error::Config(format!("recurrent widths must be even and positive, got {bad}")));
        }
        if self.stage == 0 || self.stage > self.stages {
            return Err(Error::Config(format!("stage {} outside 1..={}", self.stage, self.stages)));
        }
        if self.alphabet_size < 2 || self.n_os == 0 || self.obs_dims == 0 {
            return Err(Error::Config("alphabet size, n_os and obs_dims must be positive".into()));
        }
        Ok(())
    }

    /// `P = S - s + 1`.
    pub fn phases(&self) -> usize {
        self.stages - self.stage + 1
    }

    /// Number of recurrent layers, `L - 1`.
    pub fn recurrent_layers(&self) -> usize {
        self.dims.len() - 1
    }

    /// `ℓ_{i+1} / 2` for recurrent layer `i` (0-based).
    pub fn half(&self, layer: usize) -> usize {
        self.dims[layer + 1] / 2
    }

    /// `⌊L_Y / N_os⌋ + T_RNN - 1`.
    pub fn capturable_memory(&self, t_rnn: usize) -> usize {
        self.l_y / self.n_os + t_rnn.saturating_sub(1)
    }

    /// Same widths for another stage.
    pub fn for_stage(&self, stage: usize) -> Self {
        Self { stage, ..self.clone() }
    }

    /// Parameters of the single-phase network with the same widths.
    pub fn classic_recurrent_parameters(&self) -> usize {
        (0..self.recurrent_layers())
            .map(|i| {
                let h = self.half(i);
                2 * (h * self.dims[i] + h + h * h + h)
            })
            .sum()
    }
}

/// `(Σ ℓ_i ℓ_{i+1} + ℓ_{i+1}^2 / 2, ℓ_L |A|)`.
fn recurrent_and_output(shape: &RnnShape) -> (u64, u64) {
    let rec = (0..shape.recurrent_layers())
        .map(|i| {
            let (a, b) = (shape.dims[i] as u64, shape.dims[i + 1] as u64);
            a * b + b * b / 2
        })
        .sum();
    let out = *shape.dims.last().unwrap() as u64 * shape.alphabet_size as u64;
    (rec, out)
}

/// Real multiplications per APP: `P` recurrent steps per output plus one
/// output layer evaluation.
pub fn count_rnn_multiplications(shape: &RnnShape) -> u64 {
    let (rec, out) = recurrent_and_output(shape);
    shape.phases() as u64 * rec + out
}

/// Multiplications of one unrolled step followed by an output evaluation;
/// the per-APP cost of a single-phase network.
pub fn c_mul_per_step(shape: &RnnShape) -> u64 {
    let (rec, out) = recurrent_and_output(shape);
    rec + out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    Forward,
    Backward,
}

/// Offsets of one cell's tensors in the flat parameter vector. Matrices are
/// row-major `(rows = ℓ_{i+1}/2)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CellOffsets {
    pub w_in: usize,
    pub b_in: usize,
    pub w_state: usize,
    pub b_state: usize,
}

/// Flat parameter layout: per layer, per direction, per phase a cell; then
/// the output matrix and bias.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParamLayout {
    cells: Vec<CellOffsets>,
    phases: usize,
    pub w_out: usize,
    pub b_out: usize,
    pub total: usize,
}

impl ParamLayout {
    pub fn new(shape: &RnnShape) -> Self {
        let phases = shape.phases();
        let mut cells = Vec::new();
        let mut at = 0;
        for i in 0..shape.recurrent_layers() {
            let (h, l) = (shape.half(i), shape.dims[i]);
            for _ in 0..2 * phases {
                let c = CellOffsets {
                    w_in: at,
                    b_in: at + h * l,
                    w_state: at + h * l + h,
                    b_state: at + h * l + h + h * h,
                };
                at = c.b_state + h;
                cells.push(c);
            }
        }
        let w_out = at;
        let b_out = w_out + shape.alphabet_size * shape.dims.last().unwrap();
        Self {
            cells,
            phases,
            w_out,
            b_out,
            total: b_out + shape.alphabet_size,
        }
    }

    #[inline]
    pub fn cell(&self, layer: usize, dir: Direction, phase: usize) -> CellOffsets {
        let d = match dir {
            Direction::Forward => 0,
            Direction::Backward => 1,
        };
        self.cells[(layer * 2 + d) * self.phases + phase]
    }
}

/// A trained (or freshly initialized) network for one stage and SNR.
#[derive(Clone, Debug, PartialEq)]
pub struct RnnModel {
    pub shape: RnnShape,
    pub encoding: InputEncoding,
    pub params: Vec<f64>,
    /// Channel inputs per inference sequence; the whole stage when 0.
    pub segment: usize,
}

impl RnnModel {
    pub fn zeros(shape: RnnShape, encoding: InputEncoding) -> Result<Self> {
        shape.validate()?;
        encoding.check(&shape)?;
        let total = ParamLayout::new(&shape).total;
        Ok(Self {
            shape,
            encoding,
            params: vec![0.0; total],
            segment: 0,
        })
    }

    /// Uniform in `±1/sqrt(fan_in)` per tensor; biases share their matrix's bound.
    pub fn random(shape: RnnShape, encoding: InputEncoding, seed: u64) -> Result<Self> {
        let mut model = Self::zeros(shape, encoding)?;
        let layout = model.layout();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut fill = |params: &mut [f64], fan_in: usize| {
            let bound = 1.0 / (fan_in as f64).sqrt();
            params.iter_mut().for_each(|p| *p = rng.gen_range(-bound..=bound));
        };
        let shape = model.shape.clone();
        for i in 0..shape.recurrent_layers() {
            let (h, l) = (shape.half(i), shape.dims[i]);
            for dir in [Direction::Forward, Direction::Backward] {
                for p in 0..shape.phases() {
                    let c = layout.cell(i, dir, p);
                    fill(&mut model.params[c.w_in..c.b_in + h], l);
                    fill(&mut model.params[c.w_state..c.b_state + h], h);
                }
            }
        }
        fill(&mut model.params[layout.w_out..layout.total], *shape.dims.last().unwrap());
        Ok(model)
    }

    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(&self.shape)
    }

    pub fn parameter_count(&self) -> usize {
        self.params.len()
    }
}
