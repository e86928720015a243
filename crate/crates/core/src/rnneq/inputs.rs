use serde::{Deserialize, Serialize};

use super::shape::RnnShape;
use crate::error::{Error, Result};
use crate::sicframe::{ic_window, StageView};
use crate::signalchain::{Alphabet, Block};

/// Input standardization carried with a model: per-dimension observation
/// mean and standard deviation, and the values fed for known symbols
/// (alphabet levels scaled to unit RMS).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InputEncoding {
    pub obs_mean: Vec<f64>,
    pub obs_std: Vec<f64>,
    pub ic_levels: Vec<f64>,
}

impl InputEncoding {
    /// No observation scaling.
    pub fn identity(obs_dims: usize, alphabet: &Alphabet) -> Self {
        Self {
            obs_mean: vec![0.0; obs_dims],
            obs_std: vec![1.0; obs_dims],
            ic_levels: unit_rms_levels(alphabet),
        }
    }

    /// Observation statistics of the given blocks.
    pub fn fit(blocks: &[Block], alphabet: &Alphabet) -> Result<Self> {
        let dims = blocks.first().map(|b| b.dims).ok_or_else(|| Error::Shape("no blocks to fit".into()))?;
        let mut sum = vec![0.0; dims];
        let mut sq = vec![0.0; dims];
        let mut count = 0usize;
        for b in blocks {
            for s in b.y.chunks(dims) {
                for d in 0..dims {
                    sum[d] += s[d];
                    sq[d] += s[d] * s[d];
                }
                count += 1;
            }
        }
        let mean: Vec<f64> = sum.iter().map(|s| s / count as f64).collect();
        let std = sq
            .iter()
            .zip(&mean)
            .map(|(q, m)| {
                let v = q / count as f64 - m * m;
                if v > 1e-24 {
                    v.sqrt()
                } else {
                    1.0
                }
            })
            .collect();
        Ok(Self {
            obs_mean: mean,
            obs_std: std,
            ic_levels: unit_rms_levels(alphabet),
        })
    }

    pub(crate) fn check(&self, shape: &RnnShape) -> Result<()> {
        if self.obs_mean.len() != shape.obs_dims || self.obs_std.len() != shape.obs_dims {
            return Err(Error::Shape("encoding dimension does not match obs_dims".into()));
        }
        if self.ic_levels.len() != shape.alphabet_size {
            return Err(Error::Shape("encoding levels do not match the alphabet".into()));
        }
        if self.obs_std.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Numeric("observation std must be positive".into()));
        }
        Ok(())
    }
}

fn unit_rms_levels(alphabet: &Alphabet) -> Vec<f64> {
    let rms = alphabet.rms();
    alphabet.points().iter().map(|p| p / rms).collect()
}

/// Unrolled input vectors `r¹_{j,t}`: for each `t`, phases `j = s..S`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputTensor {
    pub width: usize,
    pub phases: usize,
    /// First in-stage index `t` (1-based).
    pub t_start: usize,
    /// Number of `t` values.
    pub count: usize,
    pub data: Vec<f64>,
}

impl InputTensor {
    pub fn steps(&self) -> usize {
        self.count * self.phases
    }

    #[inline]
    pub fn step(&self, tau: usize) -> &[f64] {
        &self.data[tau * self.width..(tau + 1) * self.width]
    }
}

/// Inputs for `t = t_start .. t_start + count` of the view's stage.
pub fn assemble_segment(
    y: &[f64],
    view: &StageView,
    shape: &RnnShape,
    enc: &InputEncoding,
    t_start: usize,
    count: usize,
) -> Result<InputTensor> {
    let plan = view.plan();
    let n = plan.block_len();
    let od = shape.obs_dims;
    if y.len() != shape.n_os * n * od {
        return Err(Error::Shape(format!(
            "{} observations, expected n_os * n * dims = {}",
            y.len(),
            shape.n_os * n * od
        )));
    }
    if view.stage() != shape.stage || plan.stages() != shape.stages {
        return Err(Error::Shape(format!(
            "network for stage {}/{} given a view of stage {}/{}",
            shape.stage,
            shape.stages,
            view.stage(),
            plan.stages()
        )));
    }
    if t_start == 0 || t_start + count - 1 > plan.per_stage() {
        return Err(Error::Shape(format!("segment t = {t_start}..+{count} outside 1..={}", plan.per_stage())));
    }
    let width = shape.dims[0];
    let before = (shape.l_y as i64 - 1) / 2;
    let after = shape.l_y as i64 - 1 - before;
    let samples = (shape.n_os * n) as i64;
    let phases = shape.phases();
    let mut data = Vec::with_capacity(count * phases * width);
    for t in t_start..t_start + count {
        for j in shape.stage..=shape.stages {
            let center = (shape.n_os * plan.kappa(j, t)) as i64;
            for u in -before..=after {
                let idx = center + u;
                if idx >= 1 && idx <= samples {
                    let s = (idx - 1) as usize * od;
                    for d in 0..od {
                        data.push((y[s + d] - enc.obs_mean[d]) / enc.obs_std[d]);
                    }
                } else {
                    data.extend(std::iter::repeat(0.0).take(od));
                }
            }
            for k in ic_window(j, t, view, shape.l_ic) {
                data.push(match k {
                    Some(k) => enc.ic_levels[view.known(k).unwrap()],
                    None => 0.0,
                });
            }
        }
    }
    Ok(InputTensor {
        width,
        phases,
        t_start,
        count,
        data,
    })
}

/// All `N (S - s + 1)` inputs of the stage.
pub fn assemble_inputs(y: &[f64], view: &StageView, shape: &RnnShape, enc: &InputEncoding) -> Result<InputTensor> {
    assemble_segment(y, view, shape, enc, 1, view.plan().per_stage())
}
