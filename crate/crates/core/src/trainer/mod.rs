//! Cross-entropy training of one network per SIC stage: backpropagation
//! through both recurrent paths and ADAM on freshly simulated data.
//!
//! Training strings are non-overlapping segments of `T_RNN / P` in-stage
//! indices cut from fresh blocks; observation windows see the whole block,
//! the recurrence restarts from zero states in every segment. Earlier stages
//! enter with their true symbols.

mod adam;
mod grad;
#[cfg(test)]
mod tests;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use adam::Adam;
pub use grad::{backward, loss, parameter_path, GradientSet, LossValue, Sequence, PROB_FLOOR};

use crate::error::{Error, Result};
use crate::rnneq::{assemble_segment, load_model, InputEncoding, RnnModel, RnnShape};
use crate::sicframe::{SicPlan, StageView};
use crate::signalchain::{Block, DiscreteChannel};
use crate::util::derive_seed;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    /// ADAM step size `β_lr`.
    pub lr: f64,
    pub n_iter: usize,
    pub n_batch: usize,
    /// Sequential RNN inputs per training string.
    pub t_rnn: usize,
    #[serde(default = "default_segments")]
    pub segments_per_block: usize,
    /// Blocks used to fit the input standardization.
    #[serde(default = "default_norm_blocks")]
    pub norm_blocks: usize,
    #[serde(default)]
    pub warm_start: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    /// Fill the `wall_ms` column (breaks byte-identical logs).
    #[serde(default)]
    pub record_timing: bool,
}

fn default_segments() -> usize {
    4
}

fn default_norm_blocks() -> usize {
    16
}

impl TrainConfig {
    pub fn new(lr: f64, n_iter: usize, n_batch: usize, t_rnn: usize) -> Self {
        Self {
            lr,
            n_iter,
            n_batch,
            t_rnn,
            segments_per_block: default_segments(),
            norm_blocks: default_norm_blocks(),
            warm_start: None,
            seed: 0,
            record_timing: false,
        }
    }

    pub fn validate(&self, phases: usize) -> Result<()> {
        if !(self.lr > 0.0) || !self.lr.is_finite() {
            return Err(Error::Config("learning rate must be positive".into()));
        }
        if self.n_batch == 0 || self.segments_per_block == 0 || self.norm_blocks == 0 {
            return Err(Error::Config("n_batch, segments_per_block and norm_blocks must be positive".into()));
        }
        if self.t_rnn == 0 || self.t_rnn % phases != 0 {
            return Err(Error::Config(format!(
                "t_rnn = {} must be a positive multiple of the phase count {phases}",
                self.t_rnn
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrainLogRow {
    pub iter: usize,
    pub loss_bits: f64,
    pub grad_norm: f64,
    pub wall_ms: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainLog {
    pub rows: Vec<TrainLogRow>,
    /// Clamped target probabilities over the whole run.
    pub clamps: usize,
    /// Checkpoint the run started from, if any.
    pub warm_start: Option<PathBuf>,
}

impl TrainLog {
    pub const HEADER: &'static str = "iter,loss_bits,grad_norm,wall_ms";

    pub fn to_csv(&self) -> String {
        let mut s = String::from(Self::HEADER);
        s.push('\n');
        for r in &self.rows {
            let wall = r.wall_ms.map(|w| format!("{w:.3}")).unwrap_or_default();
            let _ = writeln!(s, "{},{:.9},{:.9},{}", r.iter, r.loss_bits, r.grad_norm, wall);
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    /// Mean loss over the last `k` iterations.
    pub fn tail_loss(&self, k: usize) -> f64 {
        let tail = &self.rows[self.rows.len().saturating_sub(k)..];
        tail.iter().map(|r| r.loss_bits).sum::<f64>() / tail.len().max(1) as f64
    }
}

fn check_channel(chan: &DiscreteChannel, shape: &RnnShape) -> Result<()> {
    shape.validate()?;
    if shape.n_os != chan.n_os() || shape.obs_dims != chan.dims() || shape.alphabet_size != chan.alphabet().size() {
        return Err(Error::Shape(format!(
            "network expects n_os {}, {} dims, |A| = {}; channel has {}, {}, {}",
            shape.n_os,
            shape.obs_dims,
            shape.alphabet_size,
            chan.n_os(),
            chan.dims(),
            chan.alphabet().size()
        )));
    }
    Ok(())
}

/// Segments of `n_seg` in-stage indices cut from `block`.
pub fn block_sequences(
    block: &Block,
    plan: SicPlan,
    shape: &RnnShape,
    enc: &InputEncoding,
    n_seg: usize,
) -> Result<Vec<Sequence>> {
    let view = StageView::new(plan, shape.stage, &block.x)?;
    (0..plan.per_stage() / n_seg)
        .map(|k| {
            let t0 = 1 + k * n_seg;
            let inputs = assemble_segment(&block.y, &view, shape, enc, t0, n_seg)?;
            let labels = (t0..t0 + n_seg).map(|t| block.x[plan.kappa(shape.stage, t) - 1]).collect();
            Ok(Sequence { inputs, labels })
        })
        .collect()
}

/// A batch of `n_batch` fresh training strings for one iteration.
pub fn training_batch(
    chan: &DiscreteChannel,
    shape: &RnnShape,
    enc: &InputEncoding,
    cfg: &TrainConfig,
    seed: u64,
) -> Result<Vec<Sequence>> {
    let n_seg = cfg.t_rnn / shape.phases();
    let plan = SicPlan::new(shape.stages, shape.stages * n_seg * cfg.segments_per_block)?;
    let blocks = cfg.n_batch.div_ceil(cfg.segments_per_block);
    let mut seqs: Vec<Sequence> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let blk = chan.draw_block(plan.block_len(), derive_seed(seed, b as u64))?;
            block_sequences(&blk, plan, shape, enc, n_seg)
        })
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .flatten()
        .collect();
    seqs.truncate(cfg.n_batch);
    Ok(seqs)
}

fn fit_encoding(chan: &DiscreteChannel, shape: &RnnShape, cfg: &TrainConfig) -> Result<InputEncoding> {
    let n = shape.stages * (cfg.t_rnn / shape.phases()) * cfg.segments_per_block;
    let base = derive_seed(cfg.seed, u64::MAX);
    let blocks: Vec<Block> = (0..cfg.norm_blocks)
        .map(|b| chan.draw_block(n, derive_seed(base, b as u64)))
        .collect::<Result<_>>()?;
    InputEncoding::fit(&blocks, chan.alphabet())
}

/// Trains the network for `shape.stage`, starting from `cfg.warm_start` when
/// that checkpoint exists.
pub fn train_stage(chan: &DiscreteChannel, shape: &RnnShape, cfg: &TrainConfig) -> Result<(RnnModel, TrainLog)> {
    let init = match &cfg.warm_start {
        Some(path) => match load_model(path) {
            Ok((model, _)) => Some((model, path.clone())),
            Err(Error::Missing(_)) => {
                log::warn!("warm-start checkpoint {} not found, initializing randomly", path.display());
                None
            }
            Err(e) => return Err(e),
        },
        None => None,
    };
    match init {
        Some((model, path)) => {
            let (model, mut log) = train_stage_from(chan, shape, cfg, Some(model))?;
            log.warm_start = Some(path);
            Ok((model, log))
        }
        None => train_stage_from(chan, shape, cfg, None),
    }
}

/// As [`train_stage`] with an in-memory starting point.
pub fn train_stage_from(
    chan: &DiscreteChannel,
    shape: &RnnShape,
    cfg: &TrainConfig,
    init: Option<RnnModel>,
) -> Result<(RnnModel, TrainLog)> {
    check_channel(chan, shape)?;
    cfg.validate(shape.phases())?;
    let encoding = fit_encoding(chan, shape, cfg)?;
    let mut model = match init {
        Some(mut m) => {
            if m.shape != *shape {
                return Err(Error::Shape(format!(
                    "warm-start network has dims {:?} for stage {}/{}, requested {:?} for {}/{}",
                    m.shape.dims, m.shape.stage, m.shape.stages, shape.dims, shape.stage, shape.stages
                )));
            }
            m.encoding = encoding;
            m
        }
        None => RnnModel::random(shape.clone(), encoding, derive_seed(cfg.seed, u64::MAX - 1))?,
    };
    model.segment = cfg.t_rnn / shape.phases();

    let limit = 4.0 * chan.alphabet().bits() as f64;
    let mut adam = Adam::new(cfg.lr, model.params.len());
    let mut log = TrainLog::default();
    let mut above = 0;
    let start = Instant::now();
    for iter in 0..cfg.n_iter {
        let batch = training_batch(chan, shape, &model.encoding, cfg, derive_seed(cfg.seed, iter as u64))?;
        let (value, grad) = backward(shape, &model.params, &batch)?;
        adam.step(&mut model.params, &grad.values);
        log.clamps += value.clamps;
        log.rows.push(TrainLogRow {
            iter,
            loss_bits: value.bits,
            grad_norm: grad.norm(),
            wall_ms: cfg.record_timing.then(|| start.elapsed().as_secs_f64() * 1e3),
        });
        above = if value.bits > limit { above + 1 } else { 0 };
        if above >= 100 {
            return Err(Error::Diverged {
                iter,
                loss: value.bits,
                limit,
                run: above,
            });
        }
    }
    if log.clamps > 0 {
        log::warn!("{} target probabilities clamped at {PROB_FLOOR:e} during training", log.clamps);
    }
    Ok((model, log))
}
