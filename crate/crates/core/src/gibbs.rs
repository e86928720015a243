//! Bit-wise Gibbs sampling of symbol APPs under the truncated auxiliary
//! channel.
//!
//! Slot means are evaluated on the fly from the `Ñ + 1` symbol context
//! (zeros outside), the same law as [`crate::trellis::AuxChannel`] tabulates,
//! so memories far beyond table range stay usable. Resampling one bit only
//! touches the `Ñ + 1` slots whose context contains its symbol.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{AppDetector, AppMatrix};
use crate::error::{Error, Result};
use crate::sicframe::StageView;
use crate::signalchain::{Block, DiscreteChannel};
use crate::util::{derive_seed, gray_decode, gray_encode};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsConfig {
    /// Auxiliary memory `Ñ`.
    pub memory: usize,
    /// Sweeps per chain.
    pub n_iter: usize,
    /// Independent chains.
    pub n_par: usize,
    /// Leading sweeps left out of the counts.
    #[serde(default = "default_burn_in")]
    pub burn_in: usize,
    /// Metric variance per real dimension; the channel's when absent.
    #[serde(default)]
    pub noise_variance: Option<f64>,
}

fn default_burn_in() -> usize {
    25
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self {
            memory: 21,
            n_iter: 125,
            n_par: 64,
            burn_in: default_burn_in(),
            noise_variance: None,
        }
    }
}

impl GibbsConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter <= self.burn_in {
            return Err(Error::Config(format!(
                "gibbs n_iter ({}) must exceed burn_in ({})",
                self.n_iter, self.burn_in
            )));
        }
        if self.n_par == 0 {
            return Err(Error::Config("gibbs needs at least one chain".into()));
        }
        if let Some(v) = self.noise_variance {
            if !(v > 0.0) {
                return Err(Error::Config("gibbs noise_variance must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Bit labels of every symbol in the block; pinned ones never change.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BitState {
    labels: Vec<usize>,
}

impl BitState {
    pub fn from_symbols(x: &[usize]) -> Self {
        Self {
            labels: x.iter().map(|&a| gray_encode(a)).collect(),
        }
    }

    pub fn symbol(&self, k: usize) -> usize {
        gray_decode(self.labels[k])
    }

    pub fn symbols(&self) -> Vec<usize> {
        self.labels.iter().map(|&l| gray_decode(l)).collect()
    }
}

struct Local<'a> {
    chan: &'a DiscreteChannel,
    y: &'a [f64],
    levels: &'a [f64],
    memory: usize,
    pre: usize,
    post: usize,
    scale: f64,
    context: Vec<f64>,
    out: Vec<f64>,
    muls: u64,
}

impl Local<'_> {
    /// Unnormalized log-likelihood of the slots touching position `p`.
    fn energy(&mut self, x: &BitState, p: usize) -> f64 {
        let n = x.labels.len();
        let w = self.out.len();
        let first = p.saturating_sub(self.post);
        let last = (p + self.pre).min(n - 1);
        let mut total = 0.0;
        for c in first..=last {
            for q in 0..=self.memory {
                let pos = c as i64 - self.pre as i64 + q as i64;
                self.context[q] = if pos < 0 || pos >= n as i64 {
                    0.0
                } else {
                    self.levels[x.symbol(pos as usize)]
                };
            }
            self.chan.slot_outputs(&self.context, self.pre, &mut self.out, &mut self.muls);
            let obs = &self.y[c * w..(c + 1) * w];
            let d2: f64 = obs.iter().zip(&self.out).map(|(a, b)| (a - b) * (a - b)).sum();
            total -= d2 * self.scale;
            self.muls += w as u64 + 1;
        }
        total
    }
}

/// One chain: `visit` sees the state after every sweep past burn-in.
fn run_chain(
    chan: &DiscreteChannel,
    y: &[f64],
    pins: &[Option<usize>],
    cfg: &GibbsConfig,
    seed: u64,
    mut visit: impl FnMut(&BitState),
) -> u64 {
    let m = chan.alphabet().size();
    let bits = chan.alphabet().bits();
    let (pre, post) = DiscreteChannel::context_split(cfg.memory);
    let var = cfg.noise_variance.unwrap_or_else(|| chan.noise_variance_per_dim());
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let init: Vec<usize> = pins.iter().map(|p| p.unwrap_or_else(|| rng.gen_range(0..m))).collect();
    let mut state = BitState::from_symbols(&init);
    let free: Vec<usize> = (0..pins.len()).filter(|&k| pins[k].is_none()).collect();
    let mut local = Local {
        chan,
        y,
        levels: chan.alphabet().points(),
        memory: cfg.memory,
        pre,
        post,
        scale: 0.5 / var,
        context: vec![0.0; cfg.memory + 1],
        out: vec![0.0; chan.slot_width()],
        muls: 0,
    };
    for sweep in 0..cfg.n_iter {
        for &p in &free {
            for k in 0..bits {
                let label = state.labels[p];
                state.labels[p] = label & !(1 << k);
                let e0 = local.energy(&state, p);
                state.labels[p] = label | (1 << k);
                let e1 = local.energy(&state, p);
                let p1 = 1.0 / (1.0 + (e0 - e1).exp());
                if rng.gen::<f64>() >= p1 {
                    state.labels[p] = label & !(1 << k);
                }
            }
        }
        if sweep >= cfg.burn_in {
            visit(&state);
        }
    }
    local.muls
}

/// Gibbs APP estimates for the 1-based serial `targets`, with pinned
/// positions held fixed. Pinned targets get exact point masses.
pub fn gibbs_posteriors(
    chan: &DiscreteChannel,
    y: &[f64],
    pins: &[Option<usize>],
    targets: &[usize],
    cfg: &GibbsConfig,
    seed: u64,
) -> Result<AppMatrix> {
    cfg.validate()?;
    let n = pins.len();
    let m = chan.alphabet().size();
    if n == 0 || y.len() != n * chan.slot_width() {
        return Err(Error::Shape(format!(
            "{} observations for {n} symbols of width {}",
            y.len(),
            chan.slot_width()
        )));
    }
    if let Some(&k) = targets.iter().find(|&&k| k == 0 || k > n) {
        return Err(Error::Shape(format!("target {k} outside block of {n}")));
    }
    let per_chain: Vec<(Vec<u64>, u64)> = (0..cfg.n_par)
        .into_par_iter()
        .map(|chain| {
            let mut counts = vec![0u64; targets.len() * m];
            let muls = run_chain(chan, y, pins, cfg, derive_seed(seed, chain as u64), |st| {
                for (r, &k) in targets.iter().enumerate() {
                    counts[r * m + st.symbol(k - 1)] += 1;
                }
            });
            (counts, muls)
        })
        .collect();
    let mut counts = vec![0u64; targets.len() * m];
    let mut muls = 0;
    for (c, mu) in per_chain {
        counts.iter_mut().zip(c).for_each(|(a, b)| *a += b);
        muls += mu;
    }
    let mut probs = vec![0.0; targets.len() * m];
    for (r, &k) in targets.iter().enumerate() {
        let row = &mut probs[r * m..(r + 1) * m];
        match pins[k - 1] {
            Some(a) => row[a] = 1.0,
            None => {
                for (a, p) in row.iter_mut().enumerate() {
                    *p = (counts[r * m + a] + 1) as f64;
                }
            }
        }
    }
    Ok(AppMatrix::from_probs(targets.to_vec(), m, probs)?.with_multiplications(muls))
}

pub fn gibbs_app(chan: &DiscreteChannel, y: &[f64], view: &StageView, cfg: &GibbsConfig, seed: u64) -> Result<AppMatrix> {
    gibbs_posteriors(chan, y, view.pins(), &view.targets(), cfg, seed)
}

/// Real multiplications per APP when every resampled symbol is at least
/// `Ñ` symbols from the block edges: `phases` unknown symbols per APP, `m`
/// bits each, two hypotheses over `Ñ + 1` slots per bit, each slot a direct
/// evaluation plus its squared distance and scaling.
pub fn count_gs_multiplications(chan: &DiscreteChannel, cfg: &GibbsConfig, phases: usize) -> u64 {
    let slot = chan.slot_eval_multiplications(cfg.memory + 1) + chan.slot_width() as u64 + 1;
    phases as u64 * chan.alphabet().bits() as u64 * (cfg.n_iter * cfg.n_par) as u64 * 2 * (cfg.memory as u64 + 1) * slot
}

/// [`AppDetector`] wrapping [`gibbs_app`].
#[derive(Clone, Debug)]
pub struct GibbsDetector {
    pub channel: DiscreteChannel,
    pub config: GibbsConfig,
}

impl AppDetector for GibbsDetector {
    fn id(&self) -> String {
        format!("gibbs-N{}", self.config.memory)
    }

    fn detect(&self, block: &Block, view: &StageView, seed: u64) -> Result<AppMatrix> {
        gibbs_app(&self.channel, &block.y, view, &self.config, seed)
    }

    fn multiplications_per_app(&self, view: &StageView) -> u64 {
        count_gs_multiplications(&self.channel, &self.config, view.phases())
    }
}
