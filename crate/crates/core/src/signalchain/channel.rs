use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::alphabet::Alphabet;
use super::config::{ChannelConfig, NoiseKind, Nonlinearity, Precoding};
use super::filter::{build_pulse, build_receiver, FirFilter};
use crate::error::{Error, Result};

pub type ComplexSample = Complex64;

/// Memoryless nonlinearity applied sample by sample on the simulation grid.
pub fn apply_nonlinearity(z: Complex64, kind: &Nonlinearity) -> Complex64 {
    match *kind {
        Nonlinearity::SquareLaw => Complex64::new(z.norm_sqr(), 0.0),
        Nonlinearity::Identity => z,
        Nonlinearity::Rapp { p, x_sat } => {
            let r = z.norm();
            if r == 0.0 {
                return z;
            }
            let ratio = r / x_sat;
            let out = if p.is_infinite() {
                r.min(x_sat)
            } else if ratio > 1.0 {
                // same formula, rearranged to avoid overflow of ratio^(2p)
                x_sat / (1.0 + ratio.powf(-2.0 * p)).powf(1.0 / (2.0 * p))
            } else {
                r / (1.0 + ratio.powf(2.0 * p)).powf(1.0 / (2.0 * p))
            };
            z * (out / r)
        }
    }
}

/// Real multiplications charged for one evaluation of the nonlinearity.
pub fn nonlinearity_multiplications(kind: &Nonlinearity) -> u64 {
    match kind {
        Nonlinearity::SquareLaw => 2,
        Nonlinearity::Identity => 0,
        // |z|^2, one compression factor, complex-by-real rescale
        Nonlinearity::Rapp { .. } => 5,
    }
}

/// One transmitted block and its observations.
///
/// `y` is composite-real: `dims` reals per receiver sample (re, im interleaved
/// when `dims == 2`), `N_os` samples per symbol.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Block {
    /// Transmitted symbol indices into the alphabet.
    pub x: Vec<usize>,
    pub y: Vec<f64>,
    pub dims: usize,
    pub seed: u64,
}

impl Block {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    /// Number of receiver samples.
    pub fn samples(&self) -> usize {
        self.y.len() / self.dims
    }
}

/// Discrete-time ground-truth channel: upsample, `g`, nonlinearity, `h`,
/// decimate by `d`, add noise.
#[derive(Clone, Debug)]
pub struct DiscreteChannel {
    config: ChannelConfig,
    alphabet: Alphabet,
    g: FirFilter,
    h: FirFilter,
    decimation: usize,
    amplitude: f64,
    dims: usize,
    noise_std: f64,
    direct_noise: bool,
}

impl DiscreteChannel {
    pub fn new(config: ChannelConfig) -> Result<Self> {
        if config.n_os == 0 || config.n_sim == 0 {
            return Err(Error::Config("n_os and n_sim must be positive".into()));
        }
        if config.n_sim % config.n_os != 0 {
            return Err(Error::Config(format!(
                "d = n_sim / n_os must be a positive integer (n_sim = {}, n_os = {})",
                config.n_sim, config.n_os
            )));
        }
        if !(config.noise_variance >= 0.0) || !config.noise_variance.is_finite() {
            return Err(Error::Config("noise_variance must be finite and >= 0".into()));
        }
        if !config.tx_power_db.is_finite() {
            return Err(Error::Config("tx_power_db must be finite".into()));
        }
        let alphabet = Alphabet::new(config.alphabet, config.order)?;
        let g = build_pulse(&config)?;
        let h = build_receiver(&config)?;
        let signal_complex = match config.nonlinearity {
            Nonlinearity::SquareLaw => !h.is_real(),
            _ => !(g.is_real() && h.is_real()),
        };
        let dims = match config.noise {
            NoiseKind::CircularComplex => 2,
            NoiseKind::Real if signal_complex => {
                return Err(Error::Config(
                    "real noise requires a real-valued signal after the receiver filter; use circular-complex noise"
                        .into(),
                ))
            }
            NoiseKind::Real => 1,
        };
        let tx_power = 10f64.powf(config.tx_power_db / 10.0);
        let per_symbol_energy = g.energy() / config.n_sim as f64;
        let amplitude = (tx_power / (alphabet.mean_square() * per_symbol_energy)).sqrt();
        let noise_std = match config.noise {
            NoiseKind::Real => config.noise_variance.sqrt(),
            NoiseKind::CircularComplex => (config.noise_variance / 2.0).sqrt(),
        };
        Ok(Self {
            decimation: config.n_sim / config.n_os,
            direct_noise: h.is_unit_impulse(),
            alphabet,
            g,
            h,
            amplitude,
            dims,
            noise_std,
            config,
        })
    }

    pub fn config(&self) -> &ChannelConfig {
        &self.config
    }

    pub fn alphabet(&self) -> &Alphabet {
        &self.alphabet
    }

    pub fn pulse(&self) -> &FirFilter {
        &self.g
    }

    pub fn receiver(&self) -> &FirFilter {
        &self.h
    }

    pub fn n_os(&self) -> usize {
        self.config.n_os
    }

    pub fn n_sim(&self) -> usize {
        self.config.n_sim
    }

    /// Reals per receiver sample (1 or 2).
    pub fn dims(&self) -> usize {
        self.dims
    }

    /// Reals per symbol slot, `N_os * dims`.
    pub fn slot_width(&self) -> usize {
        self.config.n_os * self.dims
    }

    /// Scale applied to alphabet levels to reach the configured `P_tx`.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn tx_power(&self) -> f64 {
        10f64.powf(self.config.tx_power_db / 10.0)
    }

    /// Noise variance per real observation dimension.
    pub fn noise_variance_per_dim(&self) -> f64 {
        self.noise_std * self.noise_std
    }

    pub fn uses_direct_noise(&self) -> bool {
        self.direct_noise
    }

    /// Same channel at another transmit power.
    pub fn with_tx_power_db(&self, db: f64) -> Result<Self> {
        Self::new(self.config.clone().with_tx_power_db(db))
    }

    pub fn memory_g(&self) -> usize {
        self.g.symbol_memory()
    }

    pub fn memory_h(&self) -> usize {
        self.h.symbol_memory()
    }

    /// Total symbol memory `K~ = K~_g + K~_h`.
    pub fn total_memory(&self) -> usize {
        self.memory_g() + self.memory_h()
    }

    /// `floor(K_g/2) + floor(K_h/2)` zero symbols on each side of a block.
    pub fn guard_symbols(&self) -> usize {
        self.g.center() + self.h.center()
    }

    /// Split of a context of `memory` symbols into (before, after) the slot symbol.
    pub fn context_split(memory: usize) -> (usize, usize) {
        (memory / 2, memory - memory / 2)
    }

    /// Pre-nonlinearity waveform on the guarded simulation grid for the given
    /// (already scaled) levels.
    fn shaped(&self, levels: &[f64]) -> (Vec<Complex64>, usize) {
        let guard = self.guard_symbols();
        let n_sim = self.config.n_sim;
        let mut up = vec![Complex64::new(0.0, 0.0); (levels.len() + 2 * guard) * n_sim];
        for (k, &a) in levels.iter().enumerate() {
            up[(k + guard) * n_sim] = Complex64::new(a, 0.0);
        }
        (self.g.filter(&up), guard * n_sim)
    }

    /// Noiseless receiver samples for unscaled levels (zeros outside the block).
    pub fn noiseless(&self, levels: &[f64]) -> Vec<Complex64> {
        let scaled: Vec<f64> = levels.iter().map(|a| a * self.amplitude).collect();
        let (x, offset) = self.shaped(&scaled);
        let z: Vec<Complex64> = x
            .iter()
            .map(|&v| apply_nonlinearity(v, &self.config.nonlinearity))
            .collect();
        let w = if self.h.is_unit_impulse() { z } else { self.h.filter(&z) };
        (0..levels.len() * self.config.n_os)
            .map(|k| w[offset + self.decimation * k])
            .collect()
    }

    /// Average power of the shaped waveform for the given transmitted levels,
    /// `sum |X_u|^2 / (n N_sim)` over the whole guarded grid.
    pub fn transmit_power(&self, levels: &[f64]) -> Result<f64> {
        if levels.is_empty() {
            return Err(Error::Shape("transmit_power of an empty block".into()));
        }
        let (x, _) = self.shaped(levels);
        Ok(x.iter().map(|v| v.norm_sqr()).sum::<f64>() / (levels.len() * self.config.n_sim) as f64)
    }

    /// Noise for `samples` receiver samples.
    pub fn sample_noise<R: Rng>(&self, samples: usize, rng: &mut R) -> Vec<Complex64> {
        let draw = |rng: &mut R, std: f64| -> Complex64 {
            match self.config.noise {
                NoiseKind::Real => Complex64::new(std * rng.sample::<f64, _>(StandardNormal), 0.0),
                NoiseKind::CircularComplex => Complex64::new(
                    std * rng.sample::<f64, _>(StandardNormal),
                    std * rng.sample::<f64, _>(StandardNormal),
                ),
            }
        };
        if self.direct_noise {
            return (0..samples).map(|_| draw(rng, self.noise_std)).collect();
        }
        // white noise on the simulation grid, shaped by h, then decimated
        let d = self.decimation;
        let pad = self.h.center();
        let len = samples * d + 2 * pad;
        let std = self.noise_std / self.h.energy().sqrt();
        let white: Vec<Complex64> = (0..len).map(|_| draw(rng, std)).collect();
        let filtered = self.h.filter(&white);
        (0..samples).map(|k| filtered[pad + d * k]).collect()
    }

    /// Simulates one block of transmitted symbol indices; noise drawn from `seed`.
    pub fn simulate_block(&self, x: &[usize], seed: u64) -> Result<Block> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.simulate_with_rng(x, seed, &mut rng)
    }

    fn simulate_with_rng(&self, x: &[usize], seed: u64, rng: &mut ChaCha8Rng) -> Result<Block> {
        if x.is_empty() {
            return Err(Error::Shape("block must contain at least one symbol".into()));
        }
        if let Some(&bad) = x.iter().find(|&&i| i >= self.alphabet.size()) {
            return Err(Error::Shape(format!(
                "symbol index {bad} outside alphabet of size {}",
                self.alphabet.size()
            )));
        }
        let z = self.noiseless(&self.alphabet.levels(x));
        let noise = self.sample_noise(z.len(), rng);
        let mut y = Vec::with_capacity(z.len() * self.dims);
        for (k, (s, n)) in z.iter().zip(&noise).enumerate() {
            let v = s + n;
            if !v.re.is_finite() || !v.im.is_finite() {
                return Err(Error::Numeric(format!("non-finite receiver sample at index {k}")));
            }
            y.push(v.re);
            if self.dims == 2 {
                y.push(v.im);
            }
        }
        Ok(Block {
            x: x.to_vec(),
            y,
            dims: self.dims,
            seed,
        })
    }

    /// Draws u.i.i.d. data, applies the configured precoding and simulates.
    pub fn draw_block(&self, n: usize, seed: u64) -> Result<Block> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let size = self.alphabet.size();
        let data: Vec<usize> = (0..n).map(|_| rng.gen_range(0..size)).collect();
        let x = match self.config.precoding {
            Precoding::DifferentialPhase => differential_precode(&data, &self.alphabet),
            Precoding::None => data,
        };
        self.simulate_with_rng(&x, seed, &mut rng)
    }

    /// Real multiplications for one direct evaluation of a slot's noiseless
    /// outputs from a context of `context_len` symbols.
    pub fn slot_eval_multiplications(&self, context_len: usize) -> u64 {
        let c = context_len as u64;
        let per_x = 2 * c + nonlinearity_multiplications(&self.config.nonlinearity) + 4;
        c + self.config.n_os as u64 * self.h.len() as u64 * per_x
    }

    /// Noiseless composite-real outputs of the slot of symbol `context[center]`,
    /// with every symbol outside `context` taken as zero. Evaluates the
    /// oversampled model sample by sample, without building the waveform.
    pub fn slot_outputs(&self, context: &[f64], center: usize, out: &mut [f64], muls: &mut u64) {
        debug_assert_eq!(out.len(), self.slot_width());
        let n_sim = self.config.n_sim as i64;
        let scaled: Vec<f64> = context.iter().map(|a| a * self.amplitude).collect();
        *muls += context.len() as u64;
        let half_h = self.h.center() as i64;
        let per_x = 2 * context.len() as u64 + nonlinearity_multiplications(&self.config.nonlinearity) + 4;
        for i in 0..self.config.n_os {
            let u = (self.decimation * i) as i64;
            let mut acc = Complex64::new(0.0, 0.0);
            for v in -half_h..=half_h {
                let w = u - v;
                let mut xs = Complex64::new(0.0, 0.0);
                for (j, &a) in scaled.iter().enumerate() {
                    let pos = j as i64 - center as i64;
                    xs += self.g.tap(w - pos * n_sim) * a;
                }
                acc += self.h.tap(v) * apply_nonlinearity(xs, &self.config.nonlinearity);
                *muls += per_x;
            }
            if self.dims == 2 {
                out[2 * i] = acc.re;
                out[2 * i + 1] = acc.im;
            } else {
                out[i] = acc.re;
            }
        }
    }
}

/// Differential sign encoding for bipolar ASK: magnitudes pass through, the
/// emitted sign is the running product of data signs. No-op for PAM.
pub fn differential_precode(x: &[usize], alphabet: &Alphabet) -> Vec<usize> {
    if alphabet.kind() != super::AlphabetKind::BipolarAsk {
        return x.to_vec();
    }
    let half = alphabet.size() / 2;
    let mut sign_negative = false;
    x.iter()
        .map(|&i| {
            let (neg, mag) = split_sign(i, half);
            sign_negative ^= neg;
            join_sign(sign_negative, mag, half)
        })
        .collect()
}

/// Inverse of [`differential_precode`].
pub fn differential_decode(x: &[usize], alphabet: &Alphabet) -> Vec<usize> {
    if alphabet.kind() != super::AlphabetKind::BipolarAsk {
        return x.to_vec();
    }
    let half = alphabet.size() / 2;
    let mut prev_negative = false;
    x.iter()
        .map(|&i| {
            let (neg, mag) = split_sign(i, half);
            let data_neg = neg ^ prev_negative;
            prev_negative = neg;
            join_sign(data_neg, mag, half)
        })
        .collect()
}

fn split_sign(index: usize, half: usize) -> (bool, usize) {
    if index < half {
        (true, half - 1 - index)
    } else {
        (false, index - half)
    }
}

fn join_sign(negative: bool, magnitude: usize, half: usize) -> usize {
    if negative {
        half - 1 - magnitude
    } else {
        half + magnitude
    }
}
