use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use super::config::{ChannelConfig, FiberSpec, Nonlinearity, PulseNorm, PulseSpec, ReceiverSpec};
use crate::error::{Error, Result};

/// Odd-length FIR filter on the simulation grid, centered on its middle tap.
#[derive(Clone, Debug, PartialEq)]
pub struct FirFilter {
    taps: Vec<Complex64>,
    rate: usize,
}

impl FirFilter {
    pub fn new(taps: Vec<Complex64>, rate: usize) -> Result<Self> {
        if taps.len() % 2 == 0 {
            return Err(Error::Config(format!(
                "filter length must be odd, got {}",
                taps.len()
            )));
        }
        if rate == 0 {
            return Err(Error::Config("filter rate must be positive".into()));
        }
        Ok(Self { taps, rate })
    }

    pub fn from_real(taps: &[f64], rate: usize) -> Result<Self> {
        Self::new(taps.iter().map(|&t| Complex64::new(t, 0.0)).collect(), rate)
    }

    pub fn unit_impulse(rate: usize) -> Self {
        Self {
            taps: vec![Complex64::new(1.0, 0.0)],
            rate,
        }
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }

    /// `floor(K/2)`: index of the `t = 0` tap, and the one-sided support.
    pub fn center(&self) -> usize {
        self.taps.len() / 2
    }

    /// Samples per symbol of the grid the filter lives on.
    pub fn rate(&self) -> usize {
        self.rate
    }

    /// `floor((K-1)/N_sim)`.
    pub fn symbol_memory(&self) -> usize {
        (self.taps.len() - 1) / self.rate
    }

    /// Tap at signed offset `u` from the center; zero outside the support.
    #[inline]
    pub fn tap(&self, offset: i64) -> Complex64 {
        let idx = offset + self.center() as i64;
        if idx < 0 || idx >= self.taps.len() as i64 {
            Complex64::new(0.0, 0.0)
        } else {
            self.taps[idx as usize]
        }
    }

    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }

    pub fn is_real(&self) -> bool {
        self.taps.iter().all(|t| t.im == 0.0)
    }

    pub fn is_unit_impulse(&self) -> bool {
        let c = self.center();
        self.taps
            .iter()
            .enumerate()
            .all(|(i, t)| if i == c { *t == Complex64::new(1.0, 0.0) } else { *t == Complex64::new(0.0, 0.0) })
    }

    /// Centered ("same") convolution of `signal` with the filter.
    ///
    /// Zero input samples are skipped, so upsampled strings cost `K` per symbol.
    pub fn filter(&self, signal: &[Complex64]) -> Vec<Complex64> {
        let c = self.center() as i64;
        let len = signal.len() as i64;
        let mut out = vec![Complex64::new(0.0, 0.0); signal.len()];
        for (src, &value) in signal.iter().enumerate() {
            if value == Complex64::new(0.0, 0.0) {
                continue;
            }
            for (k, tap) in self.taps.iter().enumerate() {
                let dst = src as i64 + k as i64 - c;
                if dst >= 0 && dst < len {
                    out[dst as usize] += tap * value;
                }
            }
        }
        out
    }
}

/// `sin(pi x) / (pi x)`.
pub fn sinc(x: f64) -> f64 {
    if x == 0.0 {
        1.0
    } else if x.fract() == 0.0 {
        0.0
    } else {
        let px = PI * x;
        px.sin() / px
    }
}

/// Frequencies (rad/s) of the FFT bins of a `len`-point grid sampled at `sample_rate`.
fn fft_angular_frequencies(len: usize, sample_rate: f64) -> Vec<f64> {
    (0..len)
        .map(|k| {
            let signed = if k <= len / 2 { k as f64 } else { k as f64 - len as f64 };
            2.0 * PI * signed * sample_rate / len as f64
        })
        .collect()
}

/// Fiber all-pass response `exp(j (beta2/2) w^2 L)` on the FFT grid of `len` points.
pub fn dispersion_response(len: usize, sample_rate: f64, fiber: &FiberSpec) -> Vec<Complex64> {
    let beta2_l = fiber.beta2.s2_per_km() * fiber.length_km;
    fft_angular_frequencies(len, sample_rate)
        .into_iter()
        .map(|w| Complex64::from_polar(1.0, 0.5 * beta2_l * w * w))
        .collect()
}

/// Centered impulse response of the fiber on a `len`-tap grid.
pub fn fiber_impulse_response(len: usize, sample_rate: f64, fiber: &FiberSpec) -> Vec<Complex64> {
    let mut spec = dispersion_response(len, sample_rate, fiber);
    let mut planner = FftPlanner::new();
    planner.plan_fft_inverse(len).process(&mut spec);
    let scale = 1.0 / len as f64;
    let mut taps: Vec<Complex64> = spec.into_iter().map(|v| v * scale).collect();
    taps.rotate_right(len / 2);
    taps
}

/// Circularly disperses centered taps in the frequency domain (same length).
pub fn apply_dispersion(taps: &[Complex64], sample_rate: f64, fiber: &FiberSpec) -> Vec<Complex64> {
    let len = taps.len();
    let mut buf = taps.to_vec();
    // move the t=0 tap to index 0 before transforming
    buf.rotate_left(len / 2);
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    for (b, h) in buf.iter_mut().zip(dispersion_response(len, sample_rate, fiber)) {
        *b *= h;
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    let scale = 1.0 / len as f64;
    buf.iter_mut().for_each(|b| *b *= scale);
    buf.rotate_right(len / 2);
    buf
}

/// Transmit filter `g`: truncated sinc (or custom taps), fiber dispersion, energy normalization.
pub fn build_pulse(config: &ChannelConfig) -> Result<FirFilter> {
    let n_sim = config.n_sim;
    if n_sim == 0 {
        return Err(Error::Config("n_sim must be positive".into()));
    }
    if matches!(config.nonlinearity, Nonlinearity::SquareLaw) && n_sim < 2 && config.fiber.is_some() {
        return Err(Error::Config(
            "square-law detection of a dispersed signal needs n_sim >= 2".into(),
        ));
    }
    let taps: Vec<Complex64> = match &config.pulse {
        PulseSpec::Sinc { taps } => {
            if taps % 2 == 0 {
                return Err(Error::Config(format!("pulse tap count must be odd, got {taps}")));
            }
            let half = (*taps / 2) as i64;
            (-half..=half)
                .map(|u| Complex64::new(sinc(u as f64 / n_sim as f64), 0.0))
                .collect()
        }
        PulseSpec::Custom { taps } => {
            if taps.len() % 2 == 0 {
                return Err(Error::Config(format!(
                    "pulse tap count must be odd, got {}",
                    taps.len()
                )));
            }
            taps.iter().map(|&t| Complex64::new(t, 0.0)).collect()
        }
    };
    let mut taps = match &config.fiber {
        Some(fiber) => apply_dispersion(&taps, config.symbol_rate * n_sim as f64, fiber),
        None => taps,
    };
    if config.pulse_norm == PulseNorm::UnitEnergy {
        let energy: f64 = taps.iter().map(|t| t.norm_sqr()).sum();
        if energy <= 0.0 {
            return Err(Error::Config("pulse has zero energy".into()));
        }
        let scale = (n_sim as f64 / energy).sqrt();
        taps.iter_mut().for_each(|t| *t *= scale);
    }
    FirFilter::new(taps, n_sim)
}

/// Receiver filter `h`.
pub fn build_receiver(config: &ChannelConfig) -> Result<FirFilter> {
    let n_sim = config.n_sim;
    match &config.receiver {
        ReceiverSpec::Identity => Ok(FirFilter::unit_impulse(n_sim)),
        ReceiverSpec::Brickwall { bandwidth, taps } => {
            if taps % 2 == 0 {
                return Err(Error::Config(format!(
                    "receiver tap count must be odd, got {taps}"
                )));
            }
            if !(*bandwidth > 0.0) {
                return Err(Error::Config("receiver bandwidth must be positive".into()));
            }
            let half = (*taps / 2) as i64;
            let ratio = bandwidth / n_sim as f64;
            let h: Vec<f64> = (-half..=half).map(|u| ratio * sinc(ratio * u as f64)).collect();
            FirFilter::from_real(&h, n_sim)
        }
        ReceiverSpec::Custom { taps } => FirFilter::from_real(taps, n_sim),
    }
}
