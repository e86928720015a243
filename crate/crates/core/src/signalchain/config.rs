use std::fmt;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use super::alphabet::AlphabetKind;

/// Transmit pulse before dispersion.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PulseSpec {
    /// `sinc(B t)` sampled on the simulation grid and truncated to `taps` taps.
    Sinc { taps: usize },
    /// Explicit real taps on the simulation grid, centered.
    Custom { taps: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PulseNorm {
    /// Scale `g` so that `sum |g_u|^2 = N_sim` (unit energy per symbol period).
    UnitEnergy,
    /// Keep the taps as constructed.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Nonlinearity {
    /// Photodiode: `|z|^2`.
    SquareLaw,
    /// Solid-state amplifier magnitude compression with phase preserved.
    Rapp { p: f64, x_sat: f64 },
    Identity,
}

impl Nonlinearity {
    pub fn rapp_default() -> Self {
        Nonlinearity::Rapp { p: 3.0, x_sat: 1.0 }
    }
}

/// Receiver front-end filter `h`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ReceiverSpec {
    /// Unit impulse.
    Identity,
    /// Brickwall low-pass of two-sided bandwidth `bandwidth * B`, truncated to `taps` taps.
    Brickwall { bandwidth: f64, taps: usize },
    Custom { taps: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseKind {
    /// Real Gaussian, variance `sigma^2` per sample.
    Real,
    /// Circularly-symmetric complex Gaussian, `E|N|^2 = sigma^2`.
    CircularComplex,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Precoding {
    None,
    DifferentialPhase,
}

/// Group-velocity dispersion in s^2/km.
///
/// Deserializes from a number (taken as s^2/km) or from a string carrying a
/// unit, e.g. `"-2.168e-23 s^2/km"` or `"-21.68 ps^2/km"`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Beta2(pub f64);

impl Beta2 {
    pub fn s2_per_km(self) -> f64 {
        self.0
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let text = text.trim();
        let (value, unit) = match text.find(char::is_whitespace) {
            Some(pos) => (&text[..pos], text[pos..].trim()),
            None => (text, "s^2/km"),
        };
        let value: f64 = value
            .parse()
            .map_err(|_| format!("beta2: cannot parse number `{value}`"))?;
        let scale = match unit {
            "s^2/km" | "s2/km" => 1.0,
            "ps^2/km" | "ps2/km" => 1e-24,
            "fs^2/km" | "fs2/km" => 1e-30,
            "s^2/m" | "s2/m" => 1e3,
            other => {
                return Err(format!(
                    "beta2: unknown unit `{other}` (expected s^2/km, ps^2/km, fs^2/km or s^2/m)"
                ))
            }
        };
        if !value.is_finite() {
            return Err("beta2: value must be finite".into());
        }
        Ok(Beta2(value * scale))
    }
}

impl Serialize for Beta2 {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format!("{:e} s^2/km", self.0))
    }
}

impl<'de> Deserialize<'de> for Beta2 {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        struct Beta2Visitor;
        impl<'de> Visitor<'de> for Beta2Visitor {
            type Value = Beta2;
            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number in s^2/km or a string like \"-2.168e-23 s^2/km\"")
            }
            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Beta2, E> {
                Ok(Beta2(v))
            }
            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Beta2, E> {
                Ok(Beta2(v as f64))
            }
            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Beta2, E> {
                Ok(Beta2(v as f64))
            }
            fn visit_str<E: de::Error>(self, v: &str) -> Result<Beta2, E> {
                Beta2::parse(v).map_err(E::custom)
            }
        }
        d.deserialize_any(Beta2Visitor)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FiberSpec {
    pub length_km: f64,
    pub beta2: Beta2,
    #[serde(default = "default_wavelength")]
    pub wavelength_nm: f64,
}

fn default_wavelength() -> f64 {
    1550.0
}

/// Everything needed to build a [`DiscreteChannel`](super::DiscreteChannel).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelConfig {
    pub alphabet: AlphabetKind,
    pub order: usize,
    #[serde(default = "default_symbol_rate")]
    pub symbol_rate: f64,
    pub n_os: usize,
    pub n_sim: usize,
    pub pulse: PulseSpec,
    #[serde(default = "default_norm")]
    pub pulse_norm: PulseNorm,
    pub nonlinearity: Nonlinearity,
    #[serde(default)]
    pub fiber: Option<FiberSpec>,
    #[serde(default = "default_receiver")]
    pub receiver: ReceiverSpec,
    #[serde(default = "default_noise")]
    pub noise: NoiseKind,
    #[serde(default = "default_noise_variance")]
    pub noise_variance: f64,
    #[serde(default)]
    pub tx_power_db: f64,
    #[serde(default = "default_precoding")]
    pub precoding: Precoding,
}

fn default_symbol_rate() -> f64 {
    35e9
}
fn default_norm() -> PulseNorm {
    PulseNorm::UnitEnergy
}
fn default_receiver() -> ReceiverSpec {
    ReceiverSpec::Identity
}
fn default_noise() -> NoiseKind {
    NoiseKind::Real
}
fn default_noise_variance() -> f64 {
    1.0
}
fn default_precoding() -> Precoding {
    Precoding::None
}

impl ChannelConfig {
    /// Short-reach IM/DD link: 35 GBd sinc pulse, 30 km SSMF, square-law
    /// detection, `N_os = N_sim = 2`, 303-tap transmit filter, brickwall
    /// receiver at `2B` (a unit impulse on this grid) and real AWGN with `sigma^2 = 1`.
    pub fn short_reach(kind: AlphabetKind, order: usize) -> Self {
        Self {
            alphabet: kind,
            order,
            symbol_rate: 35e9,
            n_os: 2,
            n_sim: 2,
            pulse: PulseSpec::Sinc {
                taps: 151 * 2 + 1,
            },
            pulse_norm: PulseNorm::UnitEnergy,
            nonlinearity: Nonlinearity::SquareLaw,
            fiber: Some(FiberSpec {
                length_km: 30.0,
                beta2: Beta2(-2.168e-23),
                wavelength_nm: 1550.0,
            }),
            receiver: ReceiverSpec::Brickwall {
                bandwidth: 2.0,
                taps: 1,
            },
            noise: NoiseKind::Real,
            noise_variance: 1.0,
            tx_power_db: 0.0,
            precoding: match kind {
                AlphabetKind::BipolarAsk => Precoding::DifferentialPhase,
                AlphabetKind::UnipolarPam => Precoding::None,
            },
        }
    }

    /// Small dispersive square-law channel with total memory 3 used by the
    /// desk-scale experiments: 7-tap sinc at `N_sim = 2` through 4 km of SSMF.
    pub fn toy_dispersive(kind: AlphabetKind, order: usize) -> Self {
        Self {
            pulse: PulseSpec::Sinc { taps: 7 },
            fiber: Some(FiberSpec {
                length_km: 4.0,
                beta2: Beta2(-2.168e-23),
                wavelength_nm: 1550.0,
            }),
            receiver: ReceiverSpec::Identity,
            precoding: Precoding::None,
            ..Self::short_reach(kind, order)
        }
    }

    /// Memoryless real channel `y = a x + n`.
    pub fn memoryless(kind: AlphabetKind, order: usize) -> Self {
        Self {
            alphabet: kind,
            order,
            symbol_rate: 35e9,
            n_os: 1,
            n_sim: 1,
            pulse: PulseSpec::Custom { taps: vec![1.0] },
            pulse_norm: PulseNorm::UnitEnergy,
            nonlinearity: Nonlinearity::Identity,
            fiber: None,
            receiver: ReceiverSpec::Identity,
            noise: NoiseKind::Real,
            noise_variance: 1.0,
            tx_power_db: 0.0,
            precoding: Precoding::None,
        }
    }

    pub fn with_tx_power_db(mut self, db: f64) -> Self {
        self.tx_power_db = db;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn beta2_units() {
        assert_eq!(Beta2::parse("-2.168e-23 s^2/km").unwrap().0, -2.168e-23);
        assert!((Beta2::parse("-21.68 ps^2/km").unwrap().0 + 2.168e-23).abs() < 1e-35);
        assert_eq!(Beta2::parse("-2.168e-23").unwrap().0, -2.168e-23);
        let err = Beta2::parse("-2.168e-23 furlongs").unwrap_err();
        assert!(err.contains("beta2"));
    }

    #[test]
    fn config_toml_roundtrip() {
        let cfg = ChannelConfig::short_reach(AlphabetKind::BipolarAsk, 4);
        let text = toml::to_string(&cfg).unwrap();
        let back: ChannelConfig = toml::from_str(&text).unwrap();
        assert_eq!(cfg, back);
    }
}
