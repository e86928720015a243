use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::gibbs::GibbsConfig;
use crate::rates::EvalConfig;
use crate::rnneq::RnnShape;
use crate::signalchain::{ChannelConfig, DiscreteChannel};
use crate::trainer::TrainConfig;
use crate::util::derive_seed;

const EVAL_STREAM: u64 = 0xE0;
const TRAIN_STREAM: u64 = 0x7A;

/// One experiment: a channel, an SIC depth, a detector and a power sweep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_output")]
    pub output: PathBuf,
    pub channel: ChannelConfig,
    #[serde(default)]
    pub sic: SicSection,
    pub detector: DetectorConfig,
    pub sweep: SweepSection,
    pub eval: EvalSection,
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SicSection {
    pub stages: usize,
}

impl Default for SicSection {
    fn default() -> Self {
        Self { stages: 1 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum DetectorConfig {
    Uniform,
    Fba {
        memory: usize,
    },
    Gibbs {
        memory: usize,
        n_iter: usize,
        n_par: usize,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
    },
    Rnn(RnnSection),
}

fn default_burn_in() -> usize {
    25
}

/// Network layout in the `L_Y, l_2, ..., l_L` form; `l_1` follows from the
/// observation width and `l_ic`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RnnSection {
    pub l_y: usize,
    pub l_ic: usize,
    pub hidden: Vec<usize>,
    /// Inference segment length in stage indices; the training length when absent.
    #[serde(default)]
    pub segment: Option<usize>,
    pub train: TrainSection,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub n_iter: usize,
    pub n_batch: usize,
    pub t_rnn: usize,
    #[serde(default = "default_segments")]
    pub segments_per_block: usize,
    #[serde(default = "default_norm_blocks")]
    pub norm_blocks: usize,
}

fn default_segments() -> usize {
    4
}

fn default_norm_blocks() -> usize {
    16
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub tx_power_db: Vec<f64>,
    #[serde(default = "default_true")]
    pub warm_start: bool,
}

fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvalSection {
    pub blocks: usize,
    pub block_len: usize,
    /// Memory of the auxiliary-channel upper bound; no bound when absent.
    #[serde(default)]
    pub upper_bound_memory: Option<usize>,
    #[serde(default)]
    pub table_budget: Option<usize>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Serde(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        DiscreteChannel::new(self.channel.clone())?;
        if self.sic.stages == 0 {
            return Err(Error::Config("sic.stages must be at least 1".into()));
        }
        if self.eval.block_len % self.sic.stages != 0 {
            return Err(Error::Config(format!(
                "eval.block_len = {} is not a multiple of sic.stages = {}",
                self.eval.block_len, self.sic.stages
            )));
        }
        self.eval_config().validate()?;
        if self.sweep.tx_power_db.is_empty() {
            return Err(Error::Config("sweep.tx_power_db is empty".into()));
        }
        if self.sweep.tx_power_db.iter().any(|p| !p.is_finite()) {
            return Err(Error::Config("sweep.tx_power_db must be finite".into()));
        }
        let ascending = self.sweep.tx_power_db.windows(2).all(|w| w[0] < w[1]);
        if self.sweep.warm_start && !ascending {
            return Err(Error::Config("sweep.tx_power_db must be strictly ascending when warm starts are enabled".into()));
        }
        match &self.detector {
            DetectorConfig::Gibbs { .. } => {
                self.gibbs_config().expect("gibbs").validate()?;
            }
            DetectorConfig::Rnn(_) => {
                for s in 1..=self.sic.stages {
                    let shape = self.rnn_shape(s)?.expect("rnn");
                    shape.validate()?;
                    self.train_config(s, 0)?.expect("rnn").validate(shape.phases())?;
                }
            }
            DetectorConfig::Uniform | DetectorConfig::Fba { .. } => {}
        }
        Ok(())
    }

    /// Short content hash of the resolved config; the output path is excluded.
    pub fn hash(&self) -> Result<String> {
        let mut canonical = self.clone();
        canonical.output = PathBuf::new();
        let digest = Sha256::digest(canonical.to_toml()?.as_bytes());
        Ok(hex::encode(&digest[..8]))
    }

    pub fn run_dir(&self) -> Result<PathBuf> {
        Ok(self.output.join(self.hash()?))
    }

    /// Evaluation blocks are common to every sweep point.
    pub fn eval_config(&self) -> EvalConfig {
        EvalConfig {
            blocks: self.eval.blocks,
            block_len: self.eval.block_len,
            seed: derive_seed(self.seed, EVAL_STREAM),
        }
    }

    pub fn channel_at(&self, tx_power_db: f64) -> Result<DiscreteChannel> {
        DiscreteChannel::new(self.channel.clone().with_tx_power_db(tx_power_db))
    }

    pub fn gibbs_config(&self) -> Option<GibbsConfig> {
        match &self.detector {
            DetectorConfig::Gibbs {
                memory,
                n_iter,
                n_par,
                burn_in,
            } => Some(GibbsConfig {
                memory: *memory,
                n_iter: *n_iter,
                n_par: *n_par,
                burn_in: *burn_in,
                noise_variance: None,
            }),
            _ => None,
        }
    }

    pub fn rnn_shape(&self, stage: usize) -> Result<Option<RnnShape>> {
        let DetectorConfig::Rnn(r) = &self.detector else {
            return Ok(None);
        };
        let chan = DiscreteChannel::new(self.channel.clone())?;
        let mut dims = vec![chan.dims() * r.l_y + r.l_ic];
        dims.extend_from_slice(&r.hidden);
        Ok(Some(RnnShape {
            dims,
            l_y: r.l_y,
            l_ic: r.l_ic,
            obs_dims: chan.dims(),
            n_os: chan.n_os(),
            stages: self.sic.stages,
            stage,
            alphabet_size: chan.alphabet().size(),
        }))
    }

    /// Training settings for `stage` at sweep point `point`.
    pub fn train_config(&self, stage: usize, point: usize) -> Result<Option<TrainConfig>> {
        let DetectorConfig::Rnn(r) = &self.detector else {
            return Ok(None);
        };
        let t = &r.train;
        Ok(Some(TrainConfig {
            segments_per_block: t.segments_per_block,
            norm_blocks: t.norm_blocks,
            seed: derive_seed(derive_seed(self.seed, TRAIN_STREAM + stage as u64), point as u64),
            ..TrainConfig::new(t.lr, t.n_iter, t.n_batch, t.t_rnn)
        }))
    }
}
