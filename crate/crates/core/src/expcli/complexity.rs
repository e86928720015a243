//! Multiplications per APP estimate for the configured detector and for the
//! reference configurations of the short-reach study.

use std::fmt::Write as _;

use super::config::{DetectorConfig, ExperimentConfig};
use crate::error::Result;
use crate::gibbs::{count_gs_multiplications, GibbsConfig};
use crate::rnneq::{count_rnn_multiplications, RnnShape};
use crate::signalchain::{AlphabetKind, ChannelConfig, DiscreteChannel};
use crate::trellis::fba_multiplications_per_app;

pub const COMPLEXITY_HEADER: &str = "source,detector,configuration,stages,stage,mul_per_app";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ComplexityRow {
    pub source: &'static str,
    pub detector: String,
    pub configuration: String,
    pub stages: usize,
    pub stage: usize,
    pub mul_per_app: u64,
}

impl ComplexityRow {
    fn csv(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.source, self.detector, self.configuration, self.stages, self.stage, self.mul_per_app
        )
    }
}

pub fn to_csv(rows: &[ComplexityRow]) -> String {
    let mut out = String::from(COMPLEXITY_HEADER);
    out.push('\n');
    for r in rows {
        let _ = writeln!(out, "{}", r.csv());
    }
    out
}

/// One row per stage of the configured detector.
pub fn run_rows(cfg: &ExperimentConfig) -> Result<Vec<ComplexityRow>> {
    let chan = DiscreteChannel::new(cfg.channel.clone())?;
    let stages = cfg.sic.stages;
    let size = chan.alphabet().size();
    let mut rows = Vec::with_capacity(stages);
    for stage in 1..=stages {
        let phases = stages - stage + 1;
        let (detector, configuration, mul_per_app) = match &cfg.detector {
            DetectorConfig::Uniform => ("uniform".to_string(), "-".to_string(), 0),
            DetectorConfig::Fba { memory } => (
                format!("fba-N{memory}"),
                format!("M={size} N={memory}"),
                fba_multiplications_per_app(size, *memory, chan.slot_width(), stages),
            ),
            DetectorConfig::Gibbs { .. } => {
                let g = cfg.gibbs_config().expect("gibbs");
                (
                    format!("gibbs-N{}", g.memory),
                    gibbs_label(size, &g),
                    count_gs_multiplications(&chan, &g, phases),
                )
            }
            DetectorConfig::Rnn(_) => {
                let shape = cfg.rnn_shape(stage)?.expect("rnn");
                ("rnn".to_string(), rnn_label(&shape), count_rnn_multiplications(&shape))
            }
        };
        rows.push(ComplexityRow {
            source: "run",
            detector,
            configuration,
            stages,
            stage,
            mul_per_app,
        });
    }
    Ok(rows)
}

fn rnn_label(shape: &RnnShape) -> String {
    let dims: Vec<String> = shape.dims.iter().map(|d| d.to_string()).collect();
    format!("M={} L_Y={} L_IC={} dims={}", shape.alphabet_size, shape.l_y, shape.l_ic, dims.join(";"))
}

fn gibbs_label(size: usize, g: &GibbsConfig) -> String {
    format!("M={size} N={} N_iter={} N_par={}", g.memory, g.n_iter, g.n_par)
}

fn reference_rnn(order: usize, l_y: usize, l_ic: usize, hidden: &[usize], stages: usize) -> Vec<ComplexityRow> {
    let mut dims = vec![l_y + l_ic];
    dims.extend_from_slice(hidden);
    [1, stages]
        .into_iter()
        .map(|stage| {
            let shape = RnnShape {
                dims: dims.clone(),
                l_y,
                l_ic,
                obs_dims: 1,
                n_os: 2,
                stages,
                stage,
                alphabet_size: order,
            };
            ComplexityRow {
                source: "reference",
                detector: "rnn".into(),
                configuration: rnn_label(&shape),
                stages,
                stage,
                mul_per_app: count_rnn_multiplications(&shape),
            }
        })
        .collect()
}

/// Reference rows: the 4- and 32-ary networks, bit-wise Gibbs sampling with
/// `Ñ = 21`, and the FBA at `Ñ = 9` (4-ASK) and `Ñ = 7` (8-ASK), all on the
/// short-reach link.
pub fn reference_rows() -> Result<Vec<ComplexityRow>> {
    let mut rows = reference_rnn(4, 64, 32, &[128, 64], 2);
    rows.extend(reference_rnn(32, 100, 64, &[200, 200, 200, 168], 6));

    let link = DiscreteChannel::new(ChannelConfig::short_reach(AlphabetKind::BipolarAsk, 32))?;
    let gs = GibbsConfig {
        memory: 21,
        n_iter: 125,
        n_par: 64,
        burn_in: 25,
        noise_variance: None,
    };
    for stage in [1, 6] {
        rows.push(ComplexityRow {
            source: "reference",
            detector: "gibbs-N21".into(),
            configuration: gibbs_label(32, &gs),
            stages: 6,
            stage,
            mul_per_app: count_gs_multiplications(&link, &gs, 6 - stage + 1),
        });
    }
    for (order, memory) in [(4, 9), (8, 7)] {
        let stages = 4;
        rows.push(ComplexityRow {
            source: "reference",
            detector: format!("fba-N{memory}"),
            configuration: format!("M={order} N={memory}"),
            stages,
            stage: 1,
            mul_per_app: fba_multiplications_per_app(order, memory, link.slot_width(), stages),
        });
    }
    Ok(rows)
}

