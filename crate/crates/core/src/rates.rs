//! Monte-Carlo rate estimation from symbol-wise APPs.
//!
//! A stage rate is `m + <log2 Q(truth)>`, averaged over the targets of a block
//! and then over blocks. Later stages condition on the true symbols of earlier
//! stages. All stages of one report share the same blocks, so the SIC average
//! gets its standard error from per-block stage averages.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::detector::AppDetector;
use crate::error::{Error, Result};
use crate::sicframe::{SicPlan, StageView};
use crate::signalchain::{Block, DiscreteChannel};
use crate::trellis::{fba_ub, AuxChannel, UbEstimate};
use crate::util::{derive_seed, mean_and_jackknife_stderr};

/// Probabilities below this are clamped (and counted) before the logarithm.
pub const PROB_FLOOR: f64 = 1e-30;

/// Share of clamped symbols above which a report is flagged.
pub const CLAMP_FLAG_RATIO: f64 = 0.01;

pub const RATES_HEADER: &str = "tx_power_db,stage,detector,rate_bpcu,stderr_bpcu,upper_bound_bpcu,mul_per_app";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct EvalConfig {
    pub blocks: usize,
    pub block_len: usize,
    pub seed: u64,
}

impl EvalConfig {
    pub fn validate(&self) -> Result<()> {
        if self.blocks == 0 || self.block_len == 0 {
            return Err(Error::Config("evaluation needs at least one block of at least one symbol".into()));
        }
        Ok(())
    }

    pub fn block_seed(&self, b: usize) -> u64 {
        derive_seed(self.seed, b as u64)
    }
}

/// Simulates the evaluation blocks, in order.
pub fn draw_blocks(chan: &DiscreteChannel, eval: &EvalConfig) -> Result<Vec<Block>> {
    eval.validate()?;
    (0..eval.blocks)
        .into_par_iter()
        .map(|b| chan.draw_block(eval.block_len, eval.block_seed(b)))
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StageRate {
    pub stage: usize,
    pub rate: f64,
    pub stderr: f64,
    pub clamps: usize,
    pub symbols: usize,
    pub mul_per_app: u64,
    #[serde(skip)]
    pub per_block: Vec<f64>,
}

/// Stage-`s` rate of `detector` on pre-drawn blocks.
pub fn stage_rate_on_blocks(detector: &dyn AppDetector, blocks: &[Block], plan: &SicPlan, s: usize) -> Result<StageRate> {
    if blocks.is_empty() {
        return Err(Error::Shape("rate estimation needs at least one block".into()));
    }
    let results: Vec<(f64, usize, usize)> = blocks
        .par_iter()
        .map(|blk| {
            if blk.len() != plan.block_len() {
                return Err(Error::Shape(format!(
                    "block has {} symbols, plan expects {}",
                    blk.len(),
                    plan.block_len()
                )));
            }
            let view = StageView::new(*plan, s, &blk.x)?;
            let apps = detector.detect(blk, &view, derive_seed(blk.seed, s as u64))?;
            if apps.targets() != view.targets().as_slice() {
                return Err(Error::Shape(format!("detector `{}` returned the wrong targets", detector.id())));
            }
            let bits = (apps.size() as f64).log2();
            let floor = PROB_FLOOR.ln();
            let mut clamps = 0;
            let mut sum = 0.0;
            for (r, &k) in apps.targets().iter().enumerate() {
                let mut lp = apps.ln_prob(r, blk.x[k - 1]);
                if lp < floor {
                    lp = floor;
                    clamps += 1;
                }
                sum += lp;
            }
            let rows = apps.rows();
            Ok((bits + sum / (rows as f64 * std::f64::consts::LN_2), clamps, rows))
        })
        .collect::<Result<_>>()?;
    let per_block: Vec<f64> = results.iter().map(|r| r.0).collect();
    let (rate, stderr) = mean_and_jackknife_stderr(&per_block);
    let view = StageView::new(*plan, s, &blocks[0].x)?;
    Ok(StageRate {
        stage: s,
        rate,
        stderr,
        clamps: results.iter().map(|r| r.1).sum(),
        symbols: results.iter().map(|r| r.2).sum(),
        mul_per_app: detector.multiplications_per_app(&view),
        per_block,
    })
}

/// Stage-`s` rate over freshly simulated blocks.
pub fn estimate_stage_rate(
    detector: &dyn AppDetector,
    chan: &DiscreteChannel,
    plan: &SicPlan,
    s: usize,
    eval: &EvalConfig,
) -> Result<StageRate> {
    check_plan(plan, eval)?;
    let blocks = draw_blocks(chan, eval)?;
    stage_rate_on_blocks(detector, &blocks, plan, s)
}

fn check_plan(plan: &SicPlan, eval: &EvalConfig) -> Result<()> {
    if plan.block_len() != eval.block_len {
        return Err(Error::Config(format!(
            "SIC plan is for n = {}, evaluation uses n = {}",
            plan.block_len(),
            eval.block_len
        )));
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RateReport {
    pub tx_power_db: f64,
    pub detector: String,
    pub stages: Vec<StageRate>,
    pub sic: f64,
    pub sic_stderr: f64,
    pub upper_bound: Option<UbEstimate>,
    pub config_hash: String,
    pub blocks: usize,
    pub block_len: usize,
    pub clamps: usize,
    pub flagged: bool,
}

impl RateReport {
    pub fn stage_count(&self) -> usize {
        self.stages.len()
    }

    /// The SDD rate, available when the report has a single stage.
    pub fn sdd(&self) -> Option<f64> {
        (self.stages.len() == 1).then(|| self.stages[0].rate)
    }

    /// CSV rows (no header): one per stage, then the `sic` aggregate.
    pub fn csv_rows(&self) -> String {
        let ub = self.upper_bound.map(|u| format!("{:.6}", u.value)).unwrap_or_default();
        let mut out = String::new();
        for st in &self.stages {
            let _ = writeln!(
                out,
                "{:.2},{},{},{:.6},{:.6},{},{}",
                self.tx_power_db, st.stage, self.detector, st.rate, st.stderr, ub, st.mul_per_app
            );
        }
        let mul: u64 = self.stages.iter().map(|s| s.mul_per_app).sum::<u64>() / self.stages.len().max(1) as u64;
        let _ = writeln!(
            out,
            "{:.2},sic,{},{:.6},{:.6},{},{}",
            self.tx_power_db, self.detector, self.sic, self.sic_stderr, ub, mul
        );
        out
    }
}

/// Writes `reports` as one CSV with [`RATES_HEADER`].
pub fn write_rates_csv(path: &Path, reports: &[RateReport]) -> Result<()> {
    let mut text = String::from(RATES_HEADER);
    text.push('\n');
    for r in reports {
        text.push_str(&r.csv_rows());
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Runs every stage of `plan` on common blocks and aggregates. When `ub_aux`
/// is given, the auxiliary-channel upper bound is estimated on the same blocks.
pub fn estimate_sic(
    detector: &dyn AppDetector,
    chan: &DiscreteChannel,
    plan: &SicPlan,
    eval: &EvalConfig,
    ub_aux: Option<&AuxChannel>,
) -> Result<RateReport> {
    check_plan(plan, eval)?;
    let blocks = draw_blocks(chan, eval)?;
    let stages = (1..=plan.stages())
        .map(|s| stage_rate_on_blocks(detector, &blocks, plan, s))
        .collect::<Result<Vec<_>>>()?;
    let per_block: Vec<f64> = (0..blocks.len())
        .map(|b| stages.iter().map(|st| st.per_block[b]).sum::<f64>() / stages.len() as f64)
        .collect();
    let (_, sic_stderr) = mean_and_jackknife_stderr(&per_block);
    let sic = stages.iter().map(|st| st.rate).sum::<f64>() / stages.len() as f64;
    let upper_bound = ub_aux.map(|aux| fba_ub(aux, &blocks)).transpose()?;
    let clamps: usize = stages.iter().map(|s| s.clamps).sum();
    let symbols: usize = stages.iter().map(|s| s.symbols).sum();
    let flagged = clamps as f64 > CLAMP_FLAG_RATIO * symbols as f64;
    if flagged {
        log::warn!(
            "{}: {clamps} of {symbols} target probabilities were clamped at {PROB_FLOOR:e}",
            detector.id()
        );
    }
    Ok(RateReport {
        tx_power_db: chan.config().tx_power_db,
        detector: detector.id(),
        stages,
        sic,
        sic_stderr,
        upper_bound,
        config_hash: String::new(),
        blocks: eval.blocks,
        block_len: eval.block_len,
        clamps,
        flagged,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detector::{OracleDetector, UniformDetector};
    use crate::signalchain::{AlphabetKind, ChannelConfig};
    use crate::trellis::FbaDetector;

    fn memoryless(order: usize, db: f64) -> DiscreteChannel {
        DiscreteChannel::new(ChannelConfig::memoryless(AlphabetKind::BipolarAsk, order).with_tx_power_db(db)).unwrap()
    }

    fn toy(db: f64) -> DiscreteChannel {
        DiscreteChannel::new(ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4).with_tx_power_db(db)).unwrap()
    }

    /// I(X;Y) for equiprobable real means in unit-variance Gaussian noise.
    fn gaussian_mi(means: &[f64]) -> f64 {
        let m = means.len() as f64;
        let pdf = |u: f64| (-0.5 * u * u).exp() / (2.0 * std::f64::consts::PI).sqrt();
        let (lo, hi) = (means.iter().cloned().fold(f64::INFINITY, f64::min) - 12.0, means.iter().cloned().fold(f64::NEG_INFINITY, f64::max) + 12.0);
        let steps = 40_000;
        let dy = (hi - lo) / steps as f64;
        let mut acc = 0.0;
        for i in 0..=steps {
            let y = lo + i as f64 * dy;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            let mix: f64 = means.iter().map(|&mu| pdf(y - mu)).sum::<f64>() / m;
            for &mu in means {
                let p = pdf(y - mu);
                if p > 0.0 {
                    acc += w * p / m * (p / mix).log2();
                }
            }
        }
        acc * dy
    }

    #[test]
    fn dummy_detectors_give_the_extremes() {
        let chan = toy(6.0);
        let plan = SicPlan::new(2, 40).unwrap();
        let eval = EvalConfig { blocks: 4, block_len: 40, seed: 1 };
        let uni = estimate_sic(&UniformDetector { size: 4 }, &chan, &plan, &eval, None).unwrap();
        assert!(uni.stages.iter().all(|s| s.rate.abs() < 1e-12));
        assert!(uni.sic.abs() < 1e-12);
        let ora = estimate_sic(&OracleDetector { size: 4 }, &chan, &plan, &eval, None).unwrap();
        assert!(ora.stages.iter().all(|s| s.rate == 2.0 && s.clamps == 0));
        assert_eq!(ora.sic_stderr, 0.0);
    }

    #[test]
    fn memoryless_fba_matches_quadrature() {
        for (order, db) in [(2, 0.0), (4, 8.0)] {
            let chan = memoryless(order, db);
            let aux = AuxChannel::build(&chan, 0, crate::trellis::DEFAULT_TABLE_BUDGET).unwrap();
            let levels: Vec<f64> = chan.alphabet().points().to_vec();
            let means: Vec<f64> = chan.noiseless(&levels).iter().map(|z| z.re / chan.noise_variance_per_dim().sqrt()).collect();
            let exact = gaussian_mi(&means);
            let eval = EvalConfig { blocks: 40, block_len: 500, seed: 3 };
            let plan = SicPlan::new(1, 500).unwrap();
            let r = estimate_stage_rate(&FbaDetector { aux }, &chan, &plan, 1, &eval).unwrap();
            assert!(
                (r.rate - exact).abs() < 3.0 * r.stderr + 1e-9,
                "M={order}: {} ± {} vs {exact}",
                r.rate,
                r.stderr
            );
        }
    }

    #[test]
    fn sic_aggregate_is_the_stage_mean() {
        let chan = toy(4.0);
        let aux = AuxChannel::build(&chan, 3, crate::trellis::DEFAULT_TABLE_BUDGET).unwrap();
        let plan = SicPlan::new(2, 48).unwrap();
        let eval = EvalConfig { blocks: 6, block_len: 48, seed: 5 };
        let det = FbaDetector { aux: aux.clone() };
        let r = estimate_sic(&det, &chan, &plan, &eval, Some(&aux)).unwrap();
        assert_eq!(r.sic, (r.stages[0].rate + r.stages[1].rate) / 2.0);
        for st in &r.stages {
            assert!(st.rate >= 0.0 && st.rate <= 2.0);
        }
        assert!(r.upper_bound.is_some());
        let again = estimate_sic(&det, &chan, &plan, &eval, Some(&aux)).unwrap();
        assert_eq!(r, again);
        let single = estimate_sic(&det, &chan, &SicPlan::new(1, 48).unwrap(), &eval, None).unwrap();
        assert_eq!(single.sdd(), Some(single.sic));
    }

    #[test]
    fn noiseless_channel_gives_full_rate() {
        let chan = memoryless(4, 60.0);
        let aux = AuxChannel::build(&chan, 0, crate::trellis::DEFAULT_TABLE_BUDGET).unwrap();
        let plan = SicPlan::new(2, 20).unwrap();
        let eval = EvalConfig { blocks: 3, block_len: 20, seed: 2 };
        let r = estimate_sic(&FbaDetector { aux }, &chan, &plan, &eval, None).unwrap();
        assert!(r.stages.iter().all(|s| (s.rate - 2.0).abs() < 1e-9));
    }

    #[test]
    fn clamped_detector_is_flagged() {
        struct Wrong;
        impl AppDetector for Wrong {
            fn id(&self) -> String {
                "wrong".into()
            }
            fn detect(&self, block: &Block, view: &StageView, _seed: u64) -> Result<crate::AppMatrix> {
                let t = view.targets();
                let logs = t
                    .iter()
                    .flat_map(|&k| if block.x[k - 1] == 0 { [f64::NEG_INFINITY, 0.0] } else { [0.0, f64::NEG_INFINITY] })
                    .collect();
                crate::AppMatrix::from_log_weights(t, 2, logs)
            }
            fn multiplications_per_app(&self, _view: &StageView) -> u64 {
                0
            }
        }
        let chan = memoryless(2, 0.0);
        let plan = SicPlan::new(1, 10).unwrap();
        let eval = EvalConfig { blocks: 2, block_len: 10, seed: 0 };
        let r = estimate_sic(&Wrong, &chan, &plan, &eval, None).unwrap();
        assert!(r.flagged);
        assert_eq!(r.clamps, 20);
        assert!((r.sic - (1.0 + PROB_FLOOR.log2())).abs() < 1e-9);
    }

    #[test]
    fn csv_formatting() {
        let chan = toy(2.0);
        let plan = SicPlan::new(2, 16).unwrap();
        let eval = EvalConfig { blocks: 2, block_len: 16, seed: 0 };
        let r = estimate_sic(&UniformDetector { size: 4 }, &chan, &plan, &eval, None).unwrap();
        assert_eq!(
            r.csv_rows(),
            "2.00,1,uniform,0.000000,0.000000,,0\n2.00,2,uniform,0.000000,0.000000,,0\n2.00,sic,uniform,0.000000,0.000000,,0\n"
        );
    }

    #[test]
    fn mismatched_lengths_are_rejected() {
        let chan = toy(2.0);
        let eval = EvalConfig { blocks: 1, block_len: 16, seed: 0 };
        let plan = SicPlan::new(2, 20).unwrap();
        assert!(estimate_sic(&UniformDetector { size: 4 }, &chan, &plan, &eval, None).is_err());
    }
}
