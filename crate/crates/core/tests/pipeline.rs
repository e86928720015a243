//! Cross-module properties: training loss against rate estimation, and
//! conditioning on known symbols.

use sicnet::rates::{stage_rate_on_blocks, EvalConfig};
use sicnet::rnneq::{RnnDetector, RnnModel, RnnShape};
use sicnet::sicframe::{SicPlan, StageView};
use sicnet::signalchain::{AlphabetKind, ChannelConfig, DiscreteChannel};
use sicnet::trainer::{block_sequences, loss};
use sicnet::trellis::{fba_app, fba_posteriors, AuxChannel, DEFAULT_TABLE_BUDGET};
use sicnet::util::mean_and_jackknife_stderr;

fn toy(db: f64) -> DiscreteChannel {
    DiscreteChannel::new(ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4).with_tx_power_db(db)).unwrap()
}

#[test]
fn stage_rate_is_m_minus_loss() {
    let chan = toy(3.0);
    let plan = SicPlan::new(2, 96).unwrap();
    for stage in 1..=2 {
        let shape = RnnShape {
            dims: vec![4 + 3, 6],
            l_y: 4,
            l_ic: 3,
            obs_dims: 1,
            n_os: 2,
            stages: 2,
            stage,
            alphabet_size: 4,
        };
        let blocks: Vec<_> = (0..3).map(|b| chan.draw_block(96, 70 + b).unwrap()).collect();
        let enc = sicnet::rnneq::InputEncoding::fit(&blocks, chan.alphabet()).unwrap();
        let mut model = RnnModel::random(shape.clone(), enc.clone(), 5).unwrap();
        let n_seg = 12;
        model.segment = n_seg;
        let models = (1..=2)
            .map(|s| if s == stage { model.clone() } else { RnnModel::random(shape.for_stage(s), enc.clone(), 6).unwrap() })
            .collect();
        let detector = RnnDetector { models };
        let rate = stage_rate_on_blocks(&detector, &blocks, &plan, stage).unwrap();
        for (b, blk) in blocks.iter().enumerate() {
            let seqs = block_sequences(blk, plan, &shape, &enc, n_seg).unwrap();
            let bits = loss(&shape, &model.params, &seqs).unwrap().bits;
            assert!((rate.per_block[b] - (2.0 - bits)).abs() < 1e-12, "stage {stage} block {b}");
        }
    }
}

#[test]
fn conditioning_on_truth_does_not_hurt_on_average() {
    let chan = toy(2.0);
    let aux = AuxChannel::build(&chan, chan.total_memory(), DEFAULT_TABLE_BUDGET).unwrap();
    let plan = SicPlan::new(2, 40).unwrap();
    let eval = EvalConfig {
        blocks: 120,
        block_len: 40,
        seed: 9,
    };
    let blocks = sicnet::rates::draw_blocks(&chan, &eval).unwrap();
    let gains: Vec<f64> = blocks
        .iter()
        .map(|blk| {
            let view = StageView::new(plan, 2, &blk.x).unwrap();
            let pinned = fba_app(&aux, &blk.y, &view).unwrap();
            let targets = view.targets();
            let free = fba_posteriors(&aux, &blk.y, &vec![None; blk.len()], &targets).unwrap().apps;
            targets
                .iter()
                .enumerate()
                .map(|(r, &k)| pinned.prob(r, blk.x[k - 1]) - free.prob(r, blk.x[k - 1]))
                .sum::<f64>()
                / targets.len() as f64
        })
        .collect();
    let (mean, se) = mean_and_jackknife_stderr(&gains);
    assert!(mean > -3.0 * se, "{mean} ± {se}");
}
