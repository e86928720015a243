//! Trains the stage-1 recurrent detector on the toy channel and compares its
//! SDD rate to the exact FBA.
//!
//!     cargo run --release --example rnn_training -- [iterations] [tx_power_db]

use std::time::Instant;

use sicnet::rates::{estimate_sic, EvalConfig};
use sicnet::rnneq::{RnnDetector, RnnShape};
use sicnet::sicframe::SicPlan;
use sicnet::signalchain::{AlphabetKind, ChannelConfig, DiscreteChannel};
use sicnet::trainer::{train_stage, TrainConfig};
use sicnet::trellis::{AuxChannel, FbaDetector, DEFAULT_TABLE_BUDGET};

fn main() -> sicnet::Result<()> {
    let mut args = std::env::args().skip(1);
    let iters: usize = args.next().and_then(|s| s.parse().ok()).unwrap_or(5000);
    let db: f64 = args.next().and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let chan = DiscreteChannel::new(ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4).with_tx_power_db(db))?;

    let shape = RnnShape {
        dims: vec![16, 32],
        l_y: 16,
        l_ic: 0,
        obs_dims: chan.dims(),
        n_os: chan.n_os(),
        stages: 1,
        stage: 1,
        alphabet_size: 4,
    };
    println!(
        "network dims {:?}, {} parameters, captures {} symbols of memory",
        shape.dims,
        sicnet::rnneq::ParamLayout::new(&shape).total,
        shape.capturable_memory(32)
    );
    let cfg = TrainConfig {
        seed: 4,
        ..TrainConfig::new(3e-3, iters, 32, 32)
    };
    let start = Instant::now();
    let (model, log) = train_stage(&chan, &shape, &cfg)?;
    for row in log.rows.iter().step_by((iters / 10).max(1)) {
        println!("  iter {:6}  loss {:.4} bits  |grad| {:.3e}", row.iter, row.loss_bits, row.grad_norm);
    }
    println!("trained in {:.1} s", start.elapsed().as_secs_f64());

    let eval = EvalConfig {
        blocks: 40,
        block_len: 2000,
        seed: 44,
    };
    let plan = SicPlan::new(1, eval.block_len)?;
    let rnn = estimate_sic(&RnnDetector { models: vec![model] }, &chan, &plan, &eval, None)?;
    let aux = AuxChannel::build(&chan, chan.total_memory(), DEFAULT_TABLE_BUDGET)?;
    let fba = estimate_sic(&FbaDetector { aux }, &chan, &plan, &eval, None)?;
    println!(
        "SDD rate at {db} dB: RNN {:.4} ± {:.4}, exact FBA {:.4} ± {:.4} bpcu",
        rnn.sic, rnn.sic_stderr, fba.sic, fba.sic_stderr
    );
    println!(
        "multiplications per APP: RNN {}, FBA {}",
        rnn.stages[0].mul_per_app, fba.stages[0].mul_per_app
    );
    Ok(())
}
