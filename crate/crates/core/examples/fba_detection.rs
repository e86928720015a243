//! Forward-backward detection on the dispersive toy channel: APPs for a few
//! symbols, then SDD and SIC rates with the auxiliary-channel upper bound,
//! for the exact memory and a truncated (mismatched) one.
//!
//!     cargo run --release --example fba_detection -- [tx_power_db]

use sicnet::rates::{draw_blocks, estimate_sic, EvalConfig};
use sicnet::sicframe::{SicPlan, StageView};
use sicnet::signalchain::{AlphabetKind, ChannelConfig, DiscreteChannel};
use sicnet::trellis::{fba_app, fba_ub, AuxChannel, FbaDetector, DEFAULT_TABLE_BUDGET};

fn main() -> sicnet::Result<()> {
    let db: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(3.0);
    let chan = DiscreteChannel::new(ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4).with_tx_power_db(db))?;
    let exact = AuxChannel::build(&chan, chan.total_memory(), DEFAULT_TABLE_BUDGET)?;

    let blk = chan.draw_block(16, 3)?;
    let view = StageView::new(SicPlan::new(1, 16)?, 1, &blk.x)?;
    let apps = fba_app(&exact, &blk.y, &view)?;
    println!("{db} dB, first APP rows (truth in brackets):");
    for r in 0..4 {
        let row: Vec<String> = apps.row(r).iter().map(|p| format!("{p:.3}")).collect();
        println!("  t = {}: [{}]  [{}]", r + 1, row.join(" "), blk.x[r]);
    }

    let eval = EvalConfig {
        blocks: 32,
        block_len: 480,
        seed: 1,
    };
    let blocks = draw_blocks(&chan, &eval)?;
    for memory in [1, chan.total_memory()] {
        let aux = AuxChannel::build(&chan, memory, DEFAULT_TABLE_BUDGET)?;
        let ub = fba_ub(&aux, &blocks)?;
        println!("\nFBA with memory {memory} (channel memory {}):", chan.total_memory());
        for stages in [1, 2, 4] {
            let plan = SicPlan::new(stages, eval.block_len)?;
            let r = estimate_sic(&FbaDetector { aux: aux.clone() }, &chan, &plan, &eval, None)?;
            let per_stage: Vec<String> = r.stages.iter().map(|s| format!("{:.3}", s.rate)).collect();
            println!(
                "  S = {stages}: I_SIC = {:.4} ± {:.4} bpcu, stages [{}], {} mul/APP",
                r.sic,
                r.sic_stderr,
                per_stage.join(", "),
                r.stages[0].mul_per_app
            );
        }
        println!("  upper bound {:.4} ± {:.4} bpcu", ub.value, ub.stderr);
    }
    Ok(())
}
