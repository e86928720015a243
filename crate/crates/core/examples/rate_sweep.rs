//! SIC rate curves of the exact FBA on the toy channel for S = 1, 2, 4 with
//! the upper bound, written to a CSV in the temp directory.

use sicnet::rates::{estimate_sic, write_rates_csv, EvalConfig};
use sicnet::sicframe::SicPlan;
use sicnet::signalchain::{AlphabetKind, ChannelConfig, DiscreteChannel};
use sicnet::trellis::{AuxChannel, FbaDetector, DEFAULT_TABLE_BUDGET};

fn main() -> sicnet::Result<()> {
    let eval = EvalConfig {
        blocks: 24,
        block_len: 480,
        seed: 2,
    };
    let mut reports = Vec::new();
    println!("{:>6} {:>8} {:>8} {:>8} {:>8}", "P[dB]", "S=1", "S=2", "S=4", "UB");
    for db in [-3.0, 0.0, 3.0, 6.0, 9.0, 12.0] {
        let chan = DiscreteChannel::new(ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4).with_tx_power_db(db))?;
        let aux = AuxChannel::build(&chan, chan.total_memory(), DEFAULT_TABLE_BUDGET)?;
        let mut line = format!("{db:6.1}");
        let mut ub = 0.0;
        for stages in [1, 2, 4] {
            let plan = SicPlan::new(stages, eval.block_len)?;
            let with_ub = (stages == 4).then_some(&aux);
            let r = estimate_sic(&FbaDetector { aux: aux.clone() }, &chan, &plan, &eval, with_ub)?;
            line += &format!(" {:8.4}", r.sic);
            if let Some(u) = r.upper_bound {
                ub = u.value;
            }
            reports.push(r);
        }
        println!("{line} {ub:8.4}");
    }
    let path = std::env::temp_dir().join("sicnet_rate_sweep.csv");
    write_rates_csv(&path, &reports)?;
    println!("\nwrote {}", path.display());
    Ok(())
}
