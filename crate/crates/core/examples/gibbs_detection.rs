//! Bit-wise Gibbs sampling against the exact FBA on the toy channel, as a
//! function of the number of sweeps.

use sicnet::gibbs::{gibbs_app, GibbsConfig};
use sicnet::sicframe::{SicPlan, StageView};
use sicnet::signalchain::{AlphabetKind, ChannelConfig, DiscreteChannel};
use sicnet::trellis::{fba_app, AuxChannel, DEFAULT_TABLE_BUDGET};

fn main() -> sicnet::Result<()> {
    let chan = DiscreteChannel::new(ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4).with_tx_power_db(3.0))?;
    let aux = AuxChannel::build(&chan, chan.total_memory(), DEFAULT_TABLE_BUDGET)?;
    let n = 120;
    let blk = chan.draw_block(n, 11)?;
    let plan = SicPlan::new(2, n)?;

    for s in 1..=2 {
        let view = StageView::new(plan, s, &blk.x)?;
        let exact = fba_app(&aux, &blk.y, &view)?;
        println!("stage {s}/2");
        for n_iter in [50, 200, 1000] {
            let cfg = GibbsConfig {
                memory: chan.total_memory(),
                n_iter,
                n_par: 8,
                burn_in: 25,
                noise_variance: None,
            };
            let gs = gibbs_app(&chan, &blk.y, &view, &cfg, 5)?;
            let mut tv_sum = 0.0;
            let mut tv_max: f64 = 0.0;
            for r in 0..exact.rows() {
                let tv = 0.5 * exact.row(r).iter().zip(gs.row(r)).map(|(a, b)| (a - b).abs()).sum::<f64>();
                tv_sum += tv;
                tv_max = tv_max.max(tv);
            }
            println!(
                "  N_iter {n_iter:5}: mean TV to FBA {:.4}, max {:.4}, {:.0} mul/APP",
                tv_sum / exact.rows() as f64,
                tv_max,
                gs.multiplications_per_app()
            );
        }
    }
    Ok(())
}
