//! Simulates the short-reach square-law link and the small dispersive toy
//! channel, prints a few receive samples and writes one block dump.
//!
//!     cargo run --release --example simulate_channel -- [tx_power_db]

use sicnet::signalchain::dump::{read_block, write_block};
use sicnet::signalchain::{AlphabetKind, ChannelConfig, DiscreteChannel};

fn main() -> sicnet::Result<()> {
    let db: f64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(6.0);

    for (name, cfg) in [
        ("short-reach 4-ASK", ChannelConfig::short_reach(AlphabetKind::BipolarAsk, 4)),
        ("short-reach 4-PAM", ChannelConfig::short_reach(AlphabetKind::UnipolarPam, 4)),
        ("toy dispersive 4-ASK", ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4)),
    ] {
        let chan = DiscreteChannel::new(cfg.with_tx_power_db(db))?;
        let blk = chan.draw_block(2000, 1)?;
        let mean = blk.y.iter().sum::<f64>() / blk.y.len() as f64;
        println!(
            "{name:>22}: memory {:3} symbols, {} samples/symbol, amplitude {:.3}, mean output {mean:.3}",
            chan.total_memory(),
            chan.n_os(),
            chan.amplitude()
        );
        println!("{:>22}  x[0..6] = {:?}", "", &blk.x[..6]);
        let head: Vec<String> = blk.y[..6].iter().map(|v| format!("{v:.3}")).collect();
        println!("{:>22}  y[0..6] = [{}]", "", head.join(", "));
    }

    let chan = DiscreteChannel::new(ChannelConfig::toy_dispersive(AlphabetKind::BipolarAsk, 4).with_tx_power_db(db))?;
    let blk = chan.draw_block(64, 7)?;
    let dir = std::env::temp_dir().join("sicnet-example");
    std::fs::create_dir_all(&dir)?;
    let (bin, json) = write_block(&dir.join("toy_block"), &blk, chan.config())?;
    let (back, side) = read_block(&dir.join("toy_block"))?;
    assert_eq!(back, blk);
    println!("\nwrote {} and {} ({} symbols, seed {})", bin.display(), json.display(), side.symbols, side.seed);
    Ok(())
}
