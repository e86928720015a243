//! How successive interference cancellation splits a block: the serial index
//! of each stage symbol, what a stage may condition on, and the known-symbol
//! window fed to the network.

use sicnet::sicframe::{ic_window, partition, SicPlan, StageView};

fn main() -> sicnet::Result<()> {
    let plan = SicPlan::new(3, 12)?;
    for s in 1..=plan.stages() {
        println!("stage {s}: serial indices {:?}", plan.stage_indices(s));
    }

    let x: Vec<usize> = (0..12).map(|k| k % 4).collect();
    println!("\nsymbols {x:?} split into {:?}", partition(&x, 3)?);

    for s in 1..=3 {
        let view = StageView::new(plan, s, &x)?;
        let known: Vec<String> = view
            .pins()
            .iter()
            .map(|p| p.map_or("?".to_string(), |a| a.to_string()))
            .collect();
        println!(
            "stage {s}: {} phase(s), targets {:?}, known [{}]",
            view.phases(),
            view.targets(),
            known.join(" ")
        );
    }

    let view = StageView::new(plan, 3, &x)?;
    for t in 1..=4 {
        println!("stage 3, t = {t}: L_IC = 4 window {:?}", ic_window(3, t, &view, 4));
    }
    Ok(())
}
