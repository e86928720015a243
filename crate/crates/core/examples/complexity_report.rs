//! Multiplications per APP estimate for the reference detector settings.

use sicnet::expcli::reference_rows;

fn main() -> sicnet::Result<()> {
    println!("{:>10} {:>7} {:>14}  configuration", "detector", "stage", "mul/APP");
    for row in reference_rows()? {
        println!(
            "{:>10} {:>7} {:>14.3e}  {}",
            row.detector,
            format!("{}/{}", row.stage, row.stages),
            row.mul_per_app as f64,
            row.configuration
        );
    }
    Ok(())
}
