//! Two-slit interference from metric superposition: the density of the
//! equal-weight mixture of two phase-shifted metrics, against the closed form.

use granular_spacetime::metric::{self, InterferenceVariant};
use std::f64::consts::PI;

fn main() -> granular_spacetime::Result<()> {
    let grid: Vec<f64> = (0..=12).map(|i| -PI + 2.0 * PI * i as f64 / 12.0).collect();
    for variant in [InterferenceVariant::TwoSlit1976, InterferenceVariant::PlaneWave2016] {
        println!("{}", variant.name());
        for p in metric::interference_pattern(&grid, 0.0, variant)? {
            let bar = "#".repeat((p.density * 40.0).round() as usize);
            println!("  α = {:+.3}  {:.4}  {bar}", p.alpha, p.density);
        }
    }
    Ok(())
}
