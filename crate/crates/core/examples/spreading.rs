//! Repeated self-convolution of a single-step distribution: variance grows
//! linearly and the shape relaxes to a Gaussian.

use granular_spacetime::spread::{self, GridDistribution};

fn main() -> granular_spacetime::Result<()> {
    let d1 = GridDistribution::from_weights(0.0, 1.0, &[3.0, 4.0, 3.0, 2.0])?;
    let r = spread::iterated_spread(&d1, 200)?;
    println!(
        "Var(D1) = {:.4}, slope of Var(N)/Var(D1) = {:.5}",
        d1.variance(),
        r.normalized_slope
    );
    for p in r.series.iter().filter(|p| [1, 2, 5, 20, 50, 200].contains(&p.n)) {
        println!(
            "N = {:>3}  var {:>9.3}  skew {:+.4}  kurt {:+.4}",
            p.n, p.variance, p.skew, p.kurtosis
        );
    }
    Ok(())
}
