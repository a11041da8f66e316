//! Radial venue migration gated by the indeterminacy u(r) = 1 − r_s/r: walkers
//! linger where u is small, in proportion to 1/u.

use granular_spacetime::gravity::{self, DwellSettings, IndeterminacyField};
use granular_spacetime::rng::RngStream;
use granular_spacetime::units::planck_units;

fn main() -> granular_spacetime::Result<()> {
    let u = planck_units();
    for k in [1.0, 2.0] {
        println!(
            "R_s(m_p), k = {k}: {:.3} l_p",
            gravity::schwarzschild_radius(u.m_p, k, &u)? / u.l_p
        );
    }

    let field = IndeterminacyField::schwarzschild(50.0)?;
    let settings = DwellSettings {
        start_r: 150,
        walkers: 10_000,
        steps: 4000,
        bin_width: 5,
    };
    let profile = gravity::radial_migration_mc(&field, &settings, RngStream::new(11, 0), 1)?;
    let fit = gravity::dwell_fit(&profile, &field, (0.1, 0.9), 100)?;
    println!("absorbed {} of {}", profile.absorbed, profile.walkers);
    println!(
        "dwell per visit vs 1/u: slope {:.3}, r = {:.4}",
        fit.slope, fit.correlation
    );

    for row in gravity::covariant_distance_demo(2.0, 1.0, 8)? {
        println!("r = {:.6}: covariant {:.4e}", row.r, row.covariant);
    }
    Ok(())
}
