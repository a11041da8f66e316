//! Circular geodesic in the assembled line element, plus the bundle-volume
//! probe that checks the vacuum equation along a static observer.

use granular_spacetime::geometry::{self, GeodesicState, VolumeProbe};
use granular_spacetime::gravity::assemble_line_element;
use std::f64::consts::{FRAC_PI_2, PI};

fn main() -> granular_spacetime::Result<()> {
    let le = assemble_line_element(1.0)?;
    let field = le.metric_field();
    let r = 50.0;
    let start = GeodesicState::real([FRAC_PI_2, 0.0, r, 0.0], le.circular_orbit_velocity(r)?);
    let traj = geometry::geodesic_integrate(&field, start, 4000, 1.0, None)?;

    let last = traj.states.last().unwrap();
    let n0 = geometry::norm_sq(&field, &start.position, &start.velocity);
    let n1 = geometry::norm_sq(&field, &last.position, &last.velocity);
    println!(
        "after {} steps: r = {:.6}, φ = {:.4} rad",
        traj.states.len() - 1,
        last.position[2].re,
        last.position[1].re
    );
    println!("g(v,v) drift {:.2e}", (n1 - n0).norm());
    println!(
        "orbits completed {:.3}, expected {:.3}",
        last.position[1].re / (2.0 * PI),
        last.position[3].re * le.orbital_frequency(r) / (2.0 * PI)
    );

    for radius in [5.0, 10.0, 40.0] {
        let probe = VolumeProbe::static_observer(&field, [FRAC_PI_2, 0.0, radius, 0.0], 1e-3, 2e-2);
        let v = geometry::volume_evolution_residual(&field, &probe)?;
        println!(
            "volume probe r = {radius}: residual {:.2e}, tidal scale {:.2e}",
            v.residual, v.tidal_scale
        );
    }
    Ok(())
}
