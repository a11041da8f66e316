//! Finite-difference Ricci tensor of the plane-wave metric compared with its
//! closed form, and the first-order response of the perturbed metric.

use granular_spacetime::geometry;
use granular_spacetime::Complex;

fn main() -> granular_spacetime::Result<()> {
    println!("sign convention: {:?}", geometry::ricci_convention()?);
    let rows = geometry::ricci_plane_wave_comparison(&[(1.0, 0.5, 0.3, 0.1), (1.7, 1.2, -2.0, 0.8)])?;
    for r in &rows {
        println!(
            "k={} ω={} {:<4} computed {:+.6}{:+.6}i  reference {:+.6}{:+.6}i  rel {:.1e}",
            r.k, r.omega, r.component, r.computed_re, r.computed_im, r.reference_re, r.reference_im, r.rel_err
        );
    }

    let (k, w, z, t) = (1.3, 0.7, 0.4, 0.2);
    let c1 = geometry::perturbed_first_order(k, w, [0.0, 0.0, z, t], 1e-3, (2, 3))?;
    let e = Complex::from_polar(1.0, -(k * z - w * t));
    println!("R_zt ≈ b·({c1:.6}); kω·e^(−iα) = {:.6}", e * (k * w));
    Ok(())
}
