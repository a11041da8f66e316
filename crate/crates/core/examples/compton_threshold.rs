//! Drives a venue angle at the Compton period Ţ, detects the oscillation in
//! the periodogram, and sweeps Ţ to find where detection switches on.

use granular_spacetime::compton::{self, OscillationConfig, SweepSettings};
use granular_spacetime::rng::RngStream;
use granular_spacetime::units::planck_units;

fn main() -> granular_spacetime::Result<()> {
    let u = planck_units();
    println!("Ţ(m_p) = {:.6}", compton::t_bar_of_mass(u.m_p, 3, &u)?);
    println!("Ţ(electron) = {:.4e}", compton::t_bar_of_mass(9.109_383_7e-31, 3, &u)?);

    let config = OscillationConfig::new(24.0, 0.7, 1, 1 << 13, RngStream::new(5, 0));
    let series = compton::simulate_oscillation(&config)?;
    let report = compton::spectral_detect(&series[0], config.drive_frequency(), 5.0)?;
    println!(
        "Ţ = 24: dominant {:.5} (drive {:.5}), snr {:.1}, detected {}",
        report.dominant_freq, report.expected_freq, report.snr, report.detected
    );

    let grid = compton::log_grid(0.1, 100.0, 13);
    let sweep = compton::threshold_sweep(&grid, &SweepSettings::default(), RngStream::new(5, 1), 1)?;
    for p in &sweep.points {
        println!("Ţ = {:>8.3}: {:>2}/{} detected", p.t_bar, p.detections, p.trials);
    }
    println!("threshold Ţ* = {:.3}", sweep.threshold);
    Ok(())
}
