use granular_spacetime::geometry::{self, real_point, GeodesicState, MetricField, StochasticKick, VolumeProbe};
use granular_spacetime::gravity::assemble_line_element;
use granular_spacetime::metric::Metric4;
use granular_spacetime::rng::RngStream;
use granular_spacetime::walk::WalkConfig;
use std::f64::consts::{FRAC_PI_2, PI};

#[test]
fn circular_orbit_has_kepler_period() {
    let le = assemble_line_element(1.0).unwrap();
    let field = le.metric_field();
    let r = 100.0;
    let start = GeodesicState::real([FRAC_PI_2, 0.0, r, 0.0], le.circular_orbit_velocity(r).unwrap());
    let traj = geometry::geodesic_integrate(&field, start, 10_000, 1.0, None).unwrap();
    assert!(traj.diagnostic.is_none());

    // Coordinate time at which φ first reaches 2π, by linear interpolation.
    let states = &traj.states;
    let k = states
        .iter()
        .position(|s| s.position[1].re >= 2.0 * PI)
        .expect("one full orbit");
    let (a, b) = (&states[k - 1], &states[k]);
    let f = (2.0 * PI - a.position[1].re) / (b.position[1].re - a.position[1].re);
    let period = a.position[3].re + f * (b.position[3].re - a.position[3].re);
    let kepler = 2.0 * PI / le.orbital_frequency(r);
    assert!((period / kepler - 1.0).abs() < 0.01, "{period} vs {kepler}");

    // Radius stays put and g(v, v) is conserved.
    let n0 = geometry::norm_sq(&field, &start.position, &start.velocity);
    for s in states {
        assert!((s.position[2].re - r).abs() < 1e-3);
        let n = geometry::norm_sq(&field, &s.position, &s.velocity);
        assert!((n - n0).norm() < 1e-6);
    }
}

#[test]
fn plane_wave_geodesic_conserves_norm() {
    let field = geometry::perturbed_field(1.0, 0.5, 0.05).unwrap();
    let v = [0.1, 0.0, 0.3, 1.1];
    let start = GeodesicState::real([0.0, 0.0, 0.2, 0.0], v);
    let traj = geometry::geodesic_integrate(&field, start, 10_000, 1e-3, None).unwrap();
    let n0 = geometry::norm_sq(&field, &start.position, &start.velocity);
    let last = traj.states.last().unwrap();
    let n1 = geometry::norm_sq(&field, &last.position, &last.velocity);
    assert!((n1 - n0).norm() < 1e-6, "{n0} -> {n1}");
}

fn terminal_x_variance(steps: usize, paths: u64, quantum: f64) -> f64 {
    let field = geometry::minkowski_field();
    let xs: Vec<f64> = (0..paths)
        .map(|i| {
            let kick = StochasticKick {
                walk: WalkConfig::default(),
                rng: RngStream::new(17, i),
                quantum: [quantum; 4],
            };
            let start = GeodesicState::real([0.0; 4], [0.0, 0.0, 0.0, 1.0]);
            let t = geometry::geodesic_integrate(&field, start, steps, 0.1, Some(kick)).unwrap();
            t.states.last().unwrap().position[0].re
        })
        .collect();
    let mean = xs.iter().sum::<f64>() / xs.len() as f64;
    xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
}

#[test]
fn stochastic_ensemble_spreads_linearly() {
    let q = 1e-3;
    for steps in [50, 100, 200] {
        let v = terminal_x_variance(steps, 1000, q);
        let ratio = v / (steps as f64 * q * q);
        // Standard error of a 1000-sample variance is about 4.5%.
        assert!((ratio - 1.0).abs() < 0.15, "steps {steps}: {ratio}");
    }
    assert_eq!(terminal_x_variance(50, 20, q), terminal_x_variance(50, 20, q));
}

#[test]
fn singular_point_truncates_trajectory() {
    let field = MetricField::new("collapsing", 1.0, |x| {
        // Lapse vanishes for every t >= 10.
        let g = granular_spacetime::Complex::new((1.0 - x[3].re / 10.0).max(0.0), 0.0);
        Metric4::diag(
            [1.0.into(), 1.0.into(), 1.0.into(), -g],
            granular_spacetime::metric::CoordinateFrame::Cartesian,
        )
    });
    let start = GeodesicState::real([0.0; 4], [0.0, 0.0, 0.0, 1.0]);
    let traj = geometry::geodesic_integrate(&field, start, 1000, 0.05, None).unwrap();
    assert!(traj.diagnostic.is_some());
    assert!(traj.states.len() < 1001);
    assert!(geometry::geodesic_integrate(
        &field,
        GeodesicState::real([0.0, 0.0, 0.0, 10.0], [0.0; 4]),
        1,
        0.1,
        None
    )
    .is_err());
}

#[test]
fn schwarzschild_bundle_volume_is_ricci_flat() {
    let le = assemble_line_element(1.0).unwrap();
    let field = le.metric_field();
    let probe = VolumeProbe::static_observer(&field, [FRAC_PI_2, 0.0, 10.0, 0.0], 1e-3, 2e-2);
    let v = geometry::volume_evolution_residual(&field, &probe).unwrap();
    assert!(v.residual < 1e-4, "{v:?}");
    assert!(v.tidal_scale > 1e-4);
    assert!(v.rhs.norm() < 1e-6 * v.o.norm());
}

#[test]
fn trajectory_csv_header() {
    let start = GeodesicState::real([0.0; 4], [0.0, 0.0, 0.0, 1.0]);
    let t = geometry::geodesic_integrate(&geometry::minkowski_field(), start, 3, 0.5, None).unwrap();
    let text = String::from_utf8(geometry::trajectory_csv(&t).unwrap()).unwrap();
    assert_eq!(text.lines().next().unwrap(), "s,x,y,z,t,vx,vy,vz,vt");
    assert_eq!(text.lines().count(), 5);
    let _ = real_point([0.0; 4]);
}
