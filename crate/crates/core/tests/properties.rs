use granular_spacetime::compton::{self, periodogram};
use granular_spacetime::geometry::{self, real_point, GeodesicState};
use granular_spacetime::gravity::{self, assemble_line_element, IndeterminacyField};
use granular_spacetime::rng::RngStream;
use granular_spacetime::units::planck_units;
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn t_bar_halves_when_mass_doubles(m in 1e-35f64..1e-5, axes in prop::sample::select(vec![1u32, 3])) {
        let u = planck_units();
        let a = compton::t_bar_of_mass(m, axes, &u).unwrap();
        let b = compton::t_bar_of_mass(2.0 * m, axes, &u).unwrap();
        prop_assert!((b / a - 0.5).abs() < 1e-12);
        let back = compton::mass_of_t_bar(a, axes, &u).unwrap();
        prop_assert!((back / m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn line_element_product_is_minus_one(r_s in 1e-3f64..1e3, f in 1.0001f64..1e4) {
        let le = assemble_line_element(r_s).unwrap();
        let r = r_s * f;
        let p = le.g_tt(r).unwrap() * le.g_rr(r).unwrap();
        prop_assert!((p + 1.0).abs() < 1e-12, "{p}");
    }

    #[test]
    fn christoffel_is_symmetric(
        k in 0.1f64..3.0, w in 0.1f64..3.0, b in 0.0f64..0.2,
        z in -2.0f64..2.0, t in -2.0f64..2.0,
    ) {
        let field = geometry::perturbed_field(k, w, b).unwrap();
        let g = geometry::christoffel(&field, &real_point([0.3, -0.1, z, t])).unwrap();
        for l in 0..4 {
            for m in 0..4 {
                for n in 0..4 {
                    prop_assert_eq!(g.gamma[l][m][n], g.gamma[l][n][m]);
                }
            }
        }
    }

    #[test]
    fn periodogram_satisfies_parseval(xs in prop::collection::vec(-10.0f64..10.0, 4..200)) {
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let energy: f64 = xs.iter().map(|x| (x - mean).powi(2)).sum();
        let (_, power) = periodogram(&xs);
        let total: f64 = power.iter().sum();
        prop_assert!((total - energy / n).abs() <= 1e-9 * energy.max(1.0), "{total} vs {}", energy / n);
    }

    #[test]
    fn flat_geodesics_are_straight(x in prop::array::uniform4(-5.0f64..5.0), v in prop::array::uniform4(-2.0f64..2.0)) {
        let traj = geometry::geodesic_integrate(
            &geometry::minkowski_field(), GeodesicState::real(x, v), 20, 0.25, None,
        ).unwrap();
        let last = traj.states.last().unwrap();
        for i in 0..4 {
            prop_assert!((last.position[i].re - (x[i] + 5.0 * v[i])).abs() < 1e-9);
        }
    }

    #[test]
    fn absorbed_walkers_stay_put(seed in any::<u64>(), start in 3i64..12) {
        let field = IndeterminacyField::schwarzschild(2.0).unwrap();
        let path = gravity::radial_trajectory(&field, start, 400, RngStream::new(seed, 0));
        if let Some(i) = path.iter().position(|&r| field.absorbs(r as f64)) {
            prop_assert!(path[i..].iter().all(|&r| r == path[i]));
        }
        prop_assert!(path.windows(2).all(|w| (w[1] - w[0]).abs() <= 1));
    }

    #[test]
    fn indeterminacy_rises_outward(r_s in 0.5f64..50.0, a in 1.01f64..100.0, d in 0.01f64..100.0) {
        let field = IndeterminacyField::schwarzschild(r_s).unwrap();
        let (r1, r2) = (a * r_s, (a + d) * r_s);
        prop_assert!(field.u(r1) < field.u(r2));
        prop_assert!(field.u(r2) < 1.0);
    }
}
