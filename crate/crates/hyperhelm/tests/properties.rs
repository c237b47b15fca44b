//! Property tests over randomized admissible inputs.

use proptest::prelude::*;

use hyperhelm::energy::energy_trace;
use hyperhelm::normscan::ball_norm_profile;
use hyperhelm::profile::{CoefficientProfile, RadialProfile};
use hyperhelm::solver::solve_radial_ivp;
use hyperhelm::RadialGeometry;

fn geometries() -> impl Strategy<Value = RadialGeometry> {
    prop_oneof![
        (2u32..6).prop_map(RadialGeometry::hyperbolic),
        (2u32..5).prop_map(RadialGeometry::euclidean),
        ((1u32..4), (1u32..3)).prop_map(|(m, k)| RadialGeometry::damek_ricci(m, k)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 12,
        max_shrink_iters: 4,
        ..ProptestConfig::default()
    })]

    /// Solver postcondition: the dense-output defect stays below
    /// tol (1 + |u| + |u'|) at interior checkpoints (certified internally),
    /// the initial data are reproduced, and between consecutive zeros the
    /// sign of u is constant.
    #[test]
    fn solver_defect_and_zero_structure(
        geom in geometries(),
        margin in 0.3f64..4.0,
        gamma0 in prop_oneof![(-2.0f64..2.0).prop_filter("nonzero", |g| g.abs() > 1e-3)],
        gamma_w in 0.0f64..0.8,
        p in 2.2f64..4.0,
    ) {
        let kappa = geom.kappa();
        let v = 0.25 * kappa * kappa + margin;
        let coeffs = CoefficientProfile::new(
            RadialProfile::Constant(v),
            if gamma_w == 0.0 { RadialProfile::Zero } else { RadialProfile::Constant(gamma_w) },
            p,
        ).unwrap();
        let tol = 1e-8;
        let sol = solve_radial_ivp(&geom, &coeffs, gamma0, 18.0, tol).unwrap();
        prop_assert!(sol.stats.max_defect_ratio <= 1.0);
        prop_assert!((sol.eval(0.0).0 - gamma0).abs() < 1e-12);
        prop_assert!(sol.eval(0.0).1.abs() < 1e-12);
        for w in sol.zeros.windows(2) {
            let probe = [0.25, 0.5, 0.75].map(|f| sol.eval(w[0] + f * (w[1] - w[0])).0);
            prop_assert!(probe.iter().all(|&x| x.signum() == probe[0].signum()));
        }
        // consecutive zeros separated by at least the smallest step
        for w in sol.zeros.windows(2) {
            prop_assert!(w[1] - w[0] >= sol.min_step() * 0.99);
        }
    }

    /// Z(0) identity holds to machine precision for all inputs.
    #[test]
    fn z0_identity(
        margin in 0.3f64..4.0,
        gamma0 in -3.0f64..3.0,
        gamma_w in 0.0f64..1.0,
        p in 2.2f64..4.5,
    ) {
        let geom = RadialGeometry::hyperbolic(3);
        let v = 1.0 + margin;
        let coeffs = CoefficientProfile::new(
            RadialProfile::Constant(v),
            RadialProfile::Constant(gamma_w),
            p,
        ).unwrap();
        let sol = solve_radial_ivp(&geom, &coeffs, gamma0, 12.0, 1e-8).unwrap();
        let trace = energy_trace(&sol, &geom, &coeffs).unwrap();
        let expected = 0.5 * v * gamma0 * gamma0 + gamma_w * gamma0.abs().powf(p) / p;
        prop_assert!((trace.z0 - expected).abs() <= 1e-14 * expected.abs().max(1.0));
        prop_assert!((trace.z[0] - expected).abs() <= 1e-14 * expected.abs().max(1.0));
    }

    /// Ball norms are nondecreasing in R, exactly as integrals of a
    /// nonnegative integrand.
    #[test]
    fn ball_norms_monotone(
        r_exp in 1.0f64..5.0,
        lambda in 0.6f64..2.0,
    ) {
        let geom = RadialGeometry::hyperbolic(3);
        let coeffs = CoefficientProfile::helmholtz(&geom, lambda, RadialProfile::Zero, 3.0).unwrap();
        let sol = solve_radial_ivp(&geom, &coeffs, 1.0, 25.0, 1e-9).unwrap();
        let radii = [4.0, 8.0, 12.0, 16.0, 20.0, 24.0];
        let profile = ball_norm_profile(&sol, &geom, &coeffs, r_exp, &radii).unwrap();
        for w in profile.norms.windows(2) {
            prop_assert!(w[1] >= w[0] * (1.0 - 1e-14));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig {
        cases: 64,
        max_shrink_iters: 16,
        ..ProptestConfig::default()
    })]

    /// The config and table parsers are total: arbitrary input produces a
    /// Result, never a panic.
    #[test]
    fn parsers_never_panic(text in ".{0,400}") {
        let _ = hyperhelm::config::parse_config(&text);
        let _ = hyperhelm::config::parse_profile_table(&text);
    }

    /// Parsed numeric configs echo every key.
    #[test]
    fn config_echo_complete(r_max in 5.0f64..50.0, tol in 1e-12f64..1e-4) {
        let text = format!("experiment = solve\nr_max = {r_max}\ntol = {tol}\n");
        let raw = hyperhelm::config::parse_config(&text).unwrap();
        let cfg = hyperhelm::config::build_experiment(
            &raw, std::path::Path::new("."), None).unwrap();
        prop_assert_eq!(cfg.r_max, r_max);
        prop_assert_eq!(cfg.tol, tol);
        prop_assert_eq!(cfg.echo.len(), 3);
    }
}
