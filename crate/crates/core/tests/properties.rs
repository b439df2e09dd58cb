use plap_core::functionals::{lyapunov_max_increase, lyapunov_series, radial_integral, w1p_norm_p};
use plap_core::ivp::{integrate, integrate_limit, IntegratorControls};
use plap_core::{
    energy, nehari_project, signed_power, ProblemParams, RadialProfile, TruncationParams,
};
use proptest::prelude::*;

fn coarse() -> IntegratorControls {
    IntegratorControls {
        grid_intervals: 256,
        rel_tol: 1e-11,
        ..Default::default()
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn signed_power_round_trip(s in -1e3f64..1e3, alpha in 0.1f64..5.0) {
        let back = signed_power(signed_power(s, alpha), 1.0 / alpha);
        prop_assert!((back - s).abs() <= 1e-12 * s.abs().max(1e-300));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn radial_integral_is_linear(a in -3.0f64..3.0, b in -3.0f64..3.0, dim in 1usize..5, m in 8usize..200) {
        let pp = ProblemParams::new(dim, 1.5, 10.0).unwrap();
        let f: Vec<f64> = (0..=m).map(|i| (i as f64 / m as f64).sin()).collect();
        let g: Vec<f64> = (0..=m).map(|i| 1.0 + (i as f64 / m as f64).powi(3)).collect();
        let mix: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let lhs = radial_integral(&mix, &pp);
        let rhs = a * radial_integral(&f, &pp) + b * radial_integral(&g, &pp);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn nehari_projection_lands_on_the_manifold(
        c in 0.2f64..1.5,
        amp in 0.0f64..0.8,
        k in 1i32..4,
        dim in 1usize..4,
        q in 4.0f64..30.0,
    ) {
        let pp = ProblemParams::new(dim, 1.5, q).unwrap();
        let trunc = TruncationParams::default_for(&pp);
        let prof = RadialProfile::from_fn(256, |r| c + amp * r.powi(k), |r| amp * k as f64 * r.powi(k - 1));
        let t = nehari_project(&prof, &pp, &trunc).unwrap();
        let proj = prof.scaled(t);
        let rep = energy(&proj, &pp, &trunc).unwrap();
        prop_assert!(rep.nehari_residual.abs() <= 1e-10 * rep.w1p_p);
        // On the Nehari set the energy is (1/p - 1/q) times the norm.
        let alt = (1.0 / 1.5 - 1.0 / q) * rep.w1p_p;
        prop_assert!((rep.energy - alt).abs() <= 1e-10 * alt);
        prop_assert!((rep.energy - (rep.w1p_p / 1.5 - rep.q_term)).abs() <= 1e-12 * rep.w1p_p);
    }

    #[test]
    fn lyapunov_decreases_along_trajectories(d in 0.05f64..0.999, dim in 1usize..4, q in 5.0f64..60.0, p in 1.2f64..2.0) {
        let pp = ProblemParams::new(dim, p, q).unwrap();
        let run = integrate(d, &pp, &coarse()).unwrap();
        let l = lyapunov_series(&run.profile, &pp);
        prop_assert!(lyapunov_max_increase(&l) <= 1e-8);
        if dim == 1 {
            let spread = l.iter().fold(0.0f64, |m, v| m.max((v - l[0]).abs()));
            prop_assert!(spread <= 1e-8, "spread {}", spread);
        }
    }

    #[test]
    fn limit_system_is_homogeneous(d in 0.2f64..5.0, dim in 1usize..4, p in 1.2f64..2.0) {
        let pp = ProblemParams::new(dim, p, 10.0).unwrap();
        let c = IntegratorControls { u_cap: Some(f64::MAX), ..coarse() };
        let one = integrate_limit(1.0, &pp, &c).unwrap();
        let scaled = integrate_limit(d, &pp, &c).unwrap();
        for (a, b) in one.profile.values().iter().zip(scaled.profile.values()) {
            prop_assert!((d * a - b).abs() <= 1e-8 * b.abs());
        }
    }

    #[test]
    fn w1p_norm_scales_homogeneously(c in 0.1f64..4.0, dim in 1usize..4) {
        let pp = ProblemParams::new(dim, 1.7, 10.0).unwrap();
        let prof = RadialProfile::from_fn(128, |r| 1.0 + r * r, |r| 2.0 * r);
        let n1 = w1p_norm_p(&prof, &pp).unwrap();
        let nc = w1p_norm_p(&prof.scaled(c), &pp).unwrap();
        prop_assert!((nc - c.powf(1.7) * n1).abs() <= 1e-12 * nc);
    }
}
