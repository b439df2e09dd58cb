//! In one dimension the radial equation has the first integral
//! `((p-1)/p)|u'|^p = F(u) - F(d)` with `F(u) = u^p/p - u^q/q`, so a monotone
//! Neumann solution is a half-orbit from `d` to the turning point `u1 > 1`
//! with `F(u1) = F(d)`, travelled in time exactly 1. Solving that by
//! quadrature gives the roots without any ODE stepping.

use plap_core::ivp::IntegratorControls;
use plap_core::{find_solutions, EnergyLabel, ProblemParams, ScanSpec};

fn big_f(u: f64, p: f64, q: f64) -> f64 {
    u.powf(p) / p - u.powf(q) / q
}

fn turning_point(d: f64, p: f64, q: f64) -> f64 {
    let target = big_f(d, p, q);
    let (mut a, mut b) = (1.0, 2.0);
    while big_f(b, p, q) > target {
        b *= 1.5;
    }
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if big_f(m, p, q) > target {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

/// Travel time from `d` to the turning point.
fn half_orbit_time(d: f64, p: f64, q: f64) -> f64 {
    let u1 = turning_point(d, p, q);
    let fd = big_f(d, p, q);
    let speed = |u: f64| {
        ((p / (p - 1.0)) * (big_f(u, p, q) - fd))
            .max(0.0)
            .powf(1.0 / p)
    };
    // Both endpoints are simple zeros of F - F(d), so the integrand blows up
    // like |u - end|^{-1/p}; u = end ± (half span) t^k with k = p/(p-1)
    // removes the singularity.
    let k = p / (p - 1.0);
    let half = 0.5 * (u1 - d);
    // Composite 3-point Gauss-Legendre never evaluates at t = 0.
    let nodes = [-(0.6f64).sqrt(), 0.0, (0.6f64).sqrt()];
    let weights = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];
    let panels = 2000;
    let h = 1.0 / panels as f64;
    let mut total = 0.0;
    for (end, sign) in [(d, 1.0), (u1, -1.0)] {
        let g = |t: f64| {
            let u = end + sign * half * t.powf(k);
            half * k * t.powf(k - 1.0) / speed(u)
        };
        for i in 0..panels {
            let mid = (i as f64 + 0.5) * h;
            for (x, w) in nodes.iter().zip(weights) {
                total += 0.5 * h * w * g(mid + 0.5 * h * x);
            }
        }
    }
    total
}

/// Roots of `T(d) = 1` on a coarse grid of `(lo, hi)`, refined by bisection.
fn oracle_roots(p: f64, q: f64, lo: f64, hi: f64) -> Vec<f64> {
    let n = 400;
    let grid: Vec<f64> = (0..=n)
        .map(|i| lo + (hi - lo) * i as f64 / n as f64)
        .collect();
    let vals: Vec<f64> = grid
        .iter()
        .map(|d| half_orbit_time(*d, p, q) - 1.0)
        .collect();
    let mut roots = Vec::new();
    for i in 0..n {
        if vals[i] * vals[i + 1] < 0.0 {
            let (mut a, mut b, fa) = (grid[i], grid[i + 1], vals[i]);
            for _ in 0..50 {
                let m = 0.5 * (a + b);
                let fm = half_orbit_time(m, p, q) - 1.0;
                if fm * fa > 0.0 {
                    a = m;
                } else {
                    b = m;
                }
            }
            roots.push(0.5 * (a + b));
        }
    }
    roots
}

#[test]
fn oracle_reproduces_cosh_period() {
    let t = half_orbit_time(0.9, 2.0, 2.5);
    assert!(t.is_finite() && t > 0.0);
    // Small oscillations about 1 at p = 2 have half period π/sqrt(q-2).
    let q = 6.0;
    let t = half_orbit_time(1.0 - 1e-4, 2.0, q);
    assert!(
        (t - std::f64::consts::PI / (q - 2.0f64).sqrt()).abs() < 1e-3,
        "{t}"
    );
}

#[test]
fn shooting_roots_match_first_integral() {
    for q in [40.0, 80.0] {
        let params = ProblemParams::new(1, 1.5, q).unwrap();
        let set = find_solutions(
            &params,
            &IntegratorControls::default(),
            &ScanSpec::default(),
        )
        .unwrap();
        let accepted: Vec<_> = set.accepted().collect();
        assert_eq!(accepted.len(), 2, "q = {q}");

        let expected = oracle_roots(1.5, q, 0.5, 0.9999);
        assert_eq!(expected.len(), 2, "oracle at q = {q}: {expected:?}");
        for (root, want) in accepted.iter().zip(&expected) {
            assert!(
                (root.d - want).abs() < 1e-6,
                "q = {q}: shooting {} vs oracle {want}",
                root.d
            );
        }
        assert_eq!(accepted[0].label, EnergyLabel::LowEnergy);
        assert_eq!(accepted[1].label, EnergyLabel::HighEnergy);
    }
}
