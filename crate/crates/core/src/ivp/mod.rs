//! Radial initial-value problem.
//!
//! With the flux `w = r^{N-1} |u'|^{p-2} u'` the radial equation becomes the
//! first-order system
//!
//! ```text
//! u' = signed_power(w / r^{N-1}, 1/(p-1))
//! w' = r^{N-1} (u^{p-1} - u^{q-1})
//! ```
//!
//! started at `u(0) = d`, `w(0) = 0`. The quotient `w / r^{N-1}` is `0/0` at
//! the origin, so integration starts at `r = eps0` from the local expansion.

mod dop853;

use serde::{Deserialize, Serialize};
use std::ops::ControlFlow;

use crate::error::{Error, Result};
use crate::problem::{signed_power, uniform_grid, ProblemParams, RadialProfile, TruncationParams};

pub use dop853::StepStats;
use dop853::{drive, DriveStatus, Tolerances};

/// Which right-hand side to integrate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    /// `w' = r^{N-1}(u^{p-1} - u^{q-1})`.
    Full,
    /// `w' = r^{N-1} u^{p-1}`, the limit system as `q → ∞` below the level 1.
    Free,
}

/// Stepper and sampling settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegratorControls {
    /// Radius where the series start hands over to the stepper.
    pub eps0: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Blow-up threshold; `None` selects [`default_u_cap`].
    pub u_cap: Option<f64>,
    pub max_steps: usize,
    /// Number of intervals of the uniform report grid.
    pub grid_intervals: usize,
}

impl Default for IntegratorControls {
    fn default() -> Self {
        Self {
            eps0: 1e-6,
            rel_tol: 1e-12,
            abs_tol: 1e-14,
            u_cap: None,
            max_steps: 200_000,
            grid_intervals: 2048,
        }
    }
}

impl IntegratorControls {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if !(self.eps0 > 0.0 && self.eps0 < 1e-2) {
            return bad(format!("eps0 = {} must lie in (0, 1e-2)", self.eps0));
        }
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return bad("tolerances must be positive".into());
        }
        if self.grid_intervals < 2 {
            return bad("report grid needs at least 2 intervals".into());
        }
        if self.max_steps == 0 {
            return bad("max_steps must be positive".into());
        }
        if let Some(cap) = self.u_cap {
            if cap.is_nan() || cap <= 1.0 {
                return bad(format!("u_cap = {cap} must exceed 1"));
            }
        }
        Ok(())
    }

    pub fn resolved_u_cap(&self, params: &ProblemParams) -> f64 {
        self.u_cap.unwrap_or_else(|| default_u_cap(params))
    }
}

/// `10 · max(s0, (q/p)^{1/(q-p)})` with the default truncation height.
pub fn default_u_cap(params: &ProblemParams) -> f64 {
    let s0 = TruncationParams::default_for(params).s0();
    10.0 * s0.max(params.value_bound())
}

/// A point of the radial flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IvpState {
    pub r: f64,
    pub u: f64,
    /// Flux `r^{N-1} |u'|^{p-2} u'`.
    pub w: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum IvpStatus {
    ReachedOne,
    BlewUp { radius: f64 },
    StepBudgetExhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IvpResult {
    pub d: f64,
    pub status: IvpStatus,
    /// Samples on the report grid up to the terminal radius.
    pub profile: RadialProfile,
    pub terminal: IvpState,
    pub stats: StepStats,
}

/// `u'` recovered from the flux at radius `r`.
#[inline]
pub fn slope_from_flux(r: f64, w: f64, params: &ProblemParams) -> f64 {
    if r == 0.0 {
        return 0.0;
    }
    let rn = r.powi(params.dim() as i32 - 1);
    signed_power(w / rn, 1.0 / (params.p() - 1.0))
}

fn source_constant(d: f64, params: &ProblemParams, source: Source) -> f64 {
    let base = signed_power(d, params.p() - 1.0);
    match source {
        Source::Full => base - signed_power(d, params.q() - 1.0),
        Source::Free => base,
    }
}

/// Local expansion of the flow at radius `r` near the origin.
fn series_state(d: f64, r: f64, params: &ProblemParams, source: Source) -> IvpState {
    let n = params.dim() as f64;
    let p = params.p();
    let c0 = source_constant(d, params, source);
    let w = c0 * r.powf(n) / n;
    let u = d + (p - 1.0) / p * signed_power(c0 / n, 1.0 / (p - 1.0)) * r.powf(p / (p - 1.0));
    IvpState { r, u, w }
}

/// State at `r = eps0` obtained from the first-order expansion at the origin.
pub fn series_start(d: f64, params: &ProblemParams, controls: &IntegratorControls) -> IvpState {
    series_state(d, controls.eps0, params, Source::Full)
}

fn rhs(params: &ProblemParams, source: Source) -> impl Fn(f64, &[f64; 2]) -> [f64; 2] + '_ {
    let dim = params.dim() as i32;
    let (p, q) = (params.p(), params.q());
    let inv = 1.0 / (p - 1.0);
    move |r, y| {
        let rn = r.powi(dim - 1);
        let du = signed_power(y[1] / rn, inv);
        let mut dw = signed_power(y[0], p - 1.0);
        if source == Source::Full {
            dw -= signed_power(y[0], q - 1.0);
        }
        [du, rn * dw]
    }
}

/// Integrates the full system from `u(0) = d` to `r = 1`.
pub fn integrate(
    d: f64,
    params: &ProblemParams,
    controls: &IntegratorControls,
) -> Result<IvpResult> {
    integrate_with(d, params, controls, Source::Full)
}

/// Integrates the source-free limit system from `u(0) = d`.
pub fn integrate_limit(
    d: f64,
    params: &ProblemParams,
    controls: &IntegratorControls,
) -> Result<IvpResult> {
    integrate_with(d, params, controls, Source::Free)
}

pub fn integrate_with(
    d: f64,
    params: &ProblemParams,
    controls: &IntegratorControls,
    source: Source,
) -> Result<IvpResult> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidHeight(d));
    }
    controls.validate()?;
    let u_cap = controls.resolved_u_cap(params);
    let grid = uniform_grid(controls.grid_intervals);
    let mut values = Vec::with_capacity(grid.len());
    let mut derivs = Vec::with_capacity(grid.len());
    let slope = |s: &IvpState| slope_from_flux(s.r, s.w, params);

    values.push(d);
    derivs.push(0.0);
    let mut next = 1;
    while next < grid.len() && grid[next] <= controls.eps0 {
        let s = series_state(d, grid[next], params, source);
        values.push(s.u);
        derivs.push(slope(&s));
        next += 1;
    }

    let start = series_state(d, controls.eps0, params, source);
    let tol = Tolerances {
        rtol: controls.rel_tol,
        atol: controls.abs_tol,
    };
    let mut blow_up = None;

    let out = drive(
        rhs(params, source),
        start.r,
        [start.u, start.w],
        1.0,
        tol,
        controls.max_steps,
        |dense, y_new| {
            let t_new = dense.t_new();
            let limit = if y_new[0] >= u_cap {
                // Bisect the dense output for the crossing of u_cap.
                let (mut a, mut b) = (dense.t_old, t_new);
                for _ in 0..60 {
                    let mid = 0.5 * (a + b);
                    if dense.eval(mid)[0] >= u_cap {
                        b = mid;
                    } else {
                        a = mid;
                    }
                }
                blow_up = Some(b);
                b
            } else {
                t_new
            };
            while next < grid.len() && grid[next] <= limit {
                let r = grid[next];
                let y = if r == t_new { *y_new } else { dense.eval(r) };
                values.push(y[0]);
                derivs.push(slope(&IvpState {
                    r,
                    u: y[0],
                    w: y[1],
                }));
                next += 1;
            }
            if blow_up.is_some() {
                ControlFlow::Break(())
            } else {
                ControlFlow::Continue(())
            }
        },
    );

    let terminal = IvpState {
        r: out.t,
        u: out.y[0],
        w: out.y[1],
    };
    let status = match (out.status, blow_up) {
        (_, Some(radius)) => IvpStatus::BlewUp { radius },
        (DriveStatus::Finished, None) => IvpStatus::ReachedOne,
        _ => IvpStatus::StepBudgetExhausted,
    };

    let mut nodes = grid[..values.len()].to_vec();
    if values.len() < 2 || !matches!(status, IvpStatus::ReachedOne) {
        // Close the truncated profile with the terminal state.
        if terminal.r > nodes[nodes.len() - 1] {
            nodes.push(terminal.r);
            values.push(terminal.u);
            derivs.push(slope(&terminal));
        }
    }
    let profile = RadialProfile::new(nodes, values, derivs)?;
    Ok(IvpResult {
        d,
        status,
        profile,
        terminal,
        stats: out.stats,
    })
}

/// Settings for [`convergence_order_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderProbeConfig {
    /// Initial height of the probed trajectory.
    pub d: f64,
    /// Decreasing probe tolerances.
    pub tolerances: Vec<f64>,
    pub reference_tol: f64,
    /// Errors are measured on report nodes with `r >= r_min`.
    pub r_min: f64,
}

impl Default for OrderProbeConfig {
    fn default() -> Self {
        Self {
            d: 0.3,
            tolerances: vec![1e-5, 1e-6, 1e-7],
            reference_tol: 1e-14,
            r_min: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OrderProbe {
    pub tolerances: Vec<f64>,
    pub errors: Vec<f64>,
    pub steps: Vec<usize>,
    /// Least-squares slope of `-log(error)` against `log(steps)`.
    pub order: f64,
}

/// Empirical convergence order of the stepper on one trajectory.
///
/// Error is the sup over report nodes in `[r_min, 1]` against a
/// tight-tolerance reference; the order relates it to the accepted step
/// count, which for an error-per-step controller scales as `tol^{-1/(k+1)}`.
pub fn convergence_order_probe(
    params: &ProblemParams,
    controls: &IntegratorControls,
    probe: &OrderProbeConfig,
) -> Result<OrderProbe> {
    if probe.tolerances.len() < 2 {
        return Err(Error::Degenerate(
            "order probe needs at least two tolerances".into(),
        ));
    }
    let with_tol = |tol: f64| IntegratorControls {
        rel_tol: tol,
        abs_tol: tol,
        ..*controls
    };
    let reference = integrate(probe.d, params, &with_tol(probe.reference_tol))?;
    let mut errors = Vec::new();
    let mut steps = Vec::new();
    for &tol in &probe.tolerances {
        let run = integrate(probe.d, params, &with_tol(tol))?;
        if run.profile.len() != reference.profile.len() {
            return Err(Error::Degenerate(
                "probe trajectory did not reach r = 1".into(),
            ));
        }
        let err = run
            .profile
            .nodes()
            .iter()
            .zip(run.profile.values().iter().zip(reference.profile.values()))
            .filter(|(r, _)| **r >= probe.r_min)
            .fold(0.0_f64, |a, (_, (x, y))| a.max((x - y).abs()));
        errors.push(err);
        steps.push(run.stats.accepted);
    }
    if errors.contains(&0.0) {
        return Err(Error::Degenerate(
            "zero error: trajectory is an exact fixed point".into(),
        ));
    }
    let xs: Vec<f64> = steps.iter().map(|s| (*s as f64).ln()).collect();
    let ys: Vec<f64> = errors.iter().map(|e| -e.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate(
            "step counts do not vary with tolerance".into(),
        ));
    }
    Ok(OrderProbe {
        tolerances: probe.tolerances.clone(),
        errors,
        steps,
        order: sxy / sxx,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, p: f64, q: f64) -> ProblemParams {
        ProblemParams::new(n, p, q).unwrap()
    }

    #[test]
    fn series_start_examples() {
        let pp = params(1, 1.5, 10.0);
        let ctl = IntegratorControls {
            eps0: 1e-3,
            ..Default::default()
        };
        let one = series_start(1.0, &pp, &ctl);
        assert_eq!((one.u, one.w), (1.0, 0.0));

        let s = series_start(0.5, &pp, &ctl);
        let c0 = 0.5f64.powf(0.5) - 0.5f64.powi(9);
        assert!((c0 - 0.705_154).abs() < 1e-6);
        assert!((s.w - 7.051_54e-4).abs() < 1e-9);
        assert!((s.u - 0.5 - 1.6575e-10).abs() < 1e-14);

        let s2 = series_start(0.5, &params(2, 1.5, 10.0), &ctl);
        assert!((s2.w - 3.525_77e-7).abs() < 1e-11);
    }

    #[test]
    fn constant_solution_is_a_fixed_point() {
        let pp = params(2, 1.5, 40.0);
        let res = integrate(1.0, &pp, &IntegratorControls::default()).unwrap();
        assert_eq!(res.status, IvpStatus::ReachedOne);
        assert_eq!(res.profile.len(), 2049);
        assert!(res.profile.values().iter().all(|v| *v == 1.0));
        assert!(res.profile.derivs().iter().all(|v| *v == 0.0));
        assert_eq!(res.terminal.w, 0.0);
    }

    #[test]
    fn start_above_value_bound_bends_down() {
        let pp = params(1, 1.5, 10.0);
        let d = pp.value_bound() + 0.5;
        let res = integrate(d, &pp, &IntegratorControls::default()).unwrap();
        let vals = res.profile.values();
        // u^{p-1} - u^{q-1} < 0 while u > 1: flux and slope stay negative.
        let above: Vec<usize> = (1..vals.len()).take_while(|&i| vals[i] > 1.0).collect();
        assert!(!above.is_empty());
        for &i in &above {
            assert!(vals[i] < vals[i - 1]);
            assert!(res.profile.derivs()[i] < 0.0);
        }
    }

    #[test]
    fn p2_limit_system_reproduces_cosh() {
        let pp = params(1, 2.0, 10.0);
        let res = integrate_limit(1.0, &pp, &IntegratorControls::default()).unwrap();
        for (r, (u, du)) in res
            .profile
            .nodes()
            .iter()
            .zip(res.profile.values().iter().zip(res.profile.derivs()))
        {
            assert!((u - r.cosh()).abs() <= 1e-11 * r.cosh(), "u at {r}");
            assert!((du - r.sinh()).abs() <= 1e-10, "u' at {r}");
        }
    }

    #[test]
    fn halving_eps0_barely_moves_the_trajectory() {
        for (n, p) in [(1, 1.5), (2, 1.5), (3, 1.3)] {
            let pp = params(n, p, 40.0);
            let ctl = IntegratorControls::default();
            let half = IntegratorControls {
                eps0: ctl.eps0 / 2.0,
                ..ctl
            };
            let a = integrate(0.8, &pp, &ctl).unwrap();
            let b = integrate(0.8, &pp, &half).unwrap();
            let i = (0.1 * ctl.grid_intervals as f64).round() as usize;
            assert!((a.profile.nodes()[i] - 0.1).abs() < 1e-3);
            let diff = (a.profile.values()[i] - b.profile.values()[i]).abs();
            assert!(diff <= 1e-10, "N={n} p={p}: {diff:e}");
        }
    }

    #[test]
    fn invalid_height_rejected() {
        let pp = params(1, 1.5, 10.0);
        assert!(integrate(0.0, &pp, &IntegratorControls::default()).is_err());
        assert!(integrate(f64::NAN, &pp, &IntegratorControls::default()).is_err());
    }

    #[test]
    fn blow_up_event_is_located() {
        // The p = 2 limit trajectory is cosh(r); a cap of 1.2 is hit at acosh(1.2).
        let pp = params(1, 2.0, 10.0);
        let ctl = IntegratorControls {
            u_cap: Some(1.2),
            ..Default::default()
        };
        let res = integrate_limit(1.0, &pp, &ctl).unwrap();
        match res.status {
            IvpStatus::BlewUp { radius } => {
                assert!((radius - 1.2f64.acosh()).abs() < 1e-10, "radius {radius}");
                assert!(res.terminal.u >= 1.2);
                let nodes = res.profile.nodes();
                assert!(nodes[nodes.len() - 2] <= radius);
                assert!((nodes[nodes.len() - 1] - res.terminal.r).abs() < 1e-15);
            }
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn step_budget_is_reported() {
        let pp = params(1, 1.5, 10.0);
        let ctl = IntegratorControls {
            max_steps: 2,
            ..Default::default()
        };
        let res = integrate(0.5, &pp, &ctl).unwrap();
        assert_eq!(res.status, IvpStatus::StepBudgetExhausted);
    }

    #[test]
    fn runs_are_deterministic() {
        let pp = params(2, 1.5, 80.0);
        let a = integrate(0.93, &pp, &IntegratorControls::default()).unwrap();
        let b = integrate(0.93, &pp, &IntegratorControls::default()).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn order_probe_skips_constant() {
        let pp = params(1, 2.0, 10.0);
        let probe = OrderProbeConfig {
            d: 1.0,
            ..Default::default()
        };
        assert!(convergence_order_probe(&pp, &IntegratorControls::default(), &probe).is_err());
    }
}
