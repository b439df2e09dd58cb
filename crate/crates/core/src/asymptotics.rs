//! Behaviour of the two solution families as `q → ∞`.
//!
//! Below the level 1 the source term `u^{q-1}` vanishes in the limit, so the
//! low-energy family approaches the solution `G` of `-Δ_p G + G^{p-1} = 0`
//! with `G = 1` on the boundary, while the high-energy family collapses onto
//! the constant 1.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{
    default_residual_battery, w1p_distance, w1p_norm_p, weak_residual_battery, Boundary,
    Certificate, Check,
};
use crate::ivp::{integrate_limit, IntegratorControls, IvpStatus, Source};
use crate::problem::{ProblemParams, RadialProfile};
use crate::shooting::{find_solutions, ScanSpec};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LimitProfile {
    pub profile: RadialProfile,
    /// `G(1)`, equal to 1 by construction.
    pub dirichlet_value: f64,
    /// `‖G‖^p_{W^{1,p}(B)}`.
    pub norm_p: f64,
}

/// Integrates the source-free system from `u(0) = 1` and rescales so that
/// the boundary value is 1. The limit operator is positively homogeneous,
/// so the rescaled trajectory is again a solution.
pub fn compute_g(params: &ProblemParams, controls: &IntegratorControls) -> Result<LimitProfile> {
    // The unscaled trajectory grows like e^r at most; keep it clear of the cap.
    let controls = IntegratorControls {
        u_cap: Some(f64::MAX),
        ..*controls
    };
    let run = integrate_limit(1.0, params, &controls)?;
    if run.status != IvpStatus::ReachedOne {
        return Err(Error::Degenerate(format!(
            "limit trajectory stopped early: {:?}",
            run.status
        )));
    }
    let scale = 1.0 / run.profile.at_boundary();
    let mut profile = run.profile.scaled(scale);
    // Pin the boundary value exactly.
    let mut values = profile.values().to_vec();
    *values.last_mut().unwrap() = 1.0;
    profile = RadialProfile::new(profile.nodes().to_vec(), values, profile.derivs().to_vec())?;
    let norm_p = w1p_norm_p(&profile, params)?;
    Ok(LimitProfile {
        dirichlet_value: profile.at_boundary(),
        profile,
        norm_p,
    })
}

/// Monotonicity, boundary value, minimality of the norm and the weak
/// residual of the Dirichlet limit problem.
pub fn limit_certificate(
    g: &LimitProfile,
    params: &ProblemParams,
    residual_tol: f64,
) -> Result<Certificate> {
    let prof = &g.profile;
    // Near the origin G grows like r^{p/(p-1)}, below the resolution of the
    // values when p is small, so strictness is read off the slope.
    let min_step = prof
        .values()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    let min_slope = prof.derivs()[1..]
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let residuals = weak_residual_battery(
        prof,
        params,
        &default_residual_battery(prof.intervals(), Boundary::Dirichlet, None),
        Source::Free,
    )?;
    let worst = residuals.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max);
    let measure = params.ball_measure();
    let checks = vec![
        Check {
            name: "dirichlet".into(),
            value: (g.dirichlet_value - 1.0).abs(),
            threshold: 0.0,
            passed: g.dirichlet_value == 1.0,
            detail: "|G(1) - 1|".into(),
        },
        Check {
            name: "origin".into(),
            value: prof.at_origin(),
            threshold: 1.0,
            passed: prof.at_origin() > 0.0 && prof.at_origin() < 1.0,
            detail: "0 < G(0) < 1".into(),
        },
        Check {
            name: "monotone".into(),
            value: min_slope,
            threshold: 0.0,
            passed: min_slope > 0.0 && min_step >= 0.0,
            detail: "min G'(r) over r > 0, with non-decreasing values".into(),
        },
        Check {
            name: "norm".into(),
            value: g.norm_p,
            threshold: measure,
            passed: g.norm_p < measure,
            detail: "||G||^p < |B|".into(),
        },
        Check {
            name: "weak_residual".into(),
            value: worst,
            threshold: residual_tol,
            passed: worst <= residual_tol,
            detail: "source-free residual over test functions vanishing at r = 1".into(),
        },
    ];
    Ok(Certificate { checks })
}

/// One row of a `q` sweep; `None` marks a missing root.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub q: f64,
    pub d_u: Option<f64>,
    pub d_v: Option<f64>,
    pub i_u: Option<f64>,
    pub i_v: Option<f64>,
    pub i_const: f64,
    /// `‖v_q - 1‖_∞`.
    pub sup_dist_v: Option<f64>,
    /// `‖u_q - G‖_∞`.
    pub sup_dist_u: Option<f64>,
    /// `‖v_q - 1‖_{W^{1,p}}`.
    pub w1p_dist_v: Option<f64>,
    /// `p I_q(v_q) / |B|`.
    pub energy_ratio: Option<f64>,
    /// `∫_B v_q^q / q`.
    pub q_term_v: Option<f64>,
}

impl SweepRecord {
    pub const COLUMNS: [&'static str; 11] = [
        "q",
        "d_u",
        "d_v",
        "i_u",
        "i_v",
        "i_const",
        "sup_dist_v",
        "sup_dist_u",
        "w1p_dist_v",
        "energy_ratio",
        "q_term_v",
    ];

    pub fn fields(&self) -> [Option<f64>; 11] {
        [
            Some(self.q),
            self.d_u,
            self.d_v,
            self.i_u,
            self.i_v,
            Some(self.i_const),
            self.sup_dist_v,
            self.sup_dist_u,
            self.w1p_dist_v,
            self.energy_ratio,
            self.q_term_v,
        ]
    }

    pub fn has_both(&self) -> bool {
        self.d_u.is_some() && self.d_v.is_some()
    }

    /// `d_u < d_v` and `I_u < I_const < I_v`; vacuous without both roots.
    pub fn is_consistent(&self) -> bool {
        match (self.d_u, self.d_v, self.i_u, self.i_v) {
            (Some(du), Some(dv), Some(iu), Some(iv)) => {
                du < dv && iu < self.i_const && self.i_const < iv
            }
            _ => true,
        }
    }
}

/// A sweep row together with the selected profiles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub record: SweepRecord,
    pub u: Option<RadialProfile>,
    pub v: Option<RadialProfile>,
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sweep {
    pub limit: LimitProfile,
    pub entries: Vec<SweepEntry>,
}

impl Sweep {
    pub fn records(&self) -> Vec<SweepRecord> {
        self.entries.iter().map(|e| e.record.clone()).collect()
    }

    pub fn failures(&self) -> Vec<(f64, String)> {
        self.entries
            .iter()
            .filter_map(|e| e.failure.clone().map(|f| (e.record.q, f)))
            .collect()
    }
}

fn sweep_entry(
    params: &ProblemParams,
    controls: &IntegratorControls,
    scan: &ScanSpec,
    g: &LimitProfile,
) -> SweepEntry {
    let mut record = SweepRecord {
        q: params.q(),
        d_u: None,
        d_v: None,
        i_u: None,
        i_v: None,
        i_const: crate::problem::constant_energy(params),
        sup_dist_v: None,
        sup_dist_u: None,
        w1p_dist_v: None,
        energy_ratio: None,
        q_term_v: None,
    };
    let set = match find_solutions(params, controls, scan) {
        Ok(set) => set,
        Err(e) => {
            return SweepEntry {
                record,
                u: None,
                v: None,
                failure: Some(e.to_string()),
            }
        }
    };
    let mut missing = Vec::new();
    let u = set.select_u().map(|root| {
        record.d_u = Some(root.d);
        record.i_u = root.energy.map(|e| e.energy);
        record.sup_dist_u = root.profile().sup_distance(&g.profile).ok();
        root.profile().clone()
    });
    if u.is_none() {
        missing.push("low-energy");
    }
    let v = set.select_v().map(|root| {
        let prof = root.profile();
        record.d_v = Some(root.d);
        record.i_v = root.energy.map(|e| e.energy);
        record.sup_dist_v = Some(prof.sup_distance_to_constant(1.0));
        let one = RadialProfile::constant(1.0, prof.intervals());
        record.w1p_dist_v = w1p_distance(prof, &one, params).ok();
        record.energy_ratio = root
            .energy
            .map(|e| params.p() * e.energy / params.ball_measure());
        record.q_term_v = root.energy.map(|e| e.q_term);
        prof.clone()
    });
    if v.is_none() {
        missing.push("high-energy");
    }
    let failure =
        (!missing.is_empty()).then(|| format!("no accepted {} solution", missing.join(" or ")));
    SweepEntry {
        record,
        u,
        v,
        failure,
    }
}

/// Solves each `q` of `q_list` and collects the limit quantities. Rows keep
/// the order of `q_list` whether or not the runs are parallel.
pub fn sweep(
    template: &ProblemParams,
    q_list: &[f64],
    controls: &IntegratorControls,
    scan: &ScanSpec,
) -> Result<Sweep> {
    if q_list.is_empty() {
        return Err(Error::InvalidParams("empty q list".into()));
    }
    if q_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidParams(
            "q list must be strictly increasing".into(),
        ));
    }
    let params: Vec<ProblemParams> = q_list
        .iter()
        .map(|q| template.with_q(*q))
        .collect::<Result<_>>()?;
    let limit = compute_g(template, controls)?;
    let run = |pp: &ProblemParams| sweep_entry(pp, controls, scan, &limit);
    let entries = if scan.parallel {
        params.par_iter().map(run).collect()
    } else {
        params.iter().map(run).collect()
    };
    Ok(Sweep { limit, entries })
}

/// Monotonicity verdict for one sweep column.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub values: Vec<Option<f64>>,
    /// Every entry present.
    pub complete: bool,
    /// Present and strictly decreasing along the whole list.
    pub strictly_decreasing: bool,
    /// Last value over first value.
    pub final_ratio: Option<f64>,
}

impl Trend {
    pub fn new(values: Vec<Option<f64>>) -> Self {
        let complete = !values.is_empty() && values.iter().all(Option::is_some);
        let strictly_decreasing =
            complete && values.windows(2).all(|w| w[1].unwrap() < w[0].unwrap());
        let final_ratio = match (values.first(), values.last()) {
            (Some(Some(a)), Some(Some(b))) if *a != 0.0 => Some(b / a),
            _ => None,
        };
        Self {
            values,
            complete,
            strictly_decreasing,
            final_ratio,
        }
    }

    /// Strictly decreasing with `last < factor · first`.
    pub fn shrinks_by(&self, factor: f64) -> bool {
        self.strictly_decreasing && self.final_ratio.is_some_and(|r| r < factor)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSummary {
    pub records: usize,
    pub complete_records: usize,
    pub consistent: bool,
    pub sup_dist_v: Trend,
    pub w1p_dist_v: Trend,
    /// `|p I_q(v_q)/|B| - 1|`.
    pub energy_gap_v: Trend,
    pub q_term_v: Trend,
    pub sup_dist_u: Trend,
    /// Last value below the first for `sup_dist_v`, `energy_gap_v`, `q_term_v`.
    pub limit_targets: bool,
}

impl SweepSummary {
    pub fn new(records: &[SweepRecord]) -> Self {
        let col =
            |f: &dyn Fn(&SweepRecord) -> Option<f64>| Trend::new(records.iter().map(f).collect());
        let sup_dist_v = col(&|r| r.sup_dist_v);
        let energy_gap_v = col(&|r| r.energy_ratio.map(|e| (e - 1.0).abs()));
        let q_term_v = col(&|r| r.q_term_v);
        let limit_targets = [&sup_dist_v, &energy_gap_v, &q_term_v]
            .iter()
            .all(|t| t.final_ratio.is_some_and(|r| r < 1.0));
        Self {
            records: records.len(),
            complete_records: records.iter().filter(|r| r.has_both()).count(),
            consistent: records.iter().all(SweepRecord::is_consistent),
            w1p_dist_v: col(&|r| r.w1p_dist_v),
            sup_dist_u: col(&|r| r.sup_dist_u),
            sup_dist_v,
            energy_gap_v,
            q_term_v,
            limit_targets,
        }
    }

    /// Verdicts of the `v_q → 1` and `u_q → G` trends, by name.
    pub fn verdicts(&self) -> Vec<(&'static str, bool)> {
        vec![
            ("consistent", self.consistent),
            ("sup_dist_v_decreasing", self.sup_dist_v.strictly_decreasing),
            ("w1p_dist_v_decreasing", self.w1p_dist_v.strictly_decreasing),
            (
                "energy_gap_v_decreasing",
                self.energy_gap_v.strictly_decreasing,
            ),
            ("q_term_v_decreasing", self.q_term_v.strictly_decreasing),
            ("sup_dist_u_decreasing", self.sup_dist_u.strictly_decreasing),
            ("limit_targets", self.limit_targets),
        ]
    }
}

/// `sup |a' - b'|` over nodes in `(0, r_max]`, `None` when the window is empty.
pub fn derivative_distance(
    a: &RadialProfile,
    b: &RadialProfile,
    r_max: f64,
) -> Result<Option<f64>> {
    a.check_same_grid(b)?;
    let d = a
        .nodes()
        .iter()
        .zip(a.derivs().iter().zip(b.derivs()))
        .filter(|(r, _)| **r > 0.0 && **r <= r_max)
        .map(|(_, (x, y))| (x - y).abs())
        .fold(None, |acc: Option<f64>, v| {
            Some(acc.map_or(v, |m| m.max(v)))
        });
    Ok(d)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DerivativeTable {
    pub r_max: f64,
    pub rows: Vec<(f64, f64)>,
    pub decreasing: bool,
}

/// `sup_{(0, r_max]} |u_q' - G'|` per sweep entry with a low-energy root.
pub fn derivative_convergence_check(sweep: &Sweep, r_max: f64) -> Result<DerivativeTable> {
    let mut rows = Vec::new();
    for e in &sweep.entries {
        if let Some(u) = &e.u {
            if let Some(d) = derivative_distance(u, &sweep.limit.profile, r_max)? {
                rows.push((e.record.q, d));
            }
        }
    }
    let decreasing = rows.len() >= 2 && rows.windows(2).all(|w| w[1].1 < w[0].1);
    Ok(DerivativeTable {
        r_max,
        rows,
        decreasing,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual of the log-log fit.
    pub residual: f64,
    pub used: usize,
}

/// Least-squares slope of `log(value)` against `log(q)`; non-positive values
/// are dropped.
pub fn rate_fit(series: &[(f64, f64)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = series
        .iter()
        .filter(|(q, v)| *q > 0.0 && *v > 0.0 && v.is_finite())
        .map(|(q, v)| (q.ln(), v.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::Degenerate(format!(
            "rate fit needs 3 positive values, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    if sxx == 0.0 {
        return Err(Error::Degenerate("rate fit needs distinct q values".into()));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|p| (p.1 - intercept - slope * p.0).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    Ok(RateFit {
        slope,
        intercept,
        residual,
        used: pts.len(),
    })
}
