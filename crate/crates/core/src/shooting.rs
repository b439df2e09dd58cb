//! Shooting on the initial height `d = u(0)`.
//!
//! Neumann solutions are the zeros of the miss function `d ↦ w(1; d)`. The
//! scan brackets its sign changes on `(0, 1)`, bisection refines them, and
//! each refined root is re-integrated, checked for cone membership and
//! labelled by its energy relative to the constant solution.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functionals::{energy, EnergyReport};
use crate::ivp::{integrate, IntegratorControls, IvpResult, IvpStatus};
use crate::problem::{constant_energy, ProblemParams, RadialProfile, TruncationParams};

/// One IVP run and its terminal flux.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShootingOutcome {
    pub d: f64,
    /// `w(1; d)`; `+∞` after blow-up, NaN when the step budget ran out.
    pub miss: f64,
    pub result: IvpResult,
}

impl ShootingOutcome {
    pub fn run(d: f64, params: &ProblemParams, controls: &IntegratorControls) -> Result<Self> {
        let result = integrate(d, params, controls)?;
        let miss = match result.status {
            IvpStatus::ReachedOne => result.terminal.w,
            IvpStatus::BlewUp { .. } => f64::INFINITY,
            IvpStatus::StepBudgetExhausted => f64::NAN,
        };
        Ok(Self { d, miss, result })
    }
}

/// `w(1; d)` with the sentinels of [`ShootingOutcome`].
pub fn miss(d: f64, params: &ProblemParams, controls: &IntegratorControls) -> Result<f64> {
    // The scan only needs the terminal state, so skip the dense sampling.
    let lean = IntegratorControls {
        grid_intervals: 2,
        ..*controls
    };
    ShootingOutcome::run(d, params, &lean).map(|o| o.miss)
}

/// Scan grid and root-refinement settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScanSpec {
    /// Number of log-spaced scan points in `[d_min, d_max]`.
    pub points: usize,
    pub d_min: f64,
    pub d_max: f64,
    /// First ladder point is `1 - ladder_spread`; the ladder then halves the
    /// gap to 1 every `ladder_per_octave` points down to `1 - d_max`.
    pub ladder_spread: f64,
    pub ladder_per_octave: usize,
    /// Scan points with `|d - 1|` below this are ignored.
    pub exclusion: f64,
    /// Bisection stops once the bracket is shorter than this.
    pub d_tol: f64,
    /// Relative tolerance for bisection and the final re-integration.
    pub refine_rel_tol: f64,
    /// Classification margin in units of the quadrature error estimate.
    pub margin_factor: f64,
    pub tol_neumann: f64,
    pub tol_cone: f64,
    pub parallel: bool,
}

impl Default for ScanSpec {
    fn default() -> Self {
        Self {
            points: 512,
            d_min: 1e-4,
            d_max: 1.0 - 1e-8,
            ladder_spread: 0.5,
            ladder_per_octave: 8,
            exclusion: 1e-4,
            d_tol: 1e-13,
            refine_rel_tol: 1e-13,
            margin_factor: 10.0,
            tol_neumann: 1e-8,
            tol_cone: 1e-10,
            parallel: true,
        }
    }
}

impl ScanSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParams(m));
        if self.points < 64 {
            return bad(format!(
                "scan needs at least 64 points, got {}",
                self.points
            ));
        }
        if !(0.0 < self.d_min && self.d_min < self.d_max && self.d_max < 1.0) {
            return bad(format!(
                "need 0 < d_min < d_max < 1, got [{}, {}]",
                self.d_min, self.d_max
            ));
        }
        if !(self.ladder_spread > 0.0 && self.ladder_spread < 1.0) {
            return bad(format!(
                "ladder_spread = {} must lie in (0, 1)",
                self.ladder_spread
            ));
        }
        if !(self.exclusion >= 0.0 && self.d_tol > 0.0 && self.refine_rel_tol > 0.0) {
            return bad("exclusion, d_tol and refine_rel_tol must be non-negative/positive".into());
        }
        if !(self.margin_factor >= 0.0 && self.tol_neumann > 0.0 && self.tol_cone >= 0.0) {
            return bad("classification and validation tolerances must be non-negative".into());
        }
        Ok(())
    }

    /// Sorted scan heights, without points inside the exclusion radius.
    pub fn grid(&self) -> Vec<f64> {
        let n = self.points;
        let (a, b) = (self.d_min.ln(), self.d_max.ln());
        let mut pts: Vec<f64> = (0..n)
            .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
            .collect();
        let floor = 1.0 - self.d_max;
        let per = self.ladder_per_octave.max(1) as f64;
        let mut k = 0.0;
        loop {
            let gap = self.ladder_spread * (-k / per).exp2();
            if gap < floor {
                break;
            }
            pts.push(1.0 - gap);
            k += 1.0;
        }
        pts.retain(|d| (1.0 - d).abs() >= self.exclusion);
        pts.sort_by(f64::total_cmp);
        pts.dedup_by(|x, y| (*x - *y).abs() <= 1e-15);
        pts
    }
}

/// Energy position relative to the constant solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnergyLabel {
    LowEnergy,
    HighEnergy,
    Ambiguous,
}

/// Labels an energy against `I_q(1)` with margin
/// `max(margin_factor · quad_error, 1e-12 · |I_q(1)|)`.
pub fn classify_energy(
    report: &EnergyReport,
    params: &ProblemParams,
    margin_factor: f64,
) -> EnergyLabel {
    let reference = constant_energy(params);
    let margin = (margin_factor * report.quad_error).max(1e-12 * reference.abs());
    if report.energy > reference + margin {
        EnergyLabel::HighEnergy
    } else if report.energy < reference - margin {
        EnergyLabel::LowEnergy
    } else {
        EnergyLabel::Ambiguous
    }
}

pub fn classify(
    profile: &RadialProfile,
    params: &ProblemParams,
    trunc: &TruncationParams,
    margin_factor: f64,
) -> Result<EnergyLabel> {
    Ok(classify_energy(
        &energy(profile, params, trunc)?,
        params,
        margin_factor,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum RootStatus {
    Accepted,
    Rejected(String),
}

/// A refined zero of the miss function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub d: f64,
    /// Final bracket width.
    pub bracket: f64,
    pub outcome: ShootingOutcome,
    pub energy: Option<EnergyReport>,
    pub label: EnergyLabel,
    pub status: RootStatus,
}

impl Root {
    pub fn is_accepted(&self) -> bool {
        self.status == RootStatus::Accepted
    }

    pub fn profile(&self) -> &RadialProfile {
        &self.outcome.result.profile
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionSet {
    pub params: ProblemParams,
    /// The trivial root `d = 1`.
    pub constant: f64,
    pub constant_energy: f64,
    /// Refined roots sorted by `d`, rejected ones included.
    pub roots: Vec<Root>,
    pub scan_points: usize,
    pub brackets: usize,
    /// Scan heights where the step budget ran out, and brackets lost during refinement.
    pub failures: Vec<String>,
}

impl SolutionSet {
    pub fn accepted(&self) -> impl Iterator<Item = &Root> {
        self.roots.iter().filter(|r| r.is_accepted())
    }

    pub fn accepted_count(&self) -> usize {
        self.accepted().count()
    }

    /// Lowest-energy accepted `LowEnergy` root.
    pub fn select_u(&self) -> Option<&Root> {
        self.accepted()
            .filter(|r| r.label == EnergyLabel::LowEnergy)
            .min_by(|a, b| energy_of(a).total_cmp(&energy_of(b)))
    }

    /// Accepted `HighEnergy` root closest to `d = 1`.
    pub fn select_v(&self) -> Option<&Root> {
        self.accepted()
            .filter(|r| r.label == EnergyLabel::HighEnergy)
            .min_by(|a, b| (1.0 - a.d).abs().total_cmp(&(1.0 - b.d).abs()))
    }

    /// Accepted `HighEnergy` roots other than [`Self::select_v`].
    pub fn extra_high(&self) -> Vec<&Root> {
        let v = self.select_v().map(|r| r.d);
        self.accepted()
            .filter(|r| r.label == EnergyLabel::HighEnergy && Some(r.d) != v)
            .collect()
    }
}

fn energy_of(r: &Root) -> f64 {
    r.energy.map_or(f64::INFINITY, |e| e.energy)
}

fn sign_change(a: f64, b: f64) -> bool {
    (a < 0.0 && b > 0.0) || (a > 0.0 && b < 0.0)
}

fn map_maybe_par<T, U, F>(items: &[T], parallel: bool, f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    if parallel {
        items.par_iter().map(f).collect()
    } else {
        items.iter().map(f).collect()
    }
}

/// Bisects `[a, b]` (opposite signs of `ma`, `mb`) down to `d_tol`.
fn bisect(
    mut a: f64,
    mut b: f64,
    mut ma: f64,
    params: &ProblemParams,
    controls: &IntegratorControls,
    d_tol: f64,
) -> Result<std::result::Result<(f64, f64), String>> {
    while b - a > d_tol {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let mm = miss(mid, params, controls)?;
        if mm.is_nan() {
            return Ok(Err(format!(
                "step budget exhausted at d = {mid:e} during bisection"
            )));
        }
        if mm == 0.0 {
            return Ok(Ok((mid, 0.0)));
        }
        if sign_change(ma, mm) {
            b = mid;
        } else {
            a = mid;
            ma = mm;
        }
    }
    Ok(Ok((0.5 * (a + b), b - a)))
}

fn validate_root(
    d: f64,
    bracket: f64,
    params: &ProblemParams,
    trunc: &TruncationParams,
    controls: &IntegratorControls,
    scan: &ScanSpec,
) -> Result<Root> {
    let outcome = ShootingOutcome::run(d, params, controls)?;
    let profile = &outcome.result.profile;
    let mut problems = Vec::new();
    if outcome.result.status != IvpStatus::ReachedOne {
        problems.push(format!(
            "trajectory did not reach r = 1: {:?}",
            outcome.result.status
        ));
    } else {
        if let Some(v) = profile.cone_violation(scan.tol_cone) {
            problems.push(format!("outside the cone: {v}"));
        }
        let slope = profile.slope_at_boundary().abs();
        if slope > scan.tol_neumann {
            problems.push(format!(
                "|u'(1)| = {slope:e} exceeds {:e}",
                scan.tol_neumann
            ));
        }
        if !(profile.at_origin() < 1.0 && profile.at_boundary() > 1.0) {
            problems.push(format!(
                "u(0) = {} and u(1) = {} do not straddle 1",
                profile.at_origin(),
                profile.at_boundary()
            ));
        }
    }
    let report = if outcome.result.status == IvpStatus::ReachedOne {
        Some(energy(profile, params, trunc)?)
    } else {
        None
    };
    let label = report.map_or(EnergyLabel::Ambiguous, |r| {
        classify_energy(&r, params, scan.margin_factor)
    });
    let status = if problems.is_empty() {
        RootStatus::Accepted
    } else {
        RootStatus::Rejected(problems.join("; "))
    };
    Ok(Root {
        d,
        bracket,
        outcome,
        energy: report,
        label,
        status,
    })
}

/// Scans, refines, validates and labels all non-constant roots on `(0, 1)`.
pub fn find_solutions(
    params: &ProblemParams,
    controls: &IntegratorControls,
    scan: &ScanSpec,
) -> Result<SolutionSet> {
    controls.validate()?;
    scan.validate()?;
    let trunc = TruncationParams::default_for(params);
    let tight = IntegratorControls {
        rel_tol: controls.rel_tol.min(scan.refine_rel_tol),
        ..*controls
    };

    let grid = scan.grid();
    let values: Vec<f64> = map_maybe_par(&grid, scan.parallel, |d| miss(*d, params, controls))
        .into_iter()
        .collect::<Result<_>>()?;

    let mut failures = Vec::new();
    let finite: Vec<(f64, f64)> = grid
        .iter()
        .zip(&values)
        .filter_map(|(d, m)| {
            if m.is_nan() {
                failures.push(format!("step budget exhausted at scan point d = {d:e}"));
                None
            } else {
                Some((*d, *m))
            }
        })
        .collect();

    let mut exact = Vec::new();
    let mut brackets = Vec::new();
    for (i, pair) in finite.windows(2).enumerate() {
        let ((a, ma), (b, mb)) = (pair[0], pair[1]);
        if ma == 0.0 && i == 0 {
            exact.push(a);
        }
        if mb == 0.0 {
            exact.push(b);
        } else if sign_change(ma, mb) {
            brackets.push((a, b));
        }
    }
    let bracket_count = brackets.len();

    // Re-check each bracket at the tight tolerance before bisecting.
    let refined = map_maybe_par(
        &brackets,
        scan.parallel,
        |&(a, b)| -> Result<std::result::Result<(f64, f64), String>> {
            let ma = miss(a, params, &tight)?;
            let mb = miss(b, params, &tight)?;
            if !sign_change(ma, mb) {
                return Ok(Err(format!(
                    "bracket [{a:e}, {b:e}] lost its sign change at the tight tolerance"
                )));
            }
            bisect(a, b, ma, params, &tight, scan.d_tol)
        },
    );

    let mut located: Vec<(f64, f64)> = exact.into_iter().map(|d| (d, 0.0)).collect();
    for r in refined {
        match r? {
            Ok(root) => located.push(root),
            Err(msg) => failures.push(msg),
        }
    }
    located.sort_by(|x, y| x.0.total_cmp(&y.0));
    located.dedup_by(|x, y| (x.0 - y.0).abs() < 10.0 * scan.d_tol);

    let roots = map_maybe_par(&located, scan.parallel, |&(d, width)| {
        validate_root(d, width, params, &trunc, &tight, scan)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;

    Ok(SolutionSet {
        params: *params,
        constant: 1.0,
        constant_energy: constant_energy(params),
        roots,
        scan_points: grid.len(),
        brackets: bracket_count,
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, p: f64, q: f64) -> ProblemParams {
        ProblemParams::new(n, p, q).unwrap()
    }

    #[test]
    fn miss_examples() {
        let c = IntegratorControls::default();
        let pp = params(1, 1.5, 40.0);
        assert_eq!(miss(1.0, &pp, &c).unwrap(), 0.0);
        assert!(miss(1e-3, &pp, &c).unwrap() > 0.0);
        assert!(miss(1.0 - 1e-12, &pp, &c).unwrap().abs() <= 1e-10);
        assert!(miss(0.0, &pp, &c).is_err());
    }

    #[test]
    fn miss_sentinels() {
        // The low-energy solution at q = 40 starts near 0.852 and ends above 1.
        let pp = params(1, 1.5, 40.0);
        let c = IntegratorControls {
            u_cap: Some(1.0001),
            ..Default::default()
        };
        assert_eq!(miss(0.852, &pp, &c).unwrap(), f64::INFINITY);
        let c = IntegratorControls {
            max_steps: 2,
            ..Default::default()
        };
        assert!(miss(0.5, &pp, &c).unwrap().is_nan());
    }

    #[test]
    fn scan_grid_shape() {
        let spec = ScanSpec::default();
        let g = spec.grid();
        assert!(g.len() >= 512);
        assert!(g.windows(2).all(|w| w[0] < w[1]));
        assert!(g
            .iter()
            .all(|d| (1.0 - d).abs() >= spec.exclusion && *d > 0.0 && *d < 1.0));
        // Ladder reaches the exclusion radius.
        assert!(g.last().unwrap() > &(1.0 - 2.0 * spec.exclusion));
        assert!(ScanSpec {
            points: 10,
            ..Default::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn classify_constant_is_ambiguous() {
        let pp = params(1, 1.5, 40.0);
        let trunc = TruncationParams::default_for(&pp);
        let label = classify(&RadialProfile::constant(1.0, 256), &pp, &trunc, 10.0).unwrap();
        assert_eq!(label, EnergyLabel::Ambiguous);
        let low = classify(&RadialProfile::constant(0.5, 256), &pp, &trunc, 10.0).unwrap();
        assert_eq!(low, EnergyLabel::LowEnergy);
    }

    #[test]
    fn no_roots_barely_supercritical() {
        let pp = params(1, 1.5, 2.0);
        let scan = ScanSpec {
            points: 64,
            ladder_per_octave: 1,
            ..Default::default()
        };
        let controls = IntegratorControls {
            grid_intervals: 256,
            ..Default::default()
        };
        let set = find_solutions(&pp, &controls, &scan).unwrap();
        assert!(
            set.roots.is_empty(),
            "{:?}",
            set.roots.iter().map(|r| r.d).collect::<Vec<_>>()
        );
        assert_eq!(set.constant, 1.0);
    }
}
