//! Radial quadrature of the energy functionals and the certificate battery
//! run on every computed solution.
//!
//! All integrals over the ball reduce to `ω ∫_0^1 f(r) r^{N-1} dr` for radial
//! integrands, evaluated by composite Simpson on the uniform report grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ivp::Source;
use crate::problem::{
    constant_energy, signed_power, truncated_f, truncated_primitive, ProblemParams, RadialProfile,
    TruncationParams,
};

fn simpson(f: &[f64], h: f64) -> f64 {
    let m = f.len() - 1;
    match m {
        0 => 0.0,
        1 => 0.5 * h * (f[0] + f[1]),
        _ if m.is_multiple_of(2) => {
            let mut acc = f[0] + f[m];
            for (i, v) in f.iter().enumerate().take(m).skip(1) {
                acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            acc * h / 3.0
        }
        _ => {
            // Odd interval count: Simpson on the first m - 3, 3/8 rule on the tail.
            let head = simpson(&f[..m - 2], h);
            let t = &f[m - 3..];
            head + 3.0 * h / 8.0 * (t[0] + 3.0 * t[1] + 3.0 * t[2] + t[3])
        }
    }
}

fn weighted(integrand: &[f64], dim: usize) -> Vec<f64> {
    let m = (integrand.len() - 1) as f64;
    integrand
        .iter()
        .enumerate()
        .map(|(i, f)| {
            let r = i as f64 / m;
            if dim == 1 {
                *f
            } else {
                f * r.powi(dim as i32 - 1)
            }
        })
        .collect()
}

/// `ω ∫_0^1 f(r) r^{N-1} dr` for an integrand sampled on the uniform grid
/// `r_i = i / M`, `i = 0..=M`.
pub fn radial_integral(integrand: &[f64], params: &ProblemParams) -> f64 {
    assert!(
        integrand.len() >= 2,
        "radial_integral needs at least two samples"
    );
    let h = 1.0 / (integrand.len() - 1) as f64;
    params.sphere_measure() * simpson(&weighted(integrand, params.dim()), h)
}

/// Richardson estimate `|S_h - S_{2h}| / 15` of the quadrature error, or the
/// Simpson–trapezoid gap when the grid cannot be halved.
pub fn radial_integral_error(integrand: &[f64], params: &ProblemParams) -> f64 {
    let m = integrand.len() - 1;
    let f = weighted(integrand, params.dim());
    let h = 1.0 / m as f64;
    let fine = simpson(&f, h);
    let estimate = if m.is_multiple_of(4) {
        let coarse: Vec<f64> = f.iter().step_by(2).copied().collect();
        (fine - simpson(&coarse, 2.0 * h)).abs() / 15.0
    } else {
        let trap = h * (f.iter().sum::<f64>() - 0.5 * (f[0] + f[m]));
        (fine - trap).abs()
    };
    params.sphere_measure() * estimate
}

fn require_grid(profile: &RadialProfile) -> Result<()> {
    if !profile.is_complete() || !profile.is_uniform_unit_grid() {
        return Err(Error::InvalidProfile(
            "quadrature needs a complete uniform grid on [0, 1]".into(),
        ));
    }
    Ok(())
}

fn powp(x: f64, p: f64) -> f64 {
    x.abs().powf(p)
}

/// `‖u‖^p_{W^{1,p}(B)} = ∫_B |∇u|^p + |u|^p`.
pub fn w1p_norm_p(profile: &RadialProfile, params: &ProblemParams) -> Result<f64> {
    require_grid(profile)?;
    let p = params.p();
    let f: Vec<f64> = profile
        .values()
        .iter()
        .zip(profile.derivs())
        .map(|(u, du)| powp(*du, p) + powp(*u, p))
        .collect();
    Ok(radial_integral(&f, params))
}

/// `‖a - b‖_{W^{1,p}(B)}` for two profiles on one grid.
pub fn w1p_distance(a: &RadialProfile, b: &RadialProfile, params: &ProblemParams) -> Result<f64> {
    a.check_same_grid(b)?;
    let diff = a.perturbed(b, -1.0)?;
    Ok(w1p_norm_p(&diff, params)?.powf(1.0 / params.p()))
}

/// Quadrature of the energy and its companion quantities for one profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    /// `I_q(u)`.
    pub energy: f64,
    /// `‖u‖^p_{W^{1,p}}`.
    pub w1p_p: f64,
    pub sup: f64,
    /// Discrete `C^{0,ν}` seminorm at `holder_exponent`.
    pub holder: f64,
    pub holder_exponent: f64,
    /// `‖u‖^p_{W^{1,p}} - ∫_B f_q(u) u`.
    pub nehari_residual: f64,
    /// `∫_B F_q(u)`.
    pub q_term: f64,
    /// Estimated quadrature error of `energy`.
    pub quad_error: f64,
    /// Whether the truncated primitive was used (`sup > s0`).
    pub truncated: bool,
}

pub const DEFAULT_HOLDER_EXPONENT: f64 = 0.5;

pub fn energy(
    profile: &RadialProfile,
    params: &ProblemParams,
    trunc: &TruncationParams,
) -> Result<EnergyReport> {
    require_grid(profile)?;
    let (p, q) = (params.p(), params.q());
    let sup = profile.sup();
    let truncated = sup > trunc.s0();
    let big_f = |u: f64| {
        if truncated {
            truncated_primitive(u.abs(), params, trunc)
        } else {
            u.abs().powf(q) / q
        }
    };
    let small_f = |u: f64| {
        if truncated {
            truncated_f(u.abs(), params, trunc) * u.abs()
        } else {
            u.abs().powf(q)
        }
    };

    let n = profile.len();
    let mut norm = Vec::with_capacity(n);
    let mut qt = Vec::with_capacity(n);
    let mut dens = Vec::with_capacity(n);
    let mut neh = Vec::with_capacity(n);
    for (u, du) in profile.values().iter().zip(profile.derivs()) {
        let a = powp(*du, p) + powp(*u, p);
        let fq = big_f(*u);
        norm.push(a);
        qt.push(fq);
        dens.push(a / p - fq);
        neh.push(a - small_f(*u));
    }
    Ok(EnergyReport {
        energy: radial_integral(&dens, params),
        w1p_p: radial_integral(&norm, params),
        sup,
        holder: holder_seminorm(profile, DEFAULT_HOLDER_EXPONENT),
        holder_exponent: DEFAULT_HOLDER_EXPONENT,
        nehari_residual: radial_integral(&neh, params),
        q_term: radial_integral(&qt, params),
        quad_error: radial_integral_error(&dens, params),
        truncated,
    })
}

/// Scale `t > 0` with `t · u` on the Nehari set, in the pure-power regime:
/// `t = (‖u‖^p / ∫ u^q)^{1/(q-p)}`.
pub fn nehari_project(
    profile: &RadialProfile,
    params: &ProblemParams,
    trunc: &TruncationParams,
) -> Result<f64> {
    require_grid(profile)?;
    let (p, q) = (params.p(), params.q());
    if profile.values().iter().any(|v| *v < 0.0) {
        return Err(Error::InvalidProfile(
            "Nehari projection needs u >= 0".into(),
        ));
    }
    let norm = w1p_norm_p(profile, params)?;
    let uq: Vec<f64> = profile.values().iter().map(|u| u.powf(q)).collect();
    let denom = radial_integral(&uq, params);
    if !(norm > 0.0 && denom > 0.0) {
        return Err(Error::Degenerate("cannot project the zero profile".into()));
    }
    let t = (norm / denom).powf(1.0 / (q - p));
    let scaled_sup = t * profile.sup();
    if scaled_sup > trunc.s0() {
        return Err(Error::TruncationRegime {
            scaled_sup,
            s0: trunc.s0(),
        });
    }
    Ok(t)
}

/// Node-wise `L_q(r) = ((p-1)/p)|u'|^p - u^p/p + u^q/q`.
pub fn lyapunov_series(profile: &RadialProfile, params: &ProblemParams) -> Vec<f64> {
    let (p, q) = (params.p(), params.q());
    profile
        .values()
        .iter()
        .zip(profile.derivs())
        .map(|(u, du)| (p - 1.0) / p * powp(*du, p) - powp(*u, p) / p + powp(*u, q) / q)
        .collect()
}

/// `max_i (L_q(r_{i+1}) - L_q(r_i))`, zero for a flat series.
pub fn lyapunov_max_increase(series: &[f64]) -> f64 {
    series.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
}

/// Smallest node-wise margin of `(u, u')` inside the phase-plane region
/// `0 <= u' <= [p/(p-1) (u^p/p - u^q/q)]^{1/p}`.
pub fn phase_plane_margin(profile: &RadialProfile, params: &ProblemParams) -> f64 {
    let (p, q) = (params.p(), params.q());
    profile
        .values()
        .iter()
        .zip(profile.derivs())
        .map(|(u, du)| {
            let inner = p / (p - 1.0) * (powp(*u, p) / p - powp(*u, q) / q);
            let upper = if inner > 0.0 {
                inner.powf(1.0 / p)
            } else {
                0.0
            };
            (upper - du).min(*du)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Discrete `C^{0,ν}` seminorm `max |u_i - u_j| / |r_i - r_j|^ν` over all node
/// pairs of the stride-`stride` subsample (endpoints always included).
pub fn holder_seminorm_strided(profile: &RadialProfile, nu: f64, stride: usize) -> f64 {
    assert!(nu > 0.0 && nu < 1.0, "Hölder exponent must lie in (0, 1)");
    let stride = stride.max(1);
    let last = profile.len() - 1;
    let mut idx: Vec<usize> = (0..=last).step_by(stride).collect();
    if *idx.last().unwrap() != last {
        idx.push(last);
    }
    let (r, u) = (profile.nodes(), profile.values());
    let mut best: f64 = 0.0;
    for (a, &i) in idx.iter().enumerate() {
        for &j in &idx[a + 1..] {
            best = best.max((u[j] - u[i]).abs() / (r[j] - r[i]).powf(nu));
        }
    }
    best
}

/// Hölder seminorm with all pairs up to 512 intervals, strided above.
pub fn holder_seminorm(profile: &RadialProfile, nu: f64) -> f64 {
    let m = profile.len() - 1;
    holder_seminorm_strided(profile, nu, m.div_ceil(512))
}

/// Node-wise margins of the a priori estimates for a cone solution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AprioriReport {
    /// `min_i ((q/p)^{1/(q-p)} - u_i)`.
    pub value_margin: f64,
    /// `min_i (((q-p)/(q(p-1)))^{1/p} - u'_i)`.
    pub slope_margin: f64,
    /// Bound on `‖u‖^p_{W^{1,p}}` minus its quadrature.
    pub w1p_margin: f64,
    /// `(|B|/p)(q/p)^{p/(q-p)} - I_q(u)`.
    pub energy_margin: f64,
    /// `‖u‖^p/p - I_q(u)`.
    pub norm_energy_margin: f64,
}

impl AprioriReport {
    pub fn worst(&self) -> f64 {
        [
            self.value_margin,
            self.slope_margin,
            self.w1p_margin,
            self.energy_margin,
            self.norm_energy_margin,
        ]
        .into_iter()
        .fold(f64::INFINITY, f64::min)
    }
}

pub fn apriori_check(
    profile: &RadialProfile,
    params: &ProblemParams,
    trunc: &TruncationParams,
) -> Result<AprioriReport> {
    let report = energy(profile, params, trunc)?;
    let vb = params.value_bound();
    let sb = params.slope_bound();
    Ok(AprioriReport {
        value_margin: profile
            .values()
            .iter()
            .map(|u| vb - u)
            .fold(f64::INFINITY, f64::min),
        slope_margin: profile
            .derivs()
            .iter()
            .map(|d| sb - d)
            .fold(f64::INFINITY, f64::min),
        w1p_margin: params.w1p_bound() - report.w1p_p,
        energy_margin: params.energy_bound() - report.energy,
        norm_energy_margin: report.w1p_p / params.p() - report.energy,
    })
}

/// Kind of a sampled test function.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TestKind {
    Constant(f64),
    LimitProfileG,
    /// `a + b r`.
    Ramp {
        a: f64,
        b: f64,
    },
    /// `base + eps · direction`.
    Perturbed {
        eps: f64,
    },
    /// Any other sampled function.
    Sampled,
}

/// A `W^{1,p}` test function sampled on the report grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestFunction {
    pub label: String,
    pub kind: TestKind,
    pub samples: RadialProfile,
}

impl TestFunction {
    pub fn constant(c: f64, m: usize) -> Self {
        Self {
            label: format!("const {c}"),
            kind: TestKind::Constant(c),
            samples: RadialProfile::constant(c, m),
        }
    }

    pub fn ramp(a: f64, b: f64, m: usize) -> Self {
        Self {
            label: format!("ramp {a} + {b} r"),
            kind: TestKind::Ramp { a, b },
            samples: RadialProfile::from_fn(m, |r| a + b * r, |_| b),
        }
    }

    pub fn limit_profile(g: &RadialProfile) -> Self {
        Self {
            label: "G".into(),
            kind: TestKind::LimitProfileG,
            samples: g.clone(),
        }
    }

    pub fn perturbed(
        base: &RadialProfile,
        direction: &RadialProfile,
        eps: f64,
        label: &str,
    ) -> Result<Self> {
        Ok(Self {
            label: format!("{label} eps={eps}"),
            kind: TestKind::Perturbed { eps },
            samples: base.perturbed(direction, eps)?,
        })
    }

    pub fn sampled(label: &str, samples: RadialProfile) -> Self {
        Self {
            label: label.into(),
            kind: TestKind::Sampled,
            samples,
        }
    }
}

/// Test functions for the minimality inequality: constants, `G`, ramps and
/// small perturbations of `u` along `1 - r`.
pub fn default_inequality_battery(
    u: &RadialProfile,
    params: &ProblemParams,
    g: Option<&RadialProfile>,
) -> Result<Vec<TestFunction>> {
    let m = u.intervals();
    let mut battery: Vec<TestFunction> = [params.value_bound(), 0.5, 1.0, 2.0]
        .into_iter()
        .map(|c| TestFunction::constant(c, m))
        .collect();
    battery.push(TestFunction::constant(0.0, m));
    if let Some(g) = g {
        battery.push(TestFunction::limit_profile(g));
    }
    battery.push(TestFunction::ramp(0.0, 1.0, m));
    battery.push(TestFunction::ramp(1.0, -1.0, m));
    battery.push(TestFunction::ramp(0.5, 1.0, m));
    let tail = RadialProfile::from_fn(m, |r| 1.0 - r, |_| -1.0);
    for eps in [0.01, 0.1] {
        battery.push(TestFunction::perturbed(u, &tail, eps, "u + (1-r)")?);
        battery.push(TestFunction::perturbed(u, &tail, -eps, "u - (1-r)")?);
    }
    battery.push(TestFunction::sampled("u", u.clone()));
    Ok(battery)
}

/// Which boundary condition the residual battery must respect.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    /// Test functions unrestricted at `r = 1`.
    Neumann,
    /// Test functions vanish at `r = 1`.
    Dirichlet,
}

pub fn default_residual_battery(
    m: usize,
    boundary: Boundary,
    g: Option<&RadialProfile>,
) -> Vec<TestFunction> {
    use std::f64::consts::PI;
    match boundary {
        Boundary::Neumann => {
            let mut b = vec![
                TestFunction::constant(1.0, m),
                TestFunction::ramp(0.0, 1.0, m),
                TestFunction::ramp(1.0, -1.0, m),
                TestFunction::sampled("r^2", RadialProfile::from_fn(m, |r| r * r, |r| 2.0 * r)),
                TestFunction::sampled(
                    "cos(pi r)",
                    RadialProfile::from_fn(m, |r| (PI * r).cos(), |r| -PI * (PI * r).sin()),
                ),
            ];
            if let Some(g) = g {
                b.push(TestFunction::limit_profile(g));
            }
            b
        }
        Boundary::Dirichlet => vec![
            TestFunction::ramp(1.0, -1.0, m),
            TestFunction::sampled(
                "1 - r^2",
                RadialProfile::from_fn(m, |r| 1.0 - r * r, |r| -2.0 * r),
            ),
            TestFunction::sampled(
                "(1 - r)^2",
                RadialProfile::from_fn(m, |r| (1.0 - r).powi(2), |r| -2.0 * (1.0 - r)),
            ),
            TestFunction::sampled(
                "cos(pi r / 2)",
                RadialProfile::from_fn(
                    m,
                    |r| (0.5 * PI * r).cos(),
                    |r| -0.5 * PI * (0.5 * PI * r).sin(),
                ),
            ),
        ],
    }
}

/// Slack of the minimality inequality for one test function:
/// `∫(|∇φ|^p + |φ|^p)/p - ∫ u^{q-1}(φ - u) - ∫(|∇u|^p + u^p)/p`.
pub fn weak_inequality_slack(
    u: &RadialProfile,
    params: &ProblemParams,
    phi: &TestFunction,
) -> Result<f64> {
    require_grid(u)?;
    u.check_same_grid(&phi.samples)?;
    let (p, q) = (params.p(), params.q());
    let integrand: Vec<f64> = (0..u.len())
        .map(|i| {
            let (uv, ud) = (u.values()[i], u.derivs()[i]);
            let (fv, fd) = (phi.samples.values()[i], phi.samples.derivs()[i]);
            (powp(fd, p) + powp(fv, p)) / p
                - signed_power(uv, q - 1.0) * (fv - uv)
                - (powp(ud, p) + powp(uv, p)) / p
        })
        .collect();
    Ok(radial_integral(&integrand, params))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeakInequalityReport {
    pub slacks: Vec<(String, f64)>,
    pub worst: f64,
}

pub fn weak_inequality_check(
    u: &RadialProfile,
    params: &ProblemParams,
    battery: &[TestFunction],
) -> Result<WeakInequalityReport> {
    if battery.is_empty() {
        return Err(Error::Degenerate("empty test-function battery".into()));
    }
    let slacks: Vec<(String, f64)> = battery
        .par_iter()
        .map(|phi| weak_inequality_slack(u, params, phi).map(|s| (phi.label.clone(), s)))
        .collect::<Result<_>>()?;
    let worst = slacks.iter().map(|(_, s)| *s).fold(f64::INFINITY, f64::min);
    Ok(WeakInequalityReport { slacks, worst })
}

/// `∫_B |∇u|^{p-2}∇u·∇φ + u^{p-1}φ - u^{q-1}φ`, the last term dropped for
/// [`Source::Free`].
pub fn weak_residual(
    u: &RadialProfile,
    params: &ProblemParams,
    phi: &TestFunction,
    source: Source,
) -> Result<f64> {
    require_grid(u)?;
    u.check_same_grid(&phi.samples)?;
    let (p, q) = (params.p(), params.q());
    let integrand: Vec<f64> = (0..u.len())
        .map(|i| {
            let (uv, ud) = (u.values()[i], u.derivs()[i]);
            let (fv, fd) = (phi.samples.values()[i], phi.samples.derivs()[i]);
            let mut s = signed_power(ud, p - 1.0) * fd + signed_power(uv, p - 1.0) * fv;
            if source == Source::Full {
                s -= signed_power(uv, q - 1.0) * fv;
            }
            s
        })
        .collect();
    Ok(radial_integral(&integrand, params))
}

/// Residuals over a battery, in battery order.
pub fn weak_residual_battery(
    u: &RadialProfile,
    params: &ProblemParams,
    battery: &[TestFunction],
    source: Source,
) -> Result<Vec<(String, f64)>> {
    battery
        .par_iter()
        .map(|phi| weak_residual(u, params, phi, source).map(|r| (phi.label.clone(), r)))
        .collect()
}

/// Settings for [`local_min_probe`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalMinProbeConfig {
    pub eps: Vec<f64>,
    /// Largest admissible `‖w - 1‖_{W^{1,p}}`.
    pub delta: f64,
}

impl Default for LocalMinProbeConfig {
    fn default() -> Self {
        Self {
            eps: vec![0.01, 0.05, 0.1],
            delta: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeRow {
    pub direction: String,
    pub eps: f64,
    pub scale: Option<f64>,
    pub w1p_distance: Option<f64>,
    /// `I_q(w) - I_q(1)`.
    pub energy_gap: Option<f64>,
    pub failure: Option<String>,
}

/// Energy of Nehari projections `w` of `1 + eps · direction` relative to the
/// constant solution.
pub fn local_min_probe(
    params: &ProblemParams,
    trunc: &TruncationParams,
    directions: &[TestFunction],
    config: &LocalMinProbeConfig,
) -> Vec<ProbeRow> {
    let mut rows = Vec::new();
    let reference = constant_energy(params);
    for dir in directions {
        let one = RadialProfile::constant(1.0, dir.samples.intervals());
        for &eps in &config.eps {
            let mut row = ProbeRow {
                direction: dir.label.clone(),
                eps,
                scale: None,
                w1p_distance: None,
                energy_gap: None,
                failure: None,
            };
            let outcome = one.perturbed(&dir.samples, eps).and_then(|base| {
                let t = nehari_project(&base, params, trunc)?;
                let w = base.scaled(t);
                let dist = w1p_distance(&w, &one, params)?;
                let e = energy(&w, params, trunc)?.energy;
                Ok((t, dist, e))
            });
            match outcome {
                Ok((t, dist, e)) => {
                    row.scale = Some(t);
                    row.w1p_distance = Some(dist);
                    row.energy_gap = Some(e - reference);
                    if dist > config.delta {
                        row.failure =
                            Some(format!("distance {dist} exceeds delta {}", config.delta));
                    }
                }
                Err(err) => row.failure = Some(err.to_string()),
            }
            rows.push(row);
        }
    }
    rows
}

/// Thresholds of the certificate battery.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertificateTolerances {
    pub neumann: f64,
    pub cone: f64,
    pub bounds: f64,
    pub lyapunov: f64,
    pub nehari_relative: f64,
    pub residual: f64,
    pub inequality: f64,
}

impl Default for CertificateTolerances {
    fn default() -> Self {
        Self {
            neumann: 1e-8,
            cone: 1e-10,
            bounds: 1e-8,
            lyapunov: 1e-8,
            nehari_relative: 1e-6,
            residual: 1e-6,
            inequality: 1e-7,
        }
    }
}

/// One named invariant check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: f64,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn at_most(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value <= threshold,
            detail: detail.into(),
        }
    }

    fn at_least(name: &str, value: f64, threshold: f64, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: value >= threshold,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Certificate {
    pub checks: Vec<Check>,
}

impl Certificate {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn get(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// Runs every solution check on `profile`.
///
/// `g`, when given, must live on the profile's grid and joins both
/// test-function batteries.
pub fn certify(
    profile: &RadialProfile,
    params: &ProblemParams,
    trunc: &TruncationParams,
    g: Option<&RadialProfile>,
    tol: &CertificateTolerances,
) -> Result<Certificate> {
    require_grid(profile)?;
    let report = energy(profile, params, trunc)?;
    let apriori = apriori_check(profile, params, trunc)?;
    let m = profile.intervals();
    let non_constant = profile.sup_distance_to_constant(1.0) > 1e-12;
    let mut checks = Vec::new();

    checks.push(Check::at_most(
        "neumann",
        profile.slope_at_boundary().abs(),
        tol.neumann,
        "|u'(1)|",
    ));
    let cone = profile.cone_violation(tol.cone);
    checks.push(Check {
        name: "cone".into(),
        value: if cone.is_some() { 1.0 } else { 0.0 },
        threshold: 0.0,
        passed: cone.is_none(),
        detail: cone.map_or_else(
            || "non-negative and non-decreasing".into(),
            |v| v.to_string(),
        ),
    });
    if non_constant {
        let gap = (1.0 - profile.at_origin()).min(profile.at_boundary() - 1.0);
        checks.push(Check {
            name: "sign_facts".into(),
            value: gap,
            threshold: 0.0,
            passed: gap > 0.0,
            detail: "min(1 - u(0), u(1) - 1), must be positive".into(),
        });
        let crossings = profile.crossings(1.0) as f64;
        checks.push(Check {
            name: "single_crossing".into(),
            value: crossings,
            threshold: 1.0,
            passed: crossings == 1.0,
            detail: "sign changes of u - 1".into(),
        });
    }
    checks.push(Check::at_least(
        "value_bound",
        apriori.value_margin,
        -tol.bounds,
        "min (q/p)^(1/(q-p)) - u",
    ));
    checks.push(Check::at_least(
        "slope_bound",
        apriori.slope_margin,
        -tol.bounds,
        "min ((q-p)/(q(p-1)))^(1/p) - u'",
    ));
    checks.push(Check::at_least(
        "w1p_bound",
        apriori.w1p_margin,
        -tol.bounds,
        "W1p bound - ||u||^p",
    ));
    checks.push(Check::at_least(
        "energy_bound",
        apriori.energy_margin.min(apriori.norm_energy_margin),
        -tol.bounds,
        "min((|B|/p)(q/p)^(p/(q-p)) - I, ||u||^p/p - I)",
    ));
    let lyap = lyapunov_series(profile, params);
    checks.push(Check::at_most(
        "lyapunov",
        lyapunov_max_increase(&lyap),
        tol.lyapunov,
        "max L(r_{i+1}) - L(r_i)",
    ));
    checks.push(Check::at_least(
        "phase_plane",
        phase_plane_margin(profile, params),
        -tol.bounds,
        "min distance inside the phase-plane region",
    ));
    checks.push(Check::at_most(
        "nehari",
        report.nehari_residual.abs() / report.w1p_p.max(f64::MIN_POSITIVE),
        tol.nehari_relative,
        "|Nehari residual| / ||u||^p",
    ));

    let residuals = weak_residual_battery(
        profile,
        params,
        &default_residual_battery(m, Boundary::Neumann, g),
        Source::Full,
    )?;
    let (worst_label, worst_res) =
        residuals
            .iter()
            .map(|(l, r)| (l.clone(), r.abs()))
            .fold(
                (String::new(), 0.0),
                |acc, x| if x.1 > acc.1 { x } else { acc },
            );
    checks.push(Check::at_most(
        "weak_residual",
        worst_res,
        tol.residual,
        format!("worst test function: {worst_label}"),
    ));

    let battery = default_inequality_battery(profile, params, g)?;
    let ineq = weak_inequality_check(profile, params, &battery)?;
    let worst_ineq = ineq
        .slacks
        .iter()
        .find(|(_, s)| *s == ineq.worst)
        .map(|(l, _)| l.clone())
        .unwrap_or_default();
    checks.push(Check::at_least(
        "weak_inequality",
        ineq.worst,
        -tol.inequality,
        format!("worst test function: {worst_ineq}"),
    ));

    Ok(Certificate { checks })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, p: f64, q: f64) -> ProblemParams {
        ProblemParams::new(n, p, q).unwrap()
    }

    #[test]
    fn radial_integral_examples() {
        let ones = vec![1.0; 129];
        assert!(
            (radial_integral(&ones, &params(2, 1.5, 10.0)) - std::f64::consts::PI).abs() < 1e-14
        );
        assert!((radial_integral(&ones, &params(1, 1.5, 10.0)) - 2.0).abs() < 1e-15);
        let r: Vec<f64> = (0..=128).map(|i| i as f64 / 128.0).collect();
        assert!((radial_integral(&r, &params(1, 1.5, 10.0)) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn simpson_is_exact_on_cubics_times_weight() {
        // Total degree of f(r) r^{N-1} at most 3; odd interval counts use the 3/8 tail.
        for m in [8usize, 9, 64, 65] {
            for (dim, deg) in [(1usize, 3i32), (2, 2), (3, 1), (4, 0)] {
                let pp = params(dim, 1.5, 10.0);
                let f: Vec<f64> = (0..=m).map(|i| (i as f64 / m as f64).powi(deg)).collect();
                let exact = pp.sphere_measure() / (deg + dim as i32) as f64;
                let got = radial_integral(&f, &pp);
                assert!(
                    (got - exact).abs() < 1e-13,
                    "m={m} N={dim} deg={deg}: {got} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn quadrature_error_estimate_tracks_true_error() {
        let pp = params(1, 1.5, 10.0);
        let f: Vec<f64> = (0..=64).map(|i| (3.0 * i as f64 / 64.0).exp()).collect();
        let exact = 2.0 * (3f64.exp() - 1.0) / 3.0;
        let err = (radial_integral(&f, &pp) - exact).abs();
        let est = radial_integral_error(&f, &pp);
        assert!(
            est > 0.3 * err && est < 3.0 * err,
            "estimate {est:e} vs error {err:e}"
        );
    }

    #[test]
    fn energy_of_constants() {
        let pp = params(2, 1.5, 20.0);
        let trunc = TruncationParams::default_for(&pp);
        let rep = energy(&RadialProfile::constant(1.0, 256), &pp, &trunc).unwrap();
        assert!((rep.energy - constant_energy(&pp)).abs() < 1e-12);
        assert_eq!(rep.holder, 0.0);
        assert!(rep.nehari_residual.abs() < 1e-14);

        let p1 = params(1, 1.5, 10.0);
        let rep = energy(
            &RadialProfile::constant(2.0, 256),
            &p1,
            &TruncationParams::new(&p1, 4.5, 2.5).unwrap(),
        )
        .unwrap();
        assert!((rep.energy + 201.028_8).abs() < 1e-4, "{}", rep.energy);
        assert!((rep.energy - (rep.w1p_p / 1.5 - rep.q_term)).abs() < 1e-12 * rep.energy.abs());
        assert!(!rep.truncated);
    }

    #[test]
    fn energy_uses_truncation_above_s0() {
        let pp = params(1, 1.5, 10.0);
        let trunc = TruncationParams::new(&pp, 4.5, 2.5).unwrap();
        let rep = energy(&RadialProfile::constant(6.0, 64), &pp, &trunc).unwrap();
        assert!(rep.truncated);
        let expected_q = 2.0 * truncated_primitive(6.0, &pp, &trunc);
        assert!((rep.q_term - expected_q).abs() < 1e-9 * expected_q);
    }

    #[test]
    fn nehari_projection_of_constants() {
        let pp = params(1, 1.5, 10.0);
        let trunc = TruncationParams::default_for(&pp);
        for c in [0.5, 2.0, 3.0] {
            let t = nehari_project(&RadialProfile::constant(c, 64), &pp, &trunc).unwrap();
            assert!((t - 1.0 / c).abs() < 1e-12, "c={c}: t={t}");
        }
        let t = nehari_project(&RadialProfile::constant(1.0, 64), &pp, &trunc).unwrap();
        assert!((t - 1.0).abs() < 1e-14);
    }

    #[test]
    fn nehari_projection_is_idempotent() {
        let pp = params(2, 1.5, 12.0);
        let trunc = TruncationParams::default_for(&pp);
        let prof = RadialProfile::from_fn(256, |r| 0.7 + 0.4 * r * r, |r| 0.8 * r);
        let t = nehari_project(&prof, &pp, &trunc).unwrap();
        let proj = prof.scaled(t);
        let t2 = nehari_project(&proj, &pp, &trunc).unwrap();
        assert!((t2 - 1.0).abs() < 1e-10);
        let rep = energy(&proj, &pp, &trunc).unwrap();
        assert!(rep.nehari_residual.abs() <= 1e-10 * rep.w1p_p);
    }

    #[test]
    fn nehari_projection_outside_pure_power_regime() {
        let pp = params(1, 1.5, 3.0);
        let trunc = TruncationParams::default_for(&pp);
        // Tiny values get scaled far up: t = c^{-1}, with c = 1e-3 → t·sup = 1 < s0, fine,
        // but a steep profile with small q-mass is pushed above s0.
        let spike =
            RadialProfile::from_fn(256, |r| 1e-3 + 50.0 * r.powi(40), |r| 2000.0 * r.powi(39));
        match nehari_project(&spike, &pp, &trunc) {
            Err(Error::TruncationRegime { .. }) | Ok(_) => {}
            Err(e) => panic!("unexpected {e}"),
        }
        assert!(nehari_project(&RadialProfile::constant(0.0, 16), &pp, &trunc).is_err());
    }

    #[test]
    fn lyapunov_of_constant_one() {
        let pp = params(1, 1.5, 10.0);
        let l = lyapunov_series(&RadialProfile::constant(1.0, 32), &pp);
        assert!(l.iter().all(|v| (v - (0.1 - 1.0 / 1.5)).abs() < 1e-15));
        assert_eq!(lyapunov_max_increase(&l), 0.0);
    }

    #[test]
    fn holder_examples() {
        assert_eq!(holder_seminorm(&RadialProfile::constant(3.0, 64), 0.5), 0.0);
        let ramp = RadialProfile::from_fn(64, |r| r, |_| 1.0);
        assert!((holder_seminorm(&ramp, 0.5) - 1.0).abs() < 1e-15);
        let wiggle = RadialProfile::from_fn(1024, |r| (20.0 * r).sin() * r, |_| 0.0);
        let coarse = holder_seminorm_strided(&wiggle, 0.3, 8);
        let fine = holder_seminorm_strided(&wiggle, 0.3, 4);
        assert!(fine >= coarse);
    }

    #[test]
    fn apriori_margins_for_constant_one() {
        let pp = params(1, 1.5, 10.0);
        let rep = apriori_check(
            &RadialProfile::constant(1.0, 64),
            &pp,
            &TruncationParams::default_for(&pp),
        )
        .unwrap();
        assert!((rep.value_margin - (pp.value_bound() - 1.0)).abs() < 1e-15);
        assert!(rep.value_margin > 0.0 && rep.slope_margin > 0.0);
        assert!(rep.worst() > 0.0);
    }

    #[test]
    fn weak_checks_on_constant_one() {
        let pp = params(2, 1.5, 30.0);
        let one = RadialProfile::constant(1.0, 128);
        for phi in default_residual_battery(128, Boundary::Neumann, None) {
            let r = weak_residual(&one, &pp, &phi, Source::Full).unwrap();
            assert!(r.abs() < 1e-14, "{}: {r}", phi.label);
        }
        let battery = default_inequality_battery(&one, &pp, None).unwrap();
        let rep = weak_inequality_check(&one, &pp, &battery).unwrap();
        let self_slack = rep.slacks.iter().find(|(l, _)| l == "u").unwrap().1;
        assert_eq!(self_slack, 0.0);
        assert!(rep.worst >= -1e-12);
        assert!(weak_inequality_check(&one, &pp, &[]).is_err());
    }

    #[test]
    fn certificate_of_constant_one_passes() {
        let pp = params(1, 1.5, 40.0);
        let cert = certify(
            &RadialProfile::constant(1.0, 256),
            &pp,
            &TruncationParams::default_for(&pp),
            None,
            &CertificateTolerances::default(),
        )
        .unwrap();
        assert!(cert.passed(), "{:?}", cert.failures());
        assert!(cert.get("sign_facts").is_none());
    }

    #[test]
    fn local_min_probe_zero_eps() {
        let pp = params(1, 1.5, 100.0);
        let trunc = TruncationParams::default_for(&pp);
        let dirs = [TestFunction::ramp(1.0, -1.0, 256)];
        let rows = local_min_probe(
            &pp,
            &trunc,
            &dirs,
            &LocalMinProbeConfig {
                eps: vec![0.0],
                delta: 0.5,
            },
        );
        assert_eq!(rows.len(), 1);
        assert!(rows[0].energy_gap.unwrap().abs() < 1e-12);
        assert!(rows[0].w1p_distance.unwrap() < 1e-12);
    }
}
