//! Problem instance, signed powers, radial profiles and the truncated
//! nonlinearity.
//!
//! The PDE is `-Δ_p u + u^{p-1} = u^{q-1}` in the unit ball of `R^N` with
//! homogeneous Neumann data. Everything downstream works with radial
//! profiles sampled on a uniform grid of `[0, 1]`.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// `|s|^{alpha-1} s`, the odd extension of `s^alpha`.
///
/// With `alpha = p - 1` this realizes `|∇u|^{p-2} ∇u`; with `alpha = 1/(p-1)`
/// it inverts it.
#[inline]
pub fn signed_power(s: f64, alpha: f64) -> f64 {
    debug_assert!(alpha > 0.0, "signed_power requires alpha > 0");
    if s == 0.0 {
        return 0.0;
    }
    s.signum() * s.abs().powf(alpha)
}

/// Lebesgue measure of the unit ball of `R^N`, `π^{N/2} / Γ(N/2 + 1)`.
pub fn ball_measure(dim: usize) -> f64 {
    assert!(dim >= 1, "ball_measure requires N >= 1");
    // V_N = V_{N-2} * 2π / N with V_0 = 1, V_1 = 2.
    let (mut v, start) = if dim.is_multiple_of(2) {
        (1.0, 2)
    } else {
        (2.0, 3)
    };
    let mut k = start;
    while k <= dim {
        v *= 2.0 * PI / k as f64;
        k += 2;
    }
    v
}

/// One instance of the Neumann problem on the unit ball.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemParams {
    dim: usize,
    p: f64,
    q: f64,
}

impl ProblemParams {
    pub fn new(dim: usize, p: f64, q: f64) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidParams(format!("N = {dim} violates N >= 1")));
        }
        if !(p.is_finite() && p > 1.0 && p <= 2.0) {
            return Err(Error::InvalidParams(format!("p = {p} violates 1 < p <= 2")));
        }
        if !(q.is_finite() && q > p) {
            return Err(Error::InvalidParams(format!(
                "q = {q} violates q > p = {p}"
            )));
        }
        Ok(Self { dim, p, q })
    }

    /// Same `N` and `p`, new `q`.
    pub fn with_q(&self, q: f64) -> Result<Self> {
        Self::new(self.dim, self.p, q)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// Conjugate exponent `p' = p / (p - 1)`.
    pub fn conjugate(&self) -> f64 {
        self.p / (self.p - 1.0)
    }

    /// `|B|`.
    pub fn ball_measure(&self) -> f64 {
        ball_measure(self.dim)
    }

    /// `ω = N |B|`, the measure of the unit sphere.
    pub fn sphere_measure(&self) -> f64 {
        self.dim as f64 * self.ball_measure()
    }

    /// Critical Sobolev exponent `Np / (N - p)`, or `None` when it is infinite.
    pub fn critical_exponent(&self) -> Option<f64> {
        let n = self.dim as f64;
        (self.p < n).then(|| n * self.p / (n - self.p))
    }

    /// `K_∞ = 1 + (p')^{1/p}`, the rough sup bound for cone solutions.
    pub fn rough_sup_bound(&self) -> f64 {
        1.0 + self.conjugate().powf(1.0 / self.p)
    }

    /// Pointwise bound `(q/p)^{1/(q-p)}` on cone solutions.
    pub fn value_bound(&self) -> f64 {
        (self.q / self.p).powf(1.0 / (self.q - self.p))
    }

    /// Pointwise bound `((q-p) / (q(p-1)))^{1/p}` on the radial derivative.
    pub fn slope_bound(&self) -> f64 {
        ((self.q - self.p) / (self.q * (self.p - 1.0))).powf(1.0 / self.p)
    }

    /// `|B| ((q-p)/(q(p-1)) + (q/p)^{p/(q-p)})`, bound on `‖u‖^p_{W^{1,p}}`.
    pub fn w1p_bound(&self) -> f64 {
        let (p, q) = (self.p, self.q);
        self.ball_measure() * ((q - p) / (q * (p - 1.0)) + (q / p).powf(p / (q - p)))
    }

    /// `(|B|/p) (q/p)^{p/(q-p)}`, the improved bound on `‖u‖^p/p` and the energy.
    pub fn energy_bound(&self) -> f64 {
        let (p, q) = (self.p, self.q);
        self.ball_measure() / p * (q / p).powf(p / (q - p))
    }
}

/// Energy of the constant solution `u ≡ 1`: `|B| (1/p - 1/q)`.
pub fn constant_energy(params: &ProblemParams) -> f64 {
    params.ball_measure() * (1.0 / params.p() - 1.0 / params.q())
}

/// Truncation data for the subcritical modification of `s^{q-1}` above `s0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    s0: f64,
    ell: f64,
}

impl TruncationParams {
    pub fn new(params: &ProblemParams, s0: f64, ell: f64) -> Result<Self> {
        let floor = 1.0 + params.rough_sup_bound();
        if !(s0.is_finite() && s0 >= floor) {
            return Err(Error::InvalidTruncation(format!(
                "s0 = {s0} violates s0 >= 2 + (p')^(1/p) = {floor}"
            )));
        }
        let above_p = ell > params.p();
        let below_crit = params.critical_exponent().is_none_or(|c| ell < c);
        if !(ell.is_finite() && above_p && below_crit) {
            return Err(Error::InvalidTruncation(format!(
                "ell = {ell} violates p < ell < p* ({:?})",
                params.critical_exponent()
            )));
        }
        Ok(Self { s0, ell })
    }

    /// `s0 = max(4, 2 + (p')^{1/p})`, `ℓ` the midpoint of `(p, min(p*, p + 2))`.
    pub fn default_for(params: &ProblemParams) -> Self {
        let s0 = f64::max(4.0, 1.0 + params.rough_sup_bound());
        let upper = params
            .critical_exponent()
            .map_or(params.p() + 2.0, |c| c.min(params.p() + 2.0));
        let ell = 0.5 * (params.p() + upper);
        Self { s0, ell }
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn ell(&self) -> f64 {
        self.ell
    }
}

/// The truncated nonlinearity `f_q`.
pub fn truncated_f(s: f64, params: &ProblemParams, trunc: &TruncationParams) -> f64 {
    assert!(s >= 0.0, "truncated_f is defined for s >= 0, got {s}");
    let q = params.q();
    let (s0, ell) = (trunc.s0, trunc.ell);
    if s <= s0 {
        s.powf(q - 1.0)
    } else {
        s0.powf(q - 1.0)
            + (q - 1.0) / (ell - 1.0) * s0.powf(q - ell) * (s.powf(ell - 1.0) - s0.powf(ell - 1.0))
    }
}

/// The primitive `F_q(s) = ∫_0^s f_q`.
pub fn truncated_primitive(s: f64, params: &ProblemParams, trunc: &TruncationParams) -> f64 {
    assert!(
        s >= 0.0,
        "truncated_primitive is defined for s >= 0, got {s}"
    );
    let q = params.q();
    let (s0, ell) = (trunc.s0, trunc.ell);
    if s <= s0 {
        return s.powf(q) / q;
    }
    let slope = (q - 1.0) / (ell - 1.0) * s0.powf(q - ell);
    s0.powf(q) / q
        + s0.powf(q - 1.0) * (s - s0)
        + slope * ((s.powf(ell) - s0.powf(ell)) / ell - s0.powf(ell - 1.0) * (s - s0))
}

/// A radial function sampled on a grid of `[0, 1]`, with derivative samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    nodes: Vec<f64>,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

/// First cone invariant found broken by [`RadialProfile::cone_violation`].
#[derive(Debug, Clone, PartialEq)]
pub enum ConeViolation {
    Negative { index: usize, value: f64 },
    Decrease { index: usize, drop: f64 },
    NegativeSlope { index: usize, slope: f64 },
    SlopeAtOrigin(f64),
}

impl std::fmt::Display for ConeViolation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Negative { index, value } => {
                write!(f, "negative value {value:e} at node {index}")
            }
            Self::Decrease { index, drop } => {
                write!(
                    f,
                    "value decreases by {drop:e} between nodes {} and {index}",
                    index - 1
                )
            }
            Self::NegativeSlope { index, slope } => {
                write!(f, "negative derivative {slope:e} at node {index}")
            }
            Self::SlopeAtOrigin(s) => write!(f, "derivative {s:e} at the origin is not zero"),
        }
    }
}

/// Uniform grid `r_i = i / m`, `i = 0..=m`.
pub fn uniform_grid(m: usize) -> Vec<f64> {
    assert!(m >= 1, "grid needs at least one interval");
    (0..=m).map(|i| i as f64 / m as f64).collect()
}

impl RadialProfile {
    pub fn new(nodes: Vec<f64>, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self> {
        if nodes.len() < 2 {
            return Err(Error::InvalidProfile("need at least two nodes".into()));
        }
        if values.len() != nodes.len() || derivs.len() != nodes.len() {
            return Err(Error::InvalidProfile(format!(
                "length mismatch: {} nodes, {} values, {} derivatives",
                nodes.len(),
                values.len(),
                derivs.len()
            )));
        }
        if nodes[0] != 0.0 {
            return Err(Error::InvalidProfile(format!(
                "first node is {} not 0",
                nodes[0]
            )));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidProfile(
                "nodes are not strictly increasing".into(),
            ));
        }
        if values
            .iter()
            .chain(&derivs)
            .chain(&nodes)
            .any(|x| !x.is_finite())
        {
            return Err(Error::InvalidProfile("non-finite sample".into()));
        }
        Ok(Self {
            nodes,
            values,
            derivs,
        })
    }

    /// Constant `c` on the uniform grid with `m` intervals.
    pub fn constant(c: f64, m: usize) -> Self {
        let nodes = uniform_grid(m);
        let n = nodes.len();
        Self {
            nodes,
            values: vec![c; n],
            derivs: vec![0.0; n],
        }
    }

    /// Samples `f` and `f'` on the uniform grid with `m` intervals.
    pub fn from_fn(m: usize, f: impl Fn(f64) -> f64, df: impl Fn(f64) -> f64) -> Self {
        let nodes = uniform_grid(m);
        let values = nodes.iter().map(|&r| f(r)).collect();
        let derivs = nodes.iter().map(|&r| df(r)).collect();
        Self {
            nodes,
            values,
            derivs,
        }
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals.
    pub fn intervals(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Whether the grid reaches `r = 1`.
    pub fn is_complete(&self) -> bool {
        (self.nodes[self.nodes.len() - 1] - 1.0).abs() <= 1e-12
    }

    /// Whether the nodes are `i / m` for `m = intervals()`, to rounding.
    pub fn is_uniform_unit_grid(&self) -> bool {
        let m = self.intervals() as f64;
        self.nodes
            .iter()
            .enumerate()
            .all(|(i, &r)| (r - i as f64 / m).abs() <= 1e-12)
    }

    pub fn at_origin(&self) -> f64 {
        self.values[0]
    }

    pub fn at_boundary(&self) -> f64 {
        self.values[self.values.len() - 1]
    }

    pub fn slope_at_boundary(&self) -> f64 {
        self.derivs[self.derivs.len() - 1]
    }

    pub fn sup(&self) -> f64 {
        self.values
            .iter()
            .fold(f64::NEG_INFINITY, |a, &b| a.max(b.abs()))
    }

    /// `c · self`, values and derivatives.
    pub fn scaled(&self, c: f64) -> Self {
        Self {
            nodes: self.nodes.clone(),
            values: self.values.iter().map(|v| c * v).collect(),
            derivs: self.derivs.iter().map(|v| c * v).collect(),
        }
    }

    /// `self + eps · other` on a shared grid.
    pub fn perturbed(&self, other: &RadialProfile, eps: f64) -> Result<Self> {
        self.check_same_grid(other)?;
        Ok(Self {
            nodes: self.nodes.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| a + eps * b)
                .collect(),
            derivs: self
                .derivs
                .iter()
                .zip(&other.derivs)
                .map(|(a, b)| a + eps * b)
                .collect(),
        })
    }

    pub fn check_same_grid(&self, other: &RadialProfile) -> Result<()> {
        if self.nodes.len() != other.nodes.len()
            || self
                .nodes
                .iter()
                .zip(&other.nodes)
                .any(|(a, b)| (a - b).abs() > 1e-14)
        {
            return Err(Error::InvalidProfile(
                "profiles live on different grids".into(),
            ));
        }
        Ok(())
    }

    /// Checks membership in the cone of non-negative, non-decreasing profiles.
    ///
    /// Decreases and negative derivative samples down to `-tol` are tolerated.
    pub fn cone_violation(&self, tol: f64) -> Option<ConeViolation> {
        if self.derivs[0].abs() > tol {
            return Some(ConeViolation::SlopeAtOrigin(self.derivs[0]));
        }
        if let Some((index, &value)) = self.values.iter().enumerate().find(|(_, v)| **v < 0.0) {
            return Some(ConeViolation::Negative { index, value });
        }
        for i in 1..self.values.len() {
            let drop = self.values[i - 1] - self.values[i];
            if drop > tol {
                return Some(ConeViolation::Decrease { index: i, drop });
            }
        }
        self.derivs
            .iter()
            .enumerate()
            .find(|(_, d)| **d < -tol)
            .map(|(index, &slope)| ConeViolation::NegativeSlope { index, slope })
    }

    /// Number of sign changes of `u - level` over the nodes, ignoring exact hits.
    pub fn crossings(&self, level: f64) -> usize {
        let signs: Vec<f64> = self
            .values
            .iter()
            .map(|v| v - level)
            .filter(|d| *d != 0.0)
            .map(f64::signum)
            .collect();
        signs.windows(2).filter(|w| w[0] != w[1]).count()
    }

    /// `max_i |u_i - c|`.
    pub fn sup_distance_to_constant(&self, c: f64) -> f64 {
        self.values.iter().fold(0.0, |a, v| a.max((v - c).abs()))
    }

    /// `max_i |u_i - v_i|` on a shared grid.
    pub fn sup_distance(&self, other: &RadialProfile) -> Result<f64> {
        self.check_same_grid(other)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .fold(0.0, |a, (x, y)| a.max((x - y).abs())))
    }
}
