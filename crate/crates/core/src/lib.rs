//! Radial shooting solver for the Neumann problem
//! `-Δ_p u + u^{p-1} = u^{q-1}` in the unit ball, restricted to
//! non-negative, radially non-decreasing solutions, together with quadrature
//! of the associated energy functionals and machine checks of the a priori
//! estimates such solutions satisfy.

pub mod asymptotics;
pub mod error;
pub mod functionals;
pub mod io;
pub mod ivp;
pub mod problem;
pub mod shooting;

pub use asymptotics::{compute_g, sweep, LimitProfile, Sweep, SweepRecord, SweepSummary};
pub use error::{Error, Result};
pub use functionals::{
    certify, energy, nehari_project, Certificate, CertificateTolerances, EnergyReport,
};
pub use ivp::{IntegratorControls, IvpResult, IvpState, IvpStatus, Source};
pub use problem::{
    ball_measure, constant_energy, signed_power, truncated_f, ProblemParams, RadialProfile,
    TruncationParams,
};
pub use shooting::{find_solutions, EnergyLabel, ScanSpec, SolutionSet};
