//! Run configuration: a flat TOML table whose keys mirror the command-line
//! flags. Every key is optional in the file; missing keys take the defaults
//! below, and the fully resolved table is echoed into each report.

use std::path::{Path, PathBuf};

use plap_core::{IntegratorControls, ProblemParams, ScanSpec};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Environment variable that sets the output directory when no flag does.
pub const OUT_DIR_ENV: &str = "PLAP_OUT_DIR";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub dim: usize,
    pub p: f64,
    pub q: f64,
    pub q_list: Vec<f64>,

    pub eps0: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub u_cap: Option<f64>,
    pub max_steps: usize,
    pub grid_intervals: usize,

    pub scan_points: usize,
    pub d_min: f64,
    pub d_max: f64,
    pub ladder_spread: f64,
    pub ladder_per_octave: usize,
    pub exclusion: f64,
    pub d_tol: f64,
    pub refine_rel_tol: f64,
    pub margin_factor: f64,

    pub out_dir: PathBuf,
    pub formats: Vec<Format>,
    pub parallel: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let c = IntegratorControls::default();
        let s = ScanSpec::default();
        Self {
            dim: 1,
            p: 1.5,
            q: 40.0,
            q_list: vec![20.0, 40.0, 80.0, 160.0, 320.0],
            eps0: c.eps0,
            rel_tol: c.rel_tol,
            abs_tol: c.abs_tol,
            u_cap: c.u_cap,
            max_steps: c.max_steps,
            grid_intervals: c.grid_intervals,
            scan_points: s.points,
            d_min: s.d_min,
            d_max: s.d_max,
            ladder_spread: s.ladder_spread,
            ladder_per_octave: s.ladder_per_octave,
            exclusion: s.exclusion,
            d_tol: s.d_tol,
            refine_rel_tol: s.refine_rel_tol,
            margin_factor: s.margin_factor,
            out_dir: PathBuf::from("plap-out"),
            formats: vec![Format::Json, Format::Csv],
            parallel: s.parallel,
        }
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config always serializes")
    }

    pub fn params(&self) -> Result<ProblemParams, CliError> {
        ProblemParams::new(self.dim, self.p, self.q).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Validated parameters for every entry of `q_list`.
    pub fn sweep_params(&self) -> Result<Vec<ProblemParams>, CliError> {
        self.q_list
            .iter()
            .map(|q| {
                ProblemParams::new(self.dim, self.p, *q)
                    .map_err(|e| CliError::Config(e.to_string()))
            })
            .collect()
    }

    pub fn controls(&self) -> Result<IntegratorControls, CliError> {
        let c = IntegratorControls {
            eps0: self.eps0,
            rel_tol: self.rel_tol,
            abs_tol: self.abs_tol,
            u_cap: self.u_cap,
            max_steps: self.max_steps,
            grid_intervals: self.grid_intervals,
        };
        c.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(c)
    }

    pub fn scan(&self) -> Result<ScanSpec, CliError> {
        let s = ScanSpec {
            points: self.scan_points,
            d_min: self.d_min,
            d_max: self.d_max,
            ladder_spread: self.ladder_spread,
            ladder_per_octave: self.ladder_per_octave,
            exclusion: self.exclusion,
            d_tol: self.d_tol,
            refine_rel_tol: self.refine_rel_tol,
            margin_factor: self.margin_factor,
            parallel: self.parallel,
            ..ScanSpec::default()
        };
        s.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(s)
    }

    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}
