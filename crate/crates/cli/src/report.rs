use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use plap_core::asymptotics::{DerivativeTable, RateFit};
use plap_core::ivp::StepStats;
use plap_core::{Certificate, EnergyLabel, EnergyReport, SweepRecord, SweepSummary};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Metadata {
    pub command: String,
    pub version: String,
    /// Seconds since the Unix epoch.
    pub timestamp: u64,
    pub config: RunConfig,
}

impl Metadata {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            command: command.into(),
            version: env!("CARGO_PKG_VERSION").into(),
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map_or(0, |d| d.as_secs()),
            config: config.clone(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub d: f64,
    pub accepted: bool,
    pub rejection: Option<String>,
    /// `"u"` or `"v"` when the root is the selected member of its family.
    pub selected: Option<String>,
    pub label: EnergyLabel,
    pub miss: f64,
    pub bracket: f64,
    pub energy: Option<EnergyReport>,
    pub certificate: Option<Certificate>,
    pub steps: StepStats,
    pub profile_file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LimitReport {
    pub g_at_origin: f64,
    pub dirichlet_value: f64,
    pub norm_p: f64,
    pub ball_measure: f64,
    pub certificate: Certificate,
    pub profile_file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct NamedRate {
    pub series: String,
    pub fit: Option<RateFit>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepReport {
    pub records: Vec<SweepRecord>,
    pub summary: SweepSummary,
    pub verdicts: Vec<Verdict>,
    pub derivative_check: DerivativeTable,
    pub rates: Vec<NamedRate>,
    pub failed_q: Vec<f64>,
    pub table_file: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerifyReport {
    pub profile_file: String,
    pub label: EnergyLabel,
    pub energy: EnergyReport,
    pub certificate: Certificate,
}

/// Everything one command produced. Field order is the JSON key order.
#[derive(Debug, Clone, Serialize)]
pub struct ReportBundle {
    pub metadata: Metadata,
    pub summary: String,
    pub solutions: Vec<SolutionReport>,
    pub limit: Option<LimitReport>,
    pub sweep: Option<SweepReport>,
    pub verify: Option<VerifyReport>,
    pub failures: Vec<String>,
}

impl ReportBundle {
    pub fn new(command: &str, config: &RunConfig) -> Self {
        Self {
            metadata: Metadata::new(command, config),
            summary: String::new(),
            solutions: Vec::new(),
            limit: None,
            sweep: None,
            verify: None,
            failures: Vec::new(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report always serializes")
    }
}

/// Writes through a temporary file in the target directory, then renames.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    let dir = path
        .parent()
        .filter(|d| !d.as_os_str().is_empty())
        .unwrap_or(Path::new("."));
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path).map_err(|e| CliError::Io(e.to_string()))?;
    Ok(())
}

/// Collects output files and writes them once the computation is done.
#[derive(Debug, Default)]
pub struct OutputSet {
    pub dir: PathBuf,
    pending: Vec<(String, Vec<u8>)>,
}

impl OutputSet {
    pub fn new(dir: &Path) -> Self {
        Self {
            dir: dir.to_path_buf(),
            pending: Vec::new(),
        }
    }

    /// Queues `name`, returning its eventual path as a string.
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) -> String {
        self.pending.push((name.into(), bytes));
        self.dir.join(name).display().to_string()
    }

    pub fn flush(self) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::new();
        for (name, bytes) in self.pending {
            let path = self.dir.join(name);
            write_atomic(&path, &bytes)?;
            written.push(path);
        }
        Ok(written)
    }
}
