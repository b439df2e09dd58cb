use std::path::PathBuf;

use clap::{Args as ClapArgs, Parser, Subcommand};

use crate::commands::{cmd_limit, cmd_solve, cmd_sweep, cmd_verify, CommandOutput};
use crate::config::{Format, RunConfig, OUT_DIR_ENV};
use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "plap",
    version,
    about = "Radial Neumann solutions of -Δ_p u + u^{p-1} = u^{q-1} in the unit ball"
)]
pub struct Args {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Find and certify all radial non-decreasing solutions for one q.
    Solve(Common),
    /// Solve along q_list and report the limit trends.
    Sweep(Common),
    /// Compute the limit profile G and its certificate.
    Limit(Common),
    /// Run the certificate battery on a profile CSV (columns r,u,du).
    Verify {
        profile: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

/// Options shared by every command; each one overrides the config key of the same name.
#[derive(Debug, Clone, Default, ClapArgs)]
pub struct Common {
    /// TOML config file.
    #[arg(long, short)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub q: Option<f64>,
    /// Comma-separated, increasing.
    #[arg(long, value_delimiter = ',')]
    pub q_list: Option<Vec<f64>>,
    #[arg(long)]
    pub grid_intervals: Option<usize>,
    #[arg(long)]
    pub rel_tol: Option<f64>,
    #[arg(long)]
    pub scan_points: Option<usize>,
    /// Output directory; falls back to $PLAP_OUT_DIR, then the config.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[arg(long, value_delimiter = ',', value_parser = parse_format)]
    pub formats: Option<Vec<Format>>,
    /// Disable parallel scans and sweeps.
    #[arg(long)]
    pub serial: bool,
}

fn parse_format(s: &str) -> Result<Format, String> {
    match s {
        "json" => Ok(Format::Json),
        "csv" => Ok(Format::Csv),
        other => Err(format!("unknown format {other:?} (expected json or csv)")),
    }
}

impl Common {
    /// Config file, then environment, then flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        if let Some(dir) = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()) {
            cfg.out_dir = dir.into();
        }
        if let Some(v) = self.dim {
            cfg.dim = v;
        }
        if let Some(v) = self.p {
            cfg.p = v;
        }
        if let Some(v) = self.q {
            cfg.q = v;
        }
        if let Some(v) = &self.q_list {
            cfg.q_list = v.clone();
        }
        if let Some(v) = self.grid_intervals {
            cfg.grid_intervals = v;
        }
        if let Some(v) = self.rel_tol {
            cfg.rel_tol = v;
        }
        if let Some(v) = self.scan_points {
            cfg.scan_points = v;
        }
        if let Some(v) = &self.out_dir {
            cfg.out_dir = v.clone();
        }
        if let Some(v) = &self.formats {
            cfg.formats = v.clone();
        }
        if self.serial {
            cfg.parallel = false;
        }
        Ok(cfg)
    }
}

fn dispatch(command: &Command) -> Result<CommandOutput, CliError> {
    match command {
        Command::Solve(c) => cmd_solve(&c.resolve()?),
        Command::Sweep(c) => cmd_sweep(&c.resolve()?),
        Command::Limit(c) => cmd_limit(&c.resolve()?),
        Command::Verify { profile, common } => cmd_verify(&common.resolve()?, profile),
    }
}

/// Runs a parsed command line and returns the process exit code.
pub fn run(args: Args) -> i32 {
    match dispatch(&args.command) {
        Ok(out) => {
            for line in &out.lines {
                println!("{line}");
            }
            for f in &out.files {
                println!("wrote {}", f.display());
            }
            out.exit_code
        }
        Err(e) => {
            eprintln!("plap: {e}");
            e.exit_code()
        }
    }
}
