use std::path::{Path, PathBuf};

use plap_core::asymptotics::{derivative_convergence_check, limit_certificate, rate_fit};
use plap_core::io::{profile_csv_string, read_profile_csv, sweep_csv_string};
use plap_core::shooting::{classify_energy, RootStatus};
use plap_core::{
    certify, compute_g, energy, find_solutions, sweep, Certificate, CertificateTolerances,
    IntegratorControls, ProblemParams, SweepRecord, SweepSummary, TruncationParams,
};

use crate::config::{Format, RunConfig};
use crate::error::{exit, CliError};
use crate::report::{
    LimitReport, NamedRate, OutputSet, ReportBundle, SolutionReport, SweepReport, Verdict,
    VerifyReport,
};

/// A finished command: its report, the exit code and the files it wrote.
#[derive(Debug)]
pub struct CommandOutput {
    pub bundle: ReportBundle,
    pub exit_code: i32,
    pub files: Vec<PathBuf>,
    /// Human-readable lines for stdout.
    pub lines: Vec<String>,
}

fn certificate_lines(cert: &Certificate, prefix: &str) -> Vec<String> {
    cert.checks
        .iter()
        .map(|c| {
            format!(
                "{prefix}{:<16} {}  value {:.6e} threshold {:.3e}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.value,
                c.threshold,
                c.detail
            )
        })
        .collect()
}

fn finish(
    bundle: ReportBundle,
    out: OutputSet,
    cfg: &RunConfig,
    json_name: &str,
    code: i32,
    lines: Vec<String>,
) -> Result<CommandOutput, CliError> {
    let mut out = out;
    if cfg.wants(Format::Json) {
        out.add(json_name, bundle.to_json().into_bytes());
    }
    let files = out.flush()?;
    Ok(CommandOutput {
        bundle,
        exit_code: code,
        files,
        lines,
    })
}

fn tag(params: &ProblemParams) -> String {
    format!("N{}_p{}_q{}", params.dim(), params.p(), params.q())
}

pub fn cmd_solve(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let params = cfg.params()?;
    let controls = cfg.controls()?;
    let scan = cfg.scan()?;
    let trunc = TruncationParams::default_for(&params);
    let set = find_solutions(&params, &controls, &scan)?;
    let g = compute_g(&params, &controls)?;
    let tol = CertificateTolerances::default();

    let mut bundle = ReportBundle::new("solve", cfg);
    let mut out = OutputSet::new(&cfg.out_dir);
    let mut lines = vec![format!(
        "N = {}, p = {}, q = {}: I_q(1) = {:.12}",
        params.dim(),
        params.p(),
        params.q(),
        set.constant_energy
    )];
    let u_sel = set.select_u().map(|r| r.d);
    let v_sel = set.select_v().map(|r| r.d);
    let mut certified = true;

    for (k, root) in set.roots.iter().enumerate() {
        let accepted = root.is_accepted();
        let certificate = if accepted {
            Some(certify(
                root.profile(),
                &params,
                &trunc,
                Some(&g.profile),
                &tol,
            )?)
        } else {
            None
        };
        let profile_file = (accepted && cfg.wants(Format::Csv)).then(|| {
            out.add(
                &format!("solve_{}_root{k}.csv", tag(&params)),
                profile_csv_string(root.profile()).into_bytes(),
            )
        });
        let selected = if Some(root.d) == u_sel {
            Some("u".to_string())
        } else if Some(root.d) == v_sel {
            Some("v".to_string())
        } else {
            None
        };
        let energy_text = root
            .energy
            .map_or("n/a".into(), |e| format!("{:.12}", e.energy));
        match &root.status {
            RootStatus::Accepted => lines.push(format!(
                "root {k}: d = {:.15} {:?} I = {energy_text}{}",
                root.d,
                root.label,
                selected
                    .as_deref()
                    .map_or(String::new(), |s| format!(" (selected {s})"))
            )),
            RootStatus::Rejected(why) => {
                lines.push(format!("root {k}: d = {:.15} rejected: {why}", root.d))
            }
        }
        if let Some(cert) = &certificate {
            lines.extend(certificate_lines(cert, "    "));
            if !cert.passed() {
                certified = false;
                bundle.failures.push(format!(
                    "root {k} (d = {}): failed {}",
                    root.d,
                    cert.failures()
                        .iter()
                        .map(|c| c.name.as_str())
                        .collect::<Vec<_>>()
                        .join(", ")
                ));
            }
        }
        bundle.solutions.push(SolutionReport {
            d: root.d,
            accepted,
            rejection: match &root.status {
                RootStatus::Rejected(why) => Some(why.clone()),
                RootStatus::Accepted => None,
            },
            selected,
            label: root.label,
            miss: root.outcome.miss,
            bracket: root.bracket,
            energy: root.energy,
            certificate,
            steps: root.outcome.result.stats,
            profile_file,
        });
    }
    bundle.failures.extend(set.failures.iter().cloned());

    bundle.summary = match set.accepted_count() {
        0 => "no non-constant solutions found".into(),
        n => format!(
            "{n} accepted non-constant solution(s), {} rejected",
            set.roots.len() - n
        ),
    };
    lines.push(bundle.summary.clone());
    let code = if certified {
        exit::OK
    } else {
        exit::CERTIFICATE
    };
    finish(
        bundle,
        out,
        cfg,
        &format!("solve_{}.json", tag(&params)),
        code,
        lines,
    )
}

fn column(records: &[SweepRecord], f: impl Fn(&SweepRecord) -> Option<f64>) -> Vec<(f64, f64)> {
    records
        .iter()
        .filter_map(|r| f(r).map(|v| (r.q, v)))
        .collect()
}

pub fn cmd_sweep(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let params = cfg.sweep_params()?;
    let controls = cfg.controls()?;
    let scan = cfg.scan()?;
    let mut bundle = ReportBundle::new("sweep", cfg);
    if params.len() < 2 {
        bundle.summary = format!(
            "q_list has {} entr{}; trends need at least 2",
            params.len(),
            if params.len() == 1 { "y" } else { "ies" }
        );
        let lines = vec![bundle.summary.clone()];
        return finish(
            bundle,
            OutputSet::new(&cfg.out_dir),
            cfg,
            "sweep.json",
            exit::INSUFFICIENT,
            lines,
        );
    }
    let template = params[0];
    let result = sweep(&template, &cfg.q_list, &controls, &scan)?;
    let records = result.records();
    let summary = SweepSummary::new(&records);
    let derivative_check = derivative_convergence_check(&result, 0.5)?;

    let series: [(&str, Vec<(f64, f64)>); 5] = [
        ("sup_dist_v", column(&records, |r| r.sup_dist_v)),
        ("w1p_dist_v", column(&records, |r| r.w1p_dist_v)),
        (
            "energy_gap_v",
            column(&records, |r| r.energy_ratio.map(|e| (e - 1.0).abs())),
        ),
        ("q_term_v", column(&records, |r| r.q_term_v)),
        ("sup_dist_u", column(&records, |r| r.sup_dist_u)),
    ];
    let rates = series
        .iter()
        .map(|(name, s)| NamedRate {
            series: name.to_string(),
            fit: rate_fit(s).ok(),
        })
        .collect();

    let mut out = OutputSet::new(&cfg.out_dir);
    let table_file = cfg
        .wants(Format::Csv)
        .then(|| out.add("sweep.csv", sweep_csv_string(&records).into_bytes()));
    if cfg.wants(Format::Csv) {
        out.add(
            "sweep_G.csv",
            profile_csv_string(&result.limit.profile).into_bytes(),
        );
    }

    let mut lines = Vec::new();
    for r in &records {
        let f = |x: Option<f64>| x.map_or("NA".to_string(), |v| format!("{v:.6e}"));
        lines.push(format!(
            "q = {:>8}: d_u {} d_v {} sup|v-1| {} sup|u-G| {} q_term_v {}",
            r.q,
            f(r.d_u),
            f(r.d_v),
            f(r.sup_dist_v),
            f(r.sup_dist_u),
            f(r.q_term_v)
        ));
    }
    let verdicts: Vec<Verdict> = summary
        .verdicts()
        .into_iter()
        .map(|(name, passed)| Verdict {
            name: name.into(),
            passed,
        })
        .chain(std::iter::once(Verdict {
            name: "derivative_u_decreasing".into(),
            passed: derivative_check.decreasing,
        }))
        .collect();
    for v in &verdicts {
        lines.push(format!("{:<26} {}", v.name, v.passed));
    }

    let failed_q: Vec<f64> = result.failures().iter().map(|(q, _)| *q).collect();
    bundle.failures = result
        .failures()
        .into_iter()
        .map(|(q, why)| format!("q = {q}: {why}"))
        .collect();
    let code = if summary.complete_records >= 2 {
        exit::OK
    } else {
        exit::INSUFFICIENT
    };
    bundle.summary = format!(
        "{} of {} sweep entries have both solutions",
        summary.complete_records,
        records.len()
    );
    lines.push(bundle.summary.clone());
    lines.extend(bundle.failures.iter().cloned());
    bundle.sweep = Some(SweepReport {
        records,
        summary,
        verdicts,
        derivative_check,
        rates,
        failed_q,
        table_file,
    });
    finish(bundle, out, cfg, "sweep.json", code, lines)
}

pub fn cmd_limit(cfg: &RunConfig) -> Result<CommandOutput, CliError> {
    let params = cfg.params()?;
    let controls = cfg.controls()?;
    let g = compute_g(&params, &controls)?;
    let cert = limit_certificate(&g, &params, CertificateTolerances::default().residual)?;
    let mut out = OutputSet::new(&cfg.out_dir);
    let name = format!("limit_N{}_p{}", params.dim(), params.p());
    let profile_file = cfg.wants(Format::Csv).then(|| {
        out.add(
            &format!("{name}.csv"),
            profile_csv_string(&g.profile).into_bytes(),
        )
    });

    let mut bundle = ReportBundle::new("limit", cfg);
    let mut lines = vec![format!(
        "G(0) = {:.15}, ||G||^p = {:.15}, |B| = {:.15}",
        g.profile.at_origin(),
        g.norm_p,
        params.ball_measure()
    )];
    lines.extend(certificate_lines(&cert, ""));
    let code = if cert.passed() {
        exit::OK
    } else {
        exit::CERTIFICATE
    };
    if !cert.passed() {
        bundle.failures = cert
            .failures()
            .iter()
            .map(|c| format!("failed {}", c.name))
            .collect();
    }
    bundle.summary = format!(
        "limit profile certificate {}",
        if cert.passed() { "passed" } else { "failed" }
    );
    lines.push(bundle.summary.clone());
    bundle.limit = Some(LimitReport {
        g_at_origin: g.profile.at_origin(),
        dirichlet_value: g.dirichlet_value,
        norm_p: g.norm_p,
        ball_measure: params.ball_measure(),
        certificate: cert,
        profile_file,
    });
    finish(bundle, out, cfg, &format!("{name}.json"), code, lines)
}

pub fn cmd_verify(cfg: &RunConfig, profile_path: &Path) -> Result<CommandOutput, CliError> {
    let params = cfg.params()?;
    let file = std::fs::File::open(profile_path)
        .map_err(|e| CliError::Io(format!("cannot open {}: {e}", profile_path.display())))?;
    let profile = read_profile_csv(std::io::BufReader::new(file))?;
    if !profile.is_complete() || !profile.is_uniform_unit_grid() {
        return Err(CliError::Core(plap_core::Error::InvalidProfile(
            "profile must be sampled on a uniform grid of [0, 1]".into(),
        )));
    }
    // G joins the test-function batteries on the profile's own grid.
    let controls = IntegratorControls {
        grid_intervals: profile.intervals(),
        ..cfg.controls()?
    };
    let g = compute_g(&params, &controls)?;
    let trunc = TruncationParams::default_for(&params);
    let report = energy(&profile, &params, &trunc)?;
    let label = classify_energy(&report, &params, cfg.margin_factor);
    let cert = certify(
        &profile,
        &params,
        &trunc,
        Some(&g.profile),
        &CertificateTolerances::default(),
    )?;

    let mut bundle = ReportBundle::new("verify", cfg);
    let mut lines = vec![format!(
        "{}: I = {:.12}, {:?}",
        profile_path.display(),
        report.energy,
        label
    )];
    lines.extend(certificate_lines(&cert, ""));
    let code = if cert.passed() {
        exit::OK
    } else {
        exit::CERTIFICATE
    };
    if !cert.passed() {
        bundle.failures = cert
            .failures()
            .iter()
            .map(|c| format!("failed {}: {}", c.name, c.detail))
            .collect();
    }
    bundle.summary = format!(
        "certificate {}",
        if cert.passed() { "passed" } else { "failed" }
    );
    lines.push(bundle.summary.clone());
    let stem = profile_path
        .file_stem()
        .map_or("profile".into(), |s| s.to_string_lossy().into_owned());
    bundle.verify = Some(VerifyReport {
        profile_file: profile_path.display().to_string(),
        label,
        energy: report,
        certificate: cert,
    });
    finish(
        bundle,
        OutputSet::new(&cfg.out_dir),
        cfg,
        &format!("verify_{stem}.json"),
        code,
        lines,
    )
}
