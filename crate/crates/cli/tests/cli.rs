use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use plap_core::io::read_profile_csv;
use serde_json::Value;

fn plap(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plap"))
        .args(args)
        .current_dir(dir)
        .env_remove("PLAP_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn json(path: PathBuf) -> Value {
    serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap()
}

fn verdicts(report: &Value, key: &str) -> Vec<(String, bool)> {
    report
        .pointer(key)
        .unwrap()
        .as_array()
        .unwrap()
        .iter()
        .map(|c| {
            (
                c["name"].as_str().unwrap().to_string(),
                c["passed"].as_bool().unwrap(),
            )
        })
        .collect()
}

#[test]
fn solve_then_verify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let out = plap(dir.path(), &["solve", "--q", "40", "--out-dir", "out"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let raw = std::fs::read_to_string(dir.path().join("out/solve_N1_p1.5_q40.json")).unwrap();
    let report: Value = serde_json::from_str(&raw).unwrap();
    let sols = report["solutions"].as_array().unwrap();
    assert_eq!(sols.iter().filter(|s| s["accepted"] == true).count(), 2);

    // Top-level key order is fixed.
    let order = [
        "metadata",
        "summary",
        "solutions",
        "limit",
        "sweep",
        "verify",
        "failures",
    ];
    let pos: Vec<usize> = order
        .iter()
        .map(|k| raw.find(&format!("\n  \"{k}\":")).unwrap())
        .collect();
    assert!(pos.windows(2).all(|w| w[0] < w[1]));

    for (k, sol) in sols.iter().enumerate() {
        let csv = dir
            .path()
            .join(format!("out/solve_N1_p1.5_q40_root{k}.csv"));
        let text = std::fs::read_to_string(&csv).unwrap();
        assert!(text.starts_with("r,u,du\n"));
        let profile = read_profile_csv(text.as_bytes()).unwrap();
        assert_eq!(profile.intervals(), 2048);
        let v = plap(
            dir.path(),
            &[
                "verify",
                csv.to_str().unwrap(),
                "--q",
                "40",
                "--out-dir",
                "out",
            ],
        );
        assert_eq!(v.status.code(), Some(0));
        let vr = json(
            dir.path()
                .join(format!("out/verify_solve_N1_p1.5_q40_root{k}.json")),
        );
        let original = sol["certificate"]["checks"].clone();
        let again = vr["verify"]["certificate"]["checks"].clone();
        assert_eq!(original, again, "certificate must reproduce bit-for-bit");
        assert_eq!(sol["label"], vr["verify"]["label"]);
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let out = plap(dir.path(), &["solve", "--p", "1.5", "--q", "1.4"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("q > p"));

    std::fs::write(dir.path().join("bad.toml"), "dim = 1\nq = [\n").unwrap();
    assert_eq!(
        plap(dir.path(), &["limit", "--config", "bad.toml"])
            .status
            .code(),
        Some(2)
    );
    std::fs::write(dir.path().join("unknown.toml"), "dim = 1\nflavour = 2\n").unwrap();
    let out = plap(dir.path(), &["solve", "--config", "unknown.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("flavour"));
}

#[test]
fn flags_override_config_and_env_sets_out_dir() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("run.toml"),
        "p = 1.5\ndim = 2\nformats = [\"csv\"]\nout_dir = \"from_config\"\n",
    )
    .unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_plap"))
        .args(["limit", "--config", "run.toml", "--dim", "1"])
        .current_dir(dir.path())
        .env("PLAP_OUT_DIR", "from_env")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("from_env/limit_N1_p1.5.csv").exists());
    assert!(!dir.path().join("from_env/limit_N1_p1.5.json").exists());
    assert!(!dir.path().join("from_config").exists());
}

#[test]
fn empty_root_list_is_not_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = plap(
        dir.path(),
        &[
            "solve",
            "--q",
            "2",
            "--scan-points",
            "64",
            "--grid-intervals",
            "256",
        ],
    );
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("no non-constant solutions found"));
}

#[test]
fn limit_matches_cosh_and_minimizes_norm() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        plap(dir.path(), &["limit", "--p", "2", "--out-dir", "."])
            .status
            .code(),
        Some(0)
    );
    let text = std::fs::read_to_string(dir.path().join("limit_N1_p2.csv")).unwrap();
    let g = read_profile_csv(text.as_bytes()).unwrap();
    for (r, v) in g.nodes().iter().zip(g.values()) {
        assert!((v - r.cosh() / 1f64.cosh()).abs() < 1e-6);
    }

    assert_eq!(
        plap(
            dir.path(),
            &["limit", "--p", "1.5", "--dim", "2", "--out-dir", "."]
        )
        .status
        .code(),
        Some(0)
    );
    let report = json(dir.path().join("limit_N2_p1.5.json"));
    assert!(report["limit"]["norm_p"].as_f64().unwrap() < std::f64::consts::PI);
    assert!(verdicts(&report, "/limit/certificate/checks")
        .iter()
        .all(|(_, ok)| *ok));
}

#[test]
fn verify_names_the_broken_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let n = 512;
    let one: String = (0..=n)
        .map(|i| format!("{:.16e},1.0,0.0\n", i as f64 / n as f64))
        .collect();
    std::fs::write(dir.path().join("one.csv"), format!("r,u,du\n{one}")).unwrap();
    let out = plap(
        dir.path(),
        &["verify", "one.csv", "--q", "40", "--out-dir", "."],
    );
    assert_eq!(out.status.code(), Some(0));
    let report = json(dir.path().join("verify_one.json"));
    assert_eq!(report["verify"]["label"], "Ambiguous");

    let dented: String = (0..=n)
        .map(|i| {
            format!(
                "{:.16e},{},0.0\n",
                i as f64 / n as f64,
                if i == 200 { 0.99 } else { 1.0 }
            )
        })
        .collect();
    std::fs::write(dir.path().join("dented.csv"), format!("r,u,du\n{dented}")).unwrap();
    let out = plap(
        dir.path(),
        &["verify", "dented.csv", "--q", "40", "--out-dir", "."],
    );
    assert_eq!(out.status.code(), Some(3));
    let failed: Vec<String> = verdicts(
        &json(dir.path().join("verify_dented.json")),
        "/verify/certificate/checks",
    )
    .into_iter()
    .filter(|(_, ok)| !ok)
    .map(|(n, _)| n)
    .collect();
    assert!(
        failed.iter().any(|n| n == "cone" || n == "weak_residual"),
        "{failed:?}"
    );
}

#[test]
fn sweep_exit_codes_and_failure_log() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        plap(dir.path(), &["sweep", "--q-list", "40", "--out-dir", "."])
            .status
            .code(),
        Some(4)
    );

    let out = plap(
        dir.path(),
        &["sweep", "--q-list", "20,40,80", "--out-dir", "."],
    );
    assert_eq!(out.status.code(), Some(0));
    let report = json(dir.path().join("sweep.json"));
    assert_eq!(report["sweep"]["failed_q"], serde_json::json!([20.0]));
    assert!(report["failures"][0]
        .as_str()
        .unwrap()
        .starts_with("q = 20:"));
    let table = std::fs::read_to_string(dir.path().join("sweep.csv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    assert!(table.lines().nth(1).unwrap().contains("NA"));

    assert_eq!(
        plap(
            dir.path(),
            &["sweep", "--q-list", "20,30", "--out-dir", "."]
        )
        .status
        .code(),
        Some(4)
    );
}
