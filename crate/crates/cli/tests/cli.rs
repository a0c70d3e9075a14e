use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::{json, Value};

fn run(args: &[&str], config: &Value, dir: &Path) -> Output {
    let path = dir.join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(config).unwrap()).unwrap();
    Command::new(env!("CARGO_BIN_EXE_mildcone"))
        .args(args)
        .arg("--config")
        .arg(&path)
        .arg("--out")
        .arg(dir.join("out"))
        .arg("--quiet")
        .output()
        .unwrap()
}

fn out(dir: &Path, name: &str) -> PathBuf {
    dir.join("out").join(name)
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn example() -> Value {
    json!({ "preset": "paper-example" })
}

#[test]
fn check_reports_one_over_e() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["check"], &example(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let report = read_json(&out(dir.path(), "hypothesis_report.json"));
    let h4 = report["h4_value"].as_f64().unwrap();
    assert!((h4 - (-1.0f64).exp()).abs() <= 1e-6, "{h4}");
    assert_eq!(report["pass_h2"], json!(true));
}

#[test]
fn check_fails_on_large_delta() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "preset": "paper-example", "certificate": { "delta_rho": "10" } });
    let o = run(&["check"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report = read_json(&out(dir.path(), "hypothesis_report.json"));
    assert_eq!(report["pass_h2"], json!(false));
}

#[test]
fn check_fails_on_point_eval_against_twice_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "preset": "paper-example",
        "nonlocal": { "beta": { "kind": "point-eval", "t": 0.0 } },
        "certificate": { "eta_rho": "2*sin(x)" }
    });
    let o = run(&["check"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report = read_json(&out(dir.path(), "hypothesis_report.json"));
    assert_eq!(report["pass_h3"], json!(false));
}

#[test]
fn solve_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "preset": "paper-example", "domain": { "n": 31 }, "time": { "m": 32 } });
    let o = run(&["solve"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let cert_path = out(dir.path(), "certificate.json");
    let cert = read_json(&cert_path);
    for key in ["lambda", "rho", "residual_rel", "iterations", "converged", "history", "hypothesis_report"] {
        assert!(cert.get(key).is_some(), "missing {key}");
    }
    assert_eq!(cert["converged"], json!(true));

    let csv = std::fs::read_to_string(out(dir.path(), "trajectory.csv")).unwrap();
    assert!(csv.starts_with("t,x,value\n"));
    assert_eq!(csv.lines().count(), 1 + 33 * 31);

    let cert_arg = cert_path.to_str().unwrap().to_owned();
    let o = run(&["verify", "--certificate", &cert_arg], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let mut tampered = cert.clone();
    tampered["lambda"] = json!(cert["lambda"].as_f64().unwrap() * 2.0);
    let bad = dir.path().join("tampered.json");
    std::fs::write(&bad, tampered.to_string()).unwrap();
    let o = run(&["verify", "--certificate", bad.to_str().unwrap()], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_without_mass_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "domain": { "L": "pi", "n": 15 },
        "time": { "m": 16 },
        "semigroup": { "kind": "spectral-heat" },
        "nonlinearity": { "preset": "zero" },
        "nonlocal": { "form": "multipoint", "times": [], "coeffs": [] }
    });
    let o = Command::new(env!("CARGO_BIN_EXE_mildcone"))
        .arg("solve")
        .arg("--config")
        .arg({
            let p = dir.path().join("zero.json");
            std::fs::write(&p, cfg.to_string()).unwrap();
            p
        })
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no mass"));
}

#[test]
fn sweep_writes_summary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({ "preset": "paper-example", "solver": { "rho_list": [0.1, 0.5, 1.0], "hypothesis_samples": 16 } });
    let o = run(&["sweep"], &cfg, dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary = std::fs::read_to_string(out(dir.path(), "sweep_summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "rho,lambda,residual_rel,iterations,converged");
    assert_eq!(lines.len(), 4);
    assert!(lines[1..].iter().all(|l| l.ends_with(",true")));
    for k in 0..3 {
        assert!(out(dir.path(), &format!("certificate_{k:03}.json")).exists());
    }
}

#[test]
fn oracle_compare_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["oracle-compare", "--seed", "5"], &example(), dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out(dir.path(), "oracle_compare.csv")).unwrap();
    assert!(csv.starts_with("comparison,parameter,delta,tolerance\n"));
    assert_eq!(csv.lines().filter(|l| l.starts_with("semigroup,")).count(), 3);
}

#[test]
fn configuration_errors_exit_two() {
    let cases = [
        json!({ "preset": "paper-example", "domain": { "n": 63, "extra": 1 } }),
        json!({ "preset": "paper-example", "nonlocal": { "sensor_x": 1.0 } }),
        json!({
            "preset": "paper-example",
            "nonlocal": { "form": "multipoint", "times": [0.5], "coeffs": [-1.0] },
            "certificate": { "eta_rho": "zero" }
        }),
        json!({ "preset": "paper-example", "nonlinearity": { "expression": "u -" } }),
        json!({ "preset": "unknown" }),
    ];
    for cfg in cases {
        let dir = tempfile::tempdir().unwrap();
        let o = run(&["check"], &cfg, dir.path());
        assert_eq!(o.status.code(), Some(2), "{cfg}");
        assert!(!o.stderr.is_empty());
    }
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_mildcone"))
        .args(["check", "--config"])
        .arg(dir.path().join("missing.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn seeds_make_runs_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = json!({
        "preset": "paper-example",
        "domain": { "n": 15 },
        "time": { "m": 16 },
        "solver": { "initial_guess": "random-cone", "hypothesis_samples": 8 }
    });
    let a = run(&["solve", "--seed", "3"], &cfg, dir.path());
    assert_eq!(a.status.code(), Some(0));
    let first = std::fs::read_to_string(out(dir.path(), "certificate.json")).unwrap();
    let b = run(&["solve", "--seed", "3"], &cfg, dir.path());
    assert_eq!(b.status.code(), Some(0));
    assert_eq!(first, std::fs::read_to_string(out(dir.path(), "certificate.json")).unwrap());
}
