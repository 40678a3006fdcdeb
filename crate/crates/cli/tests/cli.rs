//! End-to-end checks of the command-line surface: subcommands, file
//! round-trips, and the documented exit codes (0 success/pass, 1 certificate
//! fail, 2 invalid input, 3 infeasible).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_stratum"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn write_json_matrix(dir: &Path, name: &str, rows: usize, cols: usize, data: &[f64]) -> PathBuf {
    let p = dir.join(name);
    let body = serde_json::json!({ "rows": rows, "cols": cols, "data": data });
    fs::write(&p, serde_json::to_string(&body).unwrap()).unwrap();
    p
}

#[test]
fn stratum_dim_prints_the_formula_value() {
    let out = run(&["stratum-dim", "2", "2", "1"]);
    assert_eq!(code(&out), 0);
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), "3");

    // out-of-range rank is invalid input
    let out = run(&["stratum-dim", "2", "2", "5"]);
    assert_eq!(code(&out), 2);
}

#[test]
fn gen_connect_certify_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let path = dir.path().join("path.json");
    let report = dir.path().join("cert.json");

    let out = run(&[
        "gen",
        "--dims",
        "3,3",
        "--rank",
        "1",
        "--seed",
        "5",
        "--out",
        a.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "gen",
        "--dims",
        "3,3",
        "--rank",
        "1",
        "--seed",
        "6",
        "--out",
        b.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);

    let out = run(&[
        "connect",
        "--in",
        a.to_str().unwrap(),
        "--in",
        b.to_str().unwrap(),
        "--stratum",
        "rank:1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));

    let out = run(&[
        "certify",
        "--path",
        path.to_str().unwrap(),
        "--stratum",
        "rank:1",
        "--samples",
        "100",
        "--report",
        report.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("pass"));
    let cert: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(cert["verdict"]["status"], "pass");
    assert_eq!(cert["samples_per_segment"], 100);

    // certifying the same path against the wrong stratum fails with exit 1
    let out = run(&[
        "certify",
        "--path",
        path.to_str().unwrap(),
        "--stratum",
        "rank:2",
    ]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stdout).contains("fail"));
}

#[test]
fn connect_reports_disconnected_components_with_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_json_matrix(dir.path(), "i.json", 2, 2, &[1.0, 0.0, 0.0, 1.0]);
    let b = write_json_matrix(dir.path(), "r.json", 2, 2, &[-1.0, 0.0, 0.0, 1.0]);
    let path = dir.path().join("p.json");
    let out = run(&[
        "connect",
        "--in",
        a.to_str().unwrap(),
        "--in",
        b.to_str().unwrap(),
        "--stratum",
        "rank:2",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
    assert!(!path.exists());
}

#[test]
fn csv_matrices_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    fs::write(&a, "1.0, 0.0\n0.0, 0.0\n").unwrap();
    let b = write_json_matrix(dir.path(), "b.json", 2, 2, &[0.0, 0.0, 0.0, 1.0]);
    let path = dir.path().join("p.json");
    let out = run(&[
        "connect",
        "--in",
        a.to_str().unwrap(),
        "--in",
        b.to_str().unwrap(),
        "--stratum",
        "rank:1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn fredholm_stratum_argument_is_supported() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_json_matrix(dir.path(), "a.json", 2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let b = write_json_matrix(dir.path(), "b.json", 2, 2, &[0.0, 1.0, 0.0, 0.0]);
    let path = dir.path().join("p.json");
    let out = run(&[
        "connect",
        "--in",
        a.to_str().unwrap(),
        "--in",
        b.to_str().unwrap(),
        "--stratum",
        "fredholm:1,1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let out = run(&[
        "certify",
        "--path",
        path.to_str().unwrap(),
        "--stratum",
        "fredholm:1,1",
    ]);
    assert_eq!(code(&out), 0);
}

#[test]
fn tangent_dim_and_stratify_report_json() {
    let dir = tempfile::tempdir().unwrap();
    let x = write_json_matrix(dir.path(), "x.json", 2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let out = run(&["tangent-dim", "--in", x.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["tangent_dim"], 3);
    assert_eq!(report["base_point_rank"], 1);

    let out = run(&["stratify", "2", "2"]);
    assert_eq!(code(&out), 0);
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let dims: Vec<u64> = report["entries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|e| e["dim"].as_u64().unwrap())
        .collect();
    assert_eq!(dims, vec![0, 3, 4]);
}

#[test]
fn common_complement_prints_a_basis() {
    let dir = tempfile::tempdir().unwrap();
    let e1 = write_json_matrix(dir.path(), "e1.json", 2, 1, &[1.0, 0.0]);
    let e2 = write_json_matrix(dir.path(), "e2.json", 2, 1, &[0.0, 1.0]);
    let out = run(&[
        "common-complement",
        "--in",
        e1.to_str().unwrap(),
        "--in",
        e2.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0);
    let basis: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(basis["rows"], 2);
    assert_eq!(basis["cols"], 1);
    // the diagonal direction, up to sign
    let d = basis["data"].as_array().unwrap();
    let (x, y) = (d[0].as_f64().unwrap(), d[1].as_f64().unwrap());
    assert!((x.abs() - 1.0 / 2.0_f64.sqrt()).abs() < 1e-12);
    assert!((x - y).abs() < 1e-12);
}

#[test]
fn counterexample_reproduces_the_defect() {
    let out = run(&["counterexample-thm22"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("fails as expected"));
}

#[test]
fn env_seed_overrides_the_flag() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let ok = bin()
        .args([
            "gen",
            "--dims",
            "2,2",
            "--rank",
            "1",
            "--seed",
            "1",
            "--out",
            a.to_str().unwrap(),
        ])
        .env("STRATUM_PATH_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(code(&ok), 0);
    let ok = bin()
        .args([
            "gen",
            "--dims",
            "2,2",
            "--rank",
            "1",
            "--seed",
            "2",
            "--out",
            b.to_str().unwrap(),
        ])
        .env("STRATUM_PATH_SEED", "42")
        .output()
        .unwrap();
    assert_eq!(code(&ok), 0);
    assert_eq!(
        fs::read_to_string(a).unwrap(),
        fs::read_to_string(b).unwrap()
    );
}

#[test]
fn malformed_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let a = write_json_matrix(dir.path(), "a.json", 2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let out = run(&[
        "connect",
        "--in",
        a.to_str().unwrap(),
        "--in",
        a.to_str().unwrap(),
        "--stratum",
        "rank:nope",
        "--out",
        dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);

    let missing = dir.path().join("missing.json");
    let out = run(&["tangent-dim", "--in", missing.to_str().unwrap()]);
    assert_eq!(code(&out), 2);

    // declared stratum disagreeing with the operators is invalid input
    let out = run(&[
        "connect",
        "--in",
        a.to_str().unwrap(),
        "--in",
        a.to_str().unwrap(),
        "--stratum",
        "rank:2",
        "--out",
        dir.path().join("p.json").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
}
