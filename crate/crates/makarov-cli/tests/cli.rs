//! End-to-end tests of the `makarov` binary: output formats, determinism,
//! and the exit-code contract (0 ok, 1 validation, 2 internal consistency).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_makarov"))
}

fn write_spec(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

struct Fixtures {
    _dir: tempfile::TempDir,
    b05: PathBuf,
    b04: PathBuf,
    uniform: PathBuf,
    treated: PathBuf,
    control: PathBuf,
    corrupted: PathBuf,
}

fn fixtures() -> Fixtures {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let b05 = write_spec(
        p,
        "b05.json",
        r#"{"type":"discrete","atoms":[{"x":0,"p":0.5},{"x":1,"p":0.5}]}"#,
    );
    let b04 = write_spec(
        p,
        "b04.json",
        r#"{"type":"discrete","atoms":[{"x":0,"p":0.6},{"x":1,"p":0.4}]}"#,
    );
    let uniform = write_spec(p, "uniform.json", r#"{"type":"uniform","a":0,"b":1}"#);
    let treated = write_spec(
        p,
        "treated.json",
        r#"{"type":"discrete","atoms":[{"x":0,"p":0.7},{"x":1,"p":0.1},{"x":2,"p":0.2}]}"#,
    );
    let control = write_spec(
        p,
        "control.json",
        r#"{"type":"discrete","atoms":[{"x":0,"p":0.3},{"x":1,"p":0.2},{"x":2,"p":0.5}]}"#,
    );
    let corrupted = write_spec(
        p,
        "corrupted.json",
        r#"{"type":"discrete","atoms":[{"x":0,"p":0.5},{"x":1,"p":0.4}]}"#,
    );
    Fixtures {
        _dir: dir,
        b05,
        b04,
        uniform,
        treated,
        control,
        corrupted,
    }
}

fn run_ok(cmd: &mut Command) -> Output {
    let out = cmd.output().unwrap();
    assert!(
        out.status.success(),
        "command failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn csv_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .skip(1)
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect()
}

fn find_row(rows: &[Vec<String>], z: f64) -> &Vec<String> {
    rows.iter()
        .find(|r| (r[0].parse::<f64>().unwrap() - z).abs() < 1e-12)
        .unwrap_or_else(|| panic!("no row at {z}"))
}

#[test]
fn sum_two_coin_row() {
    let fx = fixtures();
    let out = run_ok(bin().args([
        "sum",
        "--f",
        fx.b05.to_str().unwrap(),
        "--g",
        fx.b04.to_str().unwrap(),
        "--points",
        "0,1,2",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with(
        "z,lower_lt,lower_leq,upper_lt,upper_leq,lower_leq_achievable,upper_lt_achievable\n"
    ));
    let rows = csv_rows(&text);
    let row = find_row(&rows, 1.0);
    assert!((row[1].parse::<f64>().unwrap() - 0.1).abs() < 1e-12);
    assert!((row[2].parse::<f64>().unwrap() - 0.6).abs() < 1e-12);
    assert_eq!(row[5], "true");
    assert_eq!(row[6], "true");
    // Rows are sorted by z.
    let zs: Vec<f64> = rows.iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(zs.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn sum_uniform_unattained_at_one() {
    let fx = fixtures();
    let out = run_ok(bin().args([
        "sum",
        "--f",
        fx.uniform.to_str().unwrap(),
        "--g",
        fx.uniform.to_str().unwrap(),
        "--points",
        "1",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows = csv_rows(&text);
    let row = find_row(&rows, 1.0);
    assert_eq!(row[5], "false");
    assert_eq!(row[6], "false");
}

#[test]
fn output_is_deterministic() {
    let fx = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    for out in [&out_a, &out_b] {
        run_ok(bin().args([
            "sum",
            "--f",
            fx.b05.to_str().unwrap(),
            "--g",
            fx.uniform.to_str().unwrap(),
            "--grid",
            "0:2:0.25",
            "--out",
            out.to_str().unwrap(),
        ]));
    }
    assert_eq!(fs::read(&out_a).unwrap(), fs::read(&out_b).unwrap());
}

#[test]
fn corrupted_spec_exits_one() {
    let fx = fixtures();
    let out = bin()
        .args([
            "sum",
            "--f",
            fx.corrupted.to_str().unwrap(),
            "--g",
            fx.b04.to_str().unwrap(),
            "--points",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("atoms"), "stderr should name the field: {err}");
}

#[test]
fn consistency_knob_exits_two() {
    let fx = fixtures();
    let out = bin()
        .args([
            "sum",
            "--f",
            fx.uniform.to_str().unwrap(),
            "--g",
            fx.uniform.to_str().unwrap(),
            "--points",
            "0.5",
            "--consistency-eps",
            "-1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("consistency"));
}

#[test]
fn ite_table_gap() {
    let fx = fixtures();
    let out = run_ok(bin().args([
        "ite",
        "--f",
        fx.treated.to_str().unwrap(),
        "--g",
        fx.control.to_str().unwrap(),
        "--points",
        "-2,-1,0,1,2",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("delta,sharp_lower,sharp_upper,historical_lower,gap\n"));
    let rows = csv_rows(&text);
    let row = find_row(&rows, -2.0);
    assert!((row[1].parse::<f64>().unwrap() - 0.2).abs() < 1e-12);
    assert!((row[2].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
    assert_eq!(row[3].parse::<f64>().unwrap(), 0.0);
    assert!((row[4].parse::<f64>().unwrap() - 0.2).abs() < 1e-12);
}

#[test]
fn sample_countermonotone_and_deterministic() {
    let fx = fixtures();
    let args = [
        "sample",
        "--f",
        fx.uniform.to_str().unwrap(),
        "--g",
        fx.uniform.to_str().unwrap(),
        "--z",
        "1",
        "--kind",
        "lower",
        "--samples",
        "200",
        "--seed",
        "5",
    ];
    let out = run_ok(bin().args(args));
    let text = String::from_utf8(out.stdout.clone()).unwrap();
    assert!(text.starts_with("x,y\n"));
    let mut n = 0;
    for line in text.lines().skip(1) {
        let mut parts = line.split(',');
        let x: f64 = parts.next().unwrap().parse().unwrap();
        let y: f64 = parts.next().unwrap().parse().unwrap();
        assert_eq!(x + y, 1.0);
        n += 1;
    }
    assert_eq!(n, 200);
    let again = run_ok(bin().args(args));
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn sample_difference_coupling_frequency() {
    let fx = fixtures();
    let out = run_ok(bin().args([
        "sample",
        "--f",
        fx.treated.to_str().unwrap(),
        "--g",
        fx.control.to_str().unwrap(),
        "--z",
        "-2",
        "--kind",
        "lower",
        "--op",
        "diff",
        "--samples",
        "2000",
        "--seed",
        "9",
    ]));
    let text = String::from_utf8(out.stdout).unwrap();
    let mut hits = 0usize;
    let mut n = 0usize;
    for line in text.lines().skip(1) {
        let mut parts = line.split(',');
        let x: f64 = parts.next().unwrap().parse().unwrap();
        let y: f64 = parts.next().unwrap().parse().unwrap();
        if x - y <= -2.0 {
            hits += 1;
        }
        n += 1;
    }
    assert_eq!(n, 2000);
    // The lower coupling at delta = -2 attains the sharp bound 0.2.
    let p_hat = hits as f64 / n as f64;
    assert!((p_hat - 0.2).abs() < 0.04, "p_hat = {p_hat}");
}

#[test]
fn oracle_optimum_and_coupling() {
    let fx = fixtures();
    let dir = tempfile::tempdir().unwrap();
    let coupling = dir.path().join("coupling.csv");
    let out = run_ok(bin().args([
        "oracle",
        "--f",
        fx.b05.to_str().unwrap(),
        "--g",
        fx.b04.to_str().unwrap(),
        "--z",
        "1",
        "--rel",
        "leq",
        "--sense",
        "min",
        "--coupling-out",
        coupling.to_str().unwrap(),
    ]));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((json["value"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert!(json["marginal_error"].as_f64().unwrap() <= 1e-9);
    let matrix = fs::read_to_string(&coupling).unwrap();
    assert_eq!(matrix.lines().count(), 2);

    let out = run_ok(bin().args([
        "oracle",
        "--f",
        fx.b05.to_str().unwrap(),
        "--g",
        fx.b04.to_str().unwrap(),
        "--z",
        "1",
        "--rel",
        "lt",
        "--sense",
        "min",
    ]));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((json["value"].as_f64().unwrap() - 0.1).abs() < 1e-12);
}

#[test]
fn oracle_rejects_continuous_spec() {
    let fx = fixtures();
    let out = bin()
        .args([
            "oracle",
            "--f",
            fx.uniform.to_str().unwrap(),
            "--g",
            fx.b04.to_str().unwrap(),
            "--z",
            "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("discrete"));
}

#[test]
fn verify_random_and_pair() {
    let fx = fixtures();
    let out = run_ok(bin().args(["verify", "--seed", "1", "--instances", "20"]));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["all_pass"], serde_json::Value::Bool(true));
    assert!(json["max_deviation"].as_f64().unwrap() < 1e-7);

    let out = run_ok(bin().args([
        "verify",
        "--f",
        fx.treated.to_str().unwrap(),
        "--g",
        fx.control.to_str().unwrap(),
    ]));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(json["all_pass"], serde_json::Value::Bool(true));
    let names: Vec<&str> = json["checks"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"closed-form-vs-lp"));
    assert!(names.contains(&"difference-upper-coincidence"));
}

#[test]
fn diff_matches_ite_bounds() {
    let fx = fixtures();
    let out = run_ok(bin().args([
        "diff",
        "--f",
        fx.treated.to_str().unwrap(),
        "--g",
        fx.control.to_str().unwrap(),
        "--points",
        "-2",
    ]));
    let rows = csv_rows(&String::from_utf8(out.stdout).unwrap());
    let row = find_row(&rows, -2.0);
    assert!((row[2].parse::<f64>().unwrap() - 0.2).abs() < 1e-12);
    assert!((row[4].parse::<f64>().unwrap() - 0.5).abs() < 1e-12);
}

#[test]
fn debug_scan_prints_candidate_table() {
    let fx = fixtures();
    let out = run_ok(bin().args([
        "ite",
        "--f",
        fx.treated.to_str().unwrap(),
        "--g",
        fx.control.to_str().unwrap(),
        "--points",
        "-2",
        "--debug-scan",
    ]));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("# scan at z ="));
    assert!(err.contains("F(x)+G(y)-1"));
}

#[test]
fn json_format_round_trips() {
    let fx = fixtures();
    let out = run_ok(bin().args([
        "sum",
        "--f",
        fx.b05.to_str().unwrap(),
        "--g",
        fx.b04.to_str().unwrap(),
        "--points",
        "1",
        "--format",
        "json",
    ]));
    let json: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    let reports = json.as_array().unwrap();
    assert!(!reports.is_empty());
    let row = reports
        .iter()
        .find(|r| (r["z"].as_f64().unwrap() - 1.0).abs() < 1e-12)
        .unwrap();
    assert!((row["lower_leq"].as_f64().unwrap() - 0.6).abs() < 1e-12);
    assert_eq!(row["lower_leq_achievable"], serde_json::Value::Bool(true));
}
