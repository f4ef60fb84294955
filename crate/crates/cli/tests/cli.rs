use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const H2: [&str; 12] = ["--family", "holling2", "--r", "2", "--k", "3", "--a", "1", "--m", "1.5", "--c", "0.5"];
const H4: [&str; 12] = ["--family", "holling4", "--r", "4", "--k", "3", "--a", "0.75", "--m", "2", "--c", "0.1"];
const IVLEV3: [&str; 12] = ["--family", "ivlev", "--r", "1", "--k", "3", "--a", "1", "--m", "1", "--c", "0.5"];
const IVLEV15: [&str; 12] = ["--family", "ivlev", "--r", "1", "--k", "3", "--a", "0.5", "--m", "1", "--c", "0.5"];

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_relaxosc"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn run_with(cmd: &str, model: &[&str], extra: &[&str]) -> Output {
    let mut args = vec![cmd];
    args.extend_from_slice(model);
    args.extend_from_slice(extra);
    run(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn data_rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect()
}

#[test]
fn analyze_holling2_one_oscillation() {
    let v = json(&run_with("analyze", &H2, &[]));
    assert_eq!(v["result"]["verdict"]["n-oscillations"], 1);
    assert_eq!(v["result"]["roots"][0]["stability"], "stable");
    assert_eq!(v["header"]["model"]["family"], "holling2");
    assert_eq!(v["header"]["tool"], "relaxosc");
}

#[test]
fn analyze_ivlev_below_two_is_globally_stable() {
    let v = json(&run_with("analyze", &IVLEV15, &[]));
    assert_eq!(v["result"]["verdict"], "globally-stable-equilibrium");
}

#[test]
fn missing_flag_exits_one_with_usage() {
    let o = run(&["analyze", "--family", "ivlev", "--a", "0.5", "--k", "3"]);
    assert_eq!(o.status.code(), Some(1));
    let e = stderr(&o);
    assert!(e.contains("missing required key `r`"), "{e}");
    assert!(e.contains("Usage: relaxosc analyze"), "{e}");
}

#[test]
fn unknown_argument_exits_one() {
    assert_eq!(run_with("analyze", &H2, &["--bogus"]).status.code(), Some(1));
    assert_eq!(run(&[]).status.code(), Some(1));
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn config_errors_name_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.conf");
    std::fs::write(&path, "family = holling2\nr = 2\nslope = 1\n").unwrap();
    let o = run(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 3"), "{}", stderr(&o));

    std::fs::write(&path, "family = holling2\nr = 2e0\n").unwrap();
    let o = run(&["analyze", "--config", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("line 2"));
}

#[test]
fn flags_override_config_and_header_echoes_result() {
    let path = configs_dir().join("holling2.conf");
    let o = run(&["analyze", "--config", path.to_str().unwrap(), "--a", "3.5", "--k", "3"]);
    let v = json(&o);
    assert_eq!(v["header"]["model"]["a"], 3.5);
    assert_eq!(v["header"]["model"]["r"], 2.0);
    // a > K: no oscillation
    assert_eq!(v["result"]["verdict"], "globally-stable-equilibrium");
}

#[test]
fn analyze_writes_gamma_polylines() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_with("analyze", &H4, &["--gamma-dir", dir.path().to_str().unwrap()]);
    assert!(o.status.success());
    for i in 0..2 {
        let text = std::fs::read_to_string(dir.path().join(format!("gamma_{i}.csv"))).unwrap();
        assert!(text.starts_with("# relaxosc "));
        assert!(text.contains("\ny,x\n"));
        let rows = data_rows(&text);
        // the loop closes on the axis
        assert_eq!(rows.first().unwrap()[1], 0.0);
        assert_eq!(rows.last().unwrap()[1], 0.0);
        assert_eq!(rows.first().unwrap()[0], rows.last().unwrap()[0]);
    }
}

#[test]
fn chi_scan_sign_changes_match_analyze() {
    for model in [&H2, &H4, &IVLEV3] {
        let roots = json(&run_with("analyze", model, &[]))["result"]["roots"].as_array().unwrap().len();
        let o = run_with("chi-scan", model, &[]);
        assert!(o.status.success());
        let rows = data_rows(&stdout(&o));
        assert_eq!(rows.len(), 200);
        let changes = rows.windows(2).filter(|w| (w[0][1] > 0.0) != (w[1][1] > 0.0)).count();
        assert_eq!(changes, roots);
    }
}

#[test]
fn chi_scan_rejects_empty_range() {
    let o = run_with("chi-scan", &H2, &["--from", "2", "--to", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run_with("chi-scan", &H2, &["--from", "2", "--to", "2"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn chi_scan_notes_monotone_shape() {
    // κ = a K² = 0.75 · 1.8² = 2.43 < 3
    let o = run(&[
        "chi-scan", "--family", "holling4", "--r", "4", "--k", "1.8", "--a", "0.75", "--m", "2", "--c", "0.1",
    ]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("# note: monotone isocline"), "{}", stdout(&o));
}

#[test]
fn simulate_rejects_zero_epsilon() {
    let o = run_with("simulate", &H2, &["--epsilon", "0"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("analyze"));
}

#[test]
fn simulate_from_equilibrium_is_flat() {
    // Holling II: c m x/(a + x) = ε  ⇒  x* = ε a / (c m - ε)
    let eps = 0.1;
    let x_star: f64 = eps / (0.75 - eps);
    let y_star = 2.0 * (1.0 - x_star / 3.0) * (1.0 + x_star) / 1.5;
    let (xs, ys) = (x_star.to_string(), y_star.to_string());
    let o = run_with("simulate", &H2, &["--epsilon", "0.1", "--x0", &xs, "--y0", &ys, "--t-max", "50"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(text.contains("\nt,x,y,u\n"));
    for row in data_rows(&text) {
        assert!((row[1] - x_star).abs() < 1e-8 * x_star.max(1.0));
        assert!((row[2] - y_star).abs() < 1e-8);
    }
}

#[test]
fn simulate_writes_requested_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("traj.csv");
    let o = run_with("simulate", &H2, &["--epsilon", "0.1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("# epsilon = 0.1\n"));
    assert!(data_rows(&text).len() > 10);
}

#[test]
fn cycles_counts() {
    let v = json(&run_with("cycles", &H2, &["--epsilon", "0.01"]));
    let cycles = v["result"]["cycles"].as_array().unwrap();
    assert_eq!(cycles.len(), 1);
    assert_eq!(cycles[0]["stability"], "stable");

    let v = json(&run_with("cycles", &H4, &["--epsilon", "0.01"]));
    let labels: Vec<&str> =
        v["result"]["cycles"].as_array().unwrap().iter().map(|c| c["stability"].as_str().unwrap()).collect();
    assert_eq!(labels, ["unstable", "stable"]);

    let v = json(&run_with("cycles", &IVLEV15, &["--epsilon", "0.01"]));
    assert!(v["result"]["cycles"].as_array().unwrap().is_empty());
}

#[test]
fn threshold_is_above_four_and_deterministic() {
    let a = run(&["threshold-k4"]);
    let b = run(&["threshold-k4"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let coarse = json(&a)["result"]["kappa_star"].as_f64().unwrap();
    let fine = json(&run(&["threshold-k4", "--tol", "1e-12"]))["result"]["kappa_star"].as_f64().unwrap();
    assert!(coarse > 4.0);
    assert!((coarse - fine).abs() <= 1e-10);
    let scaled = json(&run(&["threshold-k4", "--tol", "1e-12", "--r", "3", "--m", "0.5"]))["result"]["kappa_star"]
        .as_f64()
        .unwrap();
    assert!((scaled - fine).abs() <= 1e-10);
}

fn sweep_k(threads: &str) -> Output {
    bin()
        .env("RELAXOSC_THREADS", threads)
        .args([
            "sweep", "--family", "holling4", "--r", "4", "--k", "3", "--a", "0.75", "--m", "2", "--c", "0.0002",
            "--param", "k", "--from", "2.4", "--to", "2.5", "--steps", "11",
        ])
        .output()
        .unwrap()
}

#[test]
fn sweep_verdict_flips_at_kappa_star() {
    let ks = json(&run(&["threshold-k4", "--tol", "1e-12"]))["result"]["kappa_star"].as_f64().unwrap();
    let o = sweep_k("4");
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 11);
    let flips: Vec<usize> = (1..rows.len()).filter(|&i| rows[i][4] != rows[i - 1][4]).collect();
    assert_eq!(flips.len(), 1, "{text}");
    let i = flips[0];
    let lo: f64 = rows[i - 1][2].parse().unwrap();
    let hi: f64 = rows[i][2].parse().unwrap();
    assert!(lo < ks && ks <= hi, "flip between κ = {lo} and {hi}, κ* = {ks}");
    assert_eq!(rows[i - 1][4], "GloballyStableEquilibrium");
    assert_eq!(rows[i][4], "NOscillations(2)");
}

#[test]
fn sweep_serial_and_parallel_identical() {
    let a = sweep_k("1");
    let b = sweep_k("4");
    assert!(a.status.success() && b.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn sweep_rejects_empty_grid() {
    let o = run_with("sweep", &H2, &["--param", "k", "--from", "2", "--to", "3", "--steps", "0"]);
    assert_eq!(o.status.code(), Some(1));
    let o = bin().env("RELAXOSC_THREADS", "zero").args(["threshold-k4"]).output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn sweep_with_cycles() {
    let o = run_with("sweep", &H2, &["--param", "a", "--from", "1", "--to", "3.5", "--steps", "2", "--epsilon", "0.01"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).collect();
    assert!(rows[0].ends_with(",n_cycles,cycle_x_sections,cycle_stabilities"));
    assert!(rows[1].contains(",1,2.43"), "{}", rows[1]);
    assert!(rows[1].ends_with(",stable"));
    assert!(rows[2].contains(",GloballyStableEquilibrium,0,"));
}

#[test]
fn verify_passes_on_shipped_configs() {
    let mut n = 0;
    for entry in std::fs::read_dir(configs_dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("conf") {
            continue;
        }
        let o = run(&["verify", "--config", path.to_str().unwrap()]);
        assert!(o.status.success(), "{}: {}{}", path.display(), stdout(&o), stderr(&o));
        assert!(stdout(&o).contains(", 0 failed"));
        n += 1;
    }
    assert!(n >= 7);
}

#[test]
fn verify_injected_fault_fails_by_name() {
    let o = run_with("verify", &H2, &["--inject-fault", "flip-lambda-sign"]);
    assert_eq!(o.status.code(), Some(3));
    let out = stdout(&o);
    assert!(out.contains("FAIL stability_agreement: x0 = 2.4420: sign μ = sign λ"), "{out}");
    assert!(out.contains("PASS endpoint_ordering"));
}

#[test]
fn verify_filter_runs_subset() {
    let o = run_with("verify", &H2, &["--filter", "involution"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("PASS h_conjugate_involution"));
    assert!(out.contains("1 checks, 1 passed, 0 failed"));

    let o = run(&["verify", "--filter", "kappa4"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("PASS kappa4_identity"));

    let o = run(&["verify", "--filter", "no-such-check"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn outputs_are_byte_identical() {
    for cmd in [vec!["analyze"], vec!["chi-scan"], vec!["cycles", "--epsilon", "0.01"]] {
        let a = run_with(cmd[0], &H2, &cmd[1..]);
        let b = run_with(cmd[0], &H2, &cmd[1..]);
        assert!(a.status.success());
        assert_eq!(a.stdout, b.stdout, "{cmd:?}");
    }
}
