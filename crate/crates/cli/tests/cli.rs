use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use classcpd::simgen::{gen_cic, gen_cim};
use classcpd::TimeSeriesMatrix;
use serde_json::Value;
use tempfile::TempDir;

fn classcpd() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_classcpd"));
    for (k, _) in std::env::vars() {
        if k.starts_with("CLASSCPD_") {
            c.env_remove(k);
        }
    }
    c
}

fn write_csv(dir: &Path, name: &str, x: &TimeSeriesMatrix) -> PathBuf {
    let path = dir.join(name);
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record((0..x.d()).map(|j| format!("x{j}"))).unwrap();
    for i in 0..x.n() {
        w.write_record(x.row(i).iter().map(|v| v.to_string()))
            .unwrap();
    }
    w.flush().unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    classcpd().args(args).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).unwrap()
}

fn boundaries(doc: &Value) -> Vec<u64> {
    doc["boundaries"]
        .as_array()
        .unwrap()
        .iter()
        .map(|b| b.as_u64().unwrap())
        .collect()
}

fn table(out: &Output) -> Vec<csv::StringRecord> {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    csv::Reader::from_reader(out.stdout.as_slice())
        .records()
        .map(|r| r.unwrap())
        .collect()
}

fn column(out: &Output, name: &str) -> usize {
    let mut r = csv::Reader::from_reader(out.stdout.as_slice());
    r.headers().unwrap().iter().position(|h| h == name).unwrap()
}

#[test]
fn detect_finds_cim_changes() {
    let dir = TempDir::new().unwrap();
    let path = write_csv(dir.path(), "cim.csv", &gen_cim(7).x);
    let out = run(&[
        "detect",
        "--input",
        path.to_str().unwrap(),
        "--method",
        "rf",
        "--delta",
        "0.01",
        "--seed",
        "7",
    ]);
    let doc = stdout_json(&out);
    let b = boundaries(&doc);
    for truth in [200, 400] {
        assert!(
            b.iter().any(|&e| e.abs_diff(truth) <= 10),
            "{truth} missing from {b:?}"
        );
    }
    assert_eq!((b[0], *b.last().unwrap()), (0, 600));
    assert_eq!(doc["version"], 1);
    assert_eq!(doc["config"]["seed"], 7);
    assert!(doc["timings"].is_null());
    let log = doc["split_log"].as_array().unwrap();
    assert!(log.iter().all(|r| r["p_value"].is_number()));
    let accepted = log.iter().filter(|r| r["accepted"] == true).count();
    assert_eq!(accepted, b.len() - 2);
}

#[test]
fn detect_mean_on_constant_data_keeps_one_segment() {
    let dir = TempDir::new().unwrap();
    let x = TimeSeriesMatrix::new(vec![1.5; 300], 150, 2).unwrap();
    let path = write_csv(dir.path(), "const.csv", &x);
    let doc = stdout_json(&run(&[
        "detect",
        "--input",
        path.to_str().unwrap(),
        "--method",
        "mean",
    ]));
    assert_eq!(boundaries(&doc), vec![0, 150]);
}

#[test]
fn detect_output_is_reproducible_across_threads() {
    let dir = TempDir::new().unwrap();
    let path = write_csv(dir.path(), "cic.csv", &gen_cic(2).x);
    let p = path.to_str().unwrap();
    let a = run(&["detect", "--input", p, "--seed", "3", "--threads", "1"]);
    let b = run(&["detect", "--input", p, "--seed", "3", "--threads", "3"]);
    let c = run(&["detect", "--input", p, "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
}

#[test]
fn output_flag_writes_file_and_timings_are_opt_in() {
    let dir = TempDir::new().unwrap();
    let path = write_csv(dir.path(), "cim.csv", &gen_cim(1).x);
    let target = dir.path().join("out.json");
    let out = run(&[
        "detect",
        "--input",
        path.to_str().unwrap(),
        "--method",
        "mean",
        "--timings",
        "--output",
        target.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert!(out.stdout.is_empty());
    let doc: Value = serde_json::from_slice(&std::fs::read(&target).unwrap()).unwrap();
    assert!(doc["timings"]["detect_seconds"].is_number());
}

#[test]
fn environment_mirrors_flags() {
    let dir = TempDir::new().unwrap();
    let path = write_csv(dir.path(), "cim.csv", &gen_cim(4).x);
    let p = path.to_str().unwrap();
    let flag = run(&[
        "detect", "--input", p, "--method", "mean", "--delta", "0.05",
    ]);
    let env = classcpd()
        .args(["detect", "--input", p])
        .env("CLASSCPD_METHOD", "mean")
        .env("CLASSCPD_DELTA", "0.05")
        .output()
        .unwrap();
    assert!(flag.status.success());
    assert_eq!(flag.stdout, env.stdout);
}

#[test]
fn missing_file_is_a_data_error_naming_the_path() {
    let out = run(&["detect", "--input", "/nonexistent/series.csv"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/series.csv"));
}

#[test]
fn bad_flags_are_usage_errors() {
    assert_eq!(
        run(&["detect", "--input", "x.csv", "--method", "svm"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["detect", "--input", "x.csv", "--bogus"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["detect"]).status.code(), Some(2));
    assert_eq!(
        run(&["detect", "--input", "x.csv", "--delta", "0.7"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["benchmark", "--scenario", "nope"]).status.code(),
        Some(2)
    );
    assert_eq!(
        run(&["benchmark", "--scenario", "cim", "--n-sims", "0"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn benchmark_cim_forest_is_accurate() {
    let out = run(&[
        "benchmark",
        "--scenario",
        "cim",
        "--method",
        "rf",
        "--n-sims",
        "100",
        "--seed",
        "1",
    ]);
    let rows = table(&out);
    let ari = column(&out, "ari");
    assert_eq!(rows.len(), 102);
    let mean = rows.iter().find(|r| &r[0] == "mean").unwrap();
    let v: f64 = mean[ari].parse().unwrap();
    assert!(v >= 0.95, "mean ARI {v}");
}

#[test]
fn benchmark_false_positive_rate_is_controlled() {
    let out = run(&[
        "benchmark",
        "--scenario",
        "fp:cim",
        "--method",
        "rf",
        "--n-sims",
        "200",
    ]);
    let rows = table(&out);
    let rate = column(&out, "detection_rate");
    let mean = rows.iter().find(|r| &r[0] == "mean").unwrap();
    let v: f64 = mean[rate].parse().unwrap();
    assert!(v <= 0.08, "detection rate {v}");
}

#[test]
fn single_replicate_gives_single_row() {
    let out = run(&[
        "benchmark",
        "--scenario",
        "cic",
        "--method",
        "mean",
        "--n-sims",
        "1",
    ]);
    let rows = table(&out);
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "replicate");
    assert!(rows[0][column(&out, "wall_seconds")].is_empty());
}

#[test]
fn benchmark_reads_labelled_files() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("iris_like.csv");
    let mut w = csv::Writer::from_path(&path).unwrap();
    w.write_record(["a", "b", "class"]).unwrap();
    for i in 0..150 {
        let c = i / 50;
        let v = (c * 10) as f64 + (i % 7) as f64 * 0.3;
        w.write_record([
            v.to_string(),
            (v * 0.5 + (i % 3) as f64).to_string(),
            format!("k{c}"),
        ])
        .unwrap();
    }
    w.flush().unwrap();
    let spec = format!("dataset:{}", path.display());
    let out = run(&[
        "benchmark",
        "--scenario",
        &spec,
        "--method",
        "mean",
        "--n-sims",
        "2",
    ]);
    let rows = table(&out);
    let truth = column(&out, "n_true_change_points");
    assert_eq!(rows.len(), 4);
    assert_eq!(rows[0][truth].parse::<f64>().unwrap(), 2.0);
}

#[test]
fn gain_curve_has_one_block_per_guess() {
    let dir = TempDir::new().unwrap();
    let path = write_csv(dir.path(), "cic.csv", &gen_cic(5).x);
    let out = run(&[
        "gain-curve",
        "--input",
        path.to_str().unwrap(),
        "--seed",
        "5",
    ]);
    let rows = table(&out);
    let mut guesses: Vec<&str> = rows
        .iter()
        .filter(|r| &r[0] == "initial")
        .map(|r| r.get(1).unwrap())
        .collect();
    guesses.dedup();
    assert_eq!(guesses, vec!["150", "300", "450"]);
    assert!(rows.iter().any(|r| &r[0] == "final"));
    assert_eq!(
        rows.iter().filter(|r| &r[0] == "likelihood").count(),
        3 * 600
    );
}

#[test]
fn gain_curve_prior_stub_is_flat_zero() {
    let dir = TempDir::new().unwrap();
    let path = write_csv(dir.path(), "cim.csv", &gen_cim(2).x);
    let out = run(&[
        "gain-curve",
        "--input",
        path.to_str().unwrap(),
        "--method",
        "prior",
    ]);
    let rows = table(&out);
    let gain = column(&out, "gain");
    let gains: Vec<f64> = rows
        .iter()
        .filter(|r| !r[gain].is_empty())
        .map(|r| r[gain].parse().unwrap())
        .collect();
    assert!(!gains.is_empty());
    assert!(gains.iter().all(|&g| g == 0.0));
}

#[test]
fn gain_curve_rejects_out_of_range_bounds() {
    let dir = TempDir::new().unwrap();
    let path = write_csv(dir.path(), "cim.csv", &gen_cim(2).x);
    let p = path.to_str().unwrap();
    assert_eq!(
        run(&["gain-curve", "--input", p, "--end", "601"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["gain-curve", "--input", p, "--start", "300", "--end", "300"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["gain-curve", "--input", p, "--start", "300", "--end", "301"])
            .status
            .code(),
        Some(2)
    );
}
