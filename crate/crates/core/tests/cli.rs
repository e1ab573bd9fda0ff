use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use pcmift::io::{write_covariates, write_responses};
use pcmift::sim::{generate_dataset, preset};
use pcmift::{fit_pcm, FitOptions, Layout};
use serde_json::Value;
use tempfile::TempDir;

fn pcmift(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pcmift"))
        .args(args)
        .env("PCMIFT_THREADS", "2")
        .output()
        .unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Writes replication `rep` of a preset and returns (responses, covariates).
fn scenario_files(dir: &TempDir, name: &str, rep: usize) -> (PathBuf, PathBuf, pcmift::sim::GeneratedDataset) {
    let data = generate_dataset(&preset(name).unwrap(), rep).unwrap();
    let r = dir.path().join("responses.csv");
    let c = dir.path().join("covariates.csv");
    write_responses(&r, &data.responses, None).unwrap();
    write_covariates(&c, &data.covariates).unwrap();
    (r, c, data)
}

fn json_file(p: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

#[test]
fn fit_reports_the_library_deviance() {
    let dir = TempDir::new().unwrap();
    let (r, _, data) = scenario_files(&dir, "sim1-s1-nodif", 0);
    let out = dir.path().join("out");
    let run = pcmift(&["fit", "--responses", path(&r), "--out", path(&out), "--format", "json"]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let report = json_file(&out.join("params.json"));
    let stdout: Value = serde_json::from_slice(&run.stdout).unwrap();
    assert_eq!(report, stdout);

    let layout = Layout::root(8, data.responses.n_persons());
    let fit = fit_pcm(&data.responses, &layout, &FitOptions::default()).unwrap();
    let deviance = report["deviance"].as_f64().unwrap();
    assert!((deviance + 2.0 * fit.log_likelihood).abs() < 1e-6);
    assert_eq!(report["n_persons"], data.responses.n_persons());
    assert_eq!(report["items"].as_array().unwrap().len(), 8);
    assert_eq!(report["converged"], true);
}

#[test]
fn detect_finds_nothing_on_null_data_and_writes_every_artifact() {
    let dir = TempDir::new().unwrap();
    let (r, c, _) = scenario_files(&dir, "sim1-s1-nodif", 0);
    let out = dir.path().join("out");
    let args = [
        "detect", "--responses", path(&r), "--covariates", path(&c), "--covariate-types", "x=binary",
        "--permutations", "100", "--out", path(&out),
    ];
    let run = pcmift(&args);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary = json_file(&out.join("summary.json"));
    assert_eq!(summary["dif_items"].as_array().unwrap().len(), 0);
    assert_eq!(summary["schema_version"], "1.0");
    assert!(String::from_utf8_lossy(&run.stdout).contains("no DIF items detected"));

    let audit = fs::read_to_string(out.join("audit.log")).unwrap();
    assert!(audit.starts_with("step\titem"));
    assert!(audit.lines().count() >= 2);
    assert_eq!(fs::read_dir(out.join("trees")).unwrap().count(), 8);
    assert!(out.join("trees").join("001_item1.json").exists());
    let plot = fs::read_to_string(out.join("plot_data.tsv")).unwrap();
    assert_eq!(plot.lines().count(), 1 + 8 * 2);
    assert_eq!(fs::read_to_string(out.join("trees.txt")).unwrap().lines().count(), 8);

    let again = dir.path().join("again");
    let mut args2 = args.to_vec();
    *args2.last_mut().unwrap() = path(&again);
    assert!(pcmift(&args2).status.success());
    assert_eq!(
        fs::read(out.join("summary.json")).unwrap(),
        fs::read(again.join("summary.json")).unwrap()
    );
}

#[test]
fn detect_reports_strong_dif() {
    let dir = TempDir::new().unwrap();
    let (r, c, _) = scenario_files(&dir, "sim3-strong", 0);
    let run = pcmift(&[
        "detect", "--responses", path(&r), "--covariates", path(&c), "--covariate-types", "binary",
        "--permutations", "100", "--early-stop", "--format", "json",
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let summary: Value = serde_json::from_slice(&run.stdout).unwrap();
    let names: Vec<&str> = summary["dif_items"]
        .as_array()
        .unwrap()
        .iter()
        .map(|d| d["name"].as_str().unwrap())
        .collect();
    assert!(names.contains(&"item5"), "{names:?}");
}

#[test]
fn input_problems_exit_with_code_three() {
    let dir = TempDir::new().unwrap();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, "a,b,c\n0,1,2\n1,1,1\n2,0,1\n").unwrap();
    let run = pcmift(&["fit", "--responses", path(&bad)]);
    assert_eq!(run.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&run.stderr).contains('2'));

    let (r, _, _) = scenario_files(&dir, "sim1-s1-nodif", 0);
    let short = dir.path().join("short.csv");
    fs::write(&short, "x\n0\n1\n").unwrap();
    let run = pcmift(&[
        "detect", "--responses", path(&r), "--covariates", path(&short), "--covariate-types", "x=binary",
    ]);
    assert_eq!(run.status.code(), Some(3));

    let missing = dir.path().join("nope.csv");
    assert_eq!(pcmift(&["fit", "--responses", path(&missing)]).status.code(), Some(3));
    assert_eq!(pcmift(&["fit"]).status.code(), Some(2));
}

#[test]
fn simulate_writes_a_metrics_table() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("sim");
    let run = pcmift(&[
        "simulate", "sim1-s1-strong", "--replications", "2", "--permutations", "100", "--out", path(&out),
    ]);
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    let table = fs::read_to_string(out.join("metrics.tsv")).unwrap();
    let tpr = table
        .lines()
        .find(|l| l.split('\t').nth(2) == Some("tpr_item"))
        .expect("no tpr_item row");
    let value: f64 = tpr.split('\t').nth(3).unwrap().parse().unwrap();
    assert!((0.0..=1.0).contains(&value));
    let report = json_file(&out.join("report.json"));
    assert_eq!(report["replications"].as_array().unwrap().len(), 2);
    assert_eq!(pcmift(&["simulate", "sim9-nothing"]).status.code(), Some(1));
}
