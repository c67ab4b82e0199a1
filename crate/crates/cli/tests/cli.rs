use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn mixkrig(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixkrig"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_ok(args: &[&str]) -> String {
    let out = mixkrig(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

#[test]
fn positions_row() {
    let out = stdout_ok(&["testbed", "positions", "--fn", "ackley", "--s", "6", "--digits", "2"]);
    assert_eq!(out.trim(), "-32.77,-19.66,0.00,6.55,19.66,32.77");
    let out = stdout_ok(&["testbed", "positions", "--fn", "alpine", "--s", "4", "--spacing", "normal"]);
    let v: Vec<f64> = out.trim().split(',').map(|t| t.parse().unwrap()).collect();
    assert_eq!((v[0], v[3]), (-10.0, 10.0));
}

#[test]
fn list_has_fourteen_functions() {
    let out = stdout_ok(&["testbed", "list"]);
    assert_eq!(out.lines().count(), 15);
    assert!(out.contains("alpine_upended_1_2_4,6"));
}

#[test]
fn corr_build_prints_matrix() {
    let out = stdout_ok(&["corr", "build", "--family", "EC", "--s", "3", "--params", "0.5", "--raw"]);
    let rows: Vec<&str> = out.lines().collect();
    assert_eq!(rows, ["1,0.5,0.5", "0.5,1,0.5", "0.5,0.5,1"]);
    let out = mixkrig(&["corr", "build", "--family", "LRC", "--rank", "4", "--s", "4", "--params", "1"]);
    assert!(!out.status.success());
}

#[test]
fn empirical_corr_signs() {
    let out = stdout_ok(&["testbed", "corr", "--fn", "dcs", "--s", "4", "--upend", "1,3", "--resolution", "40"]);
    let m: Vec<Vec<f64>> = out
        .lines()
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect();
    assert_eq!(m.len(), 4);
    let negatives = (1..4).flat_map(|i| (0..i).map(move |j| (i, j))).filter(|(i, j)| m[*i][*j] < 0.0).count();
    assert_eq!(negatives, 4);
}

#[test]
fn design_round_trip_and_rejection() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("d.csv");
    let g = good.to_str().unwrap();
    stdout_ok(&["design", "cslhd", "--n", "4", "--s", "3", "--q", "2", "--seed", "5", "--out", g]);
    assert!(stdout_ok(&["design", "validate", g]).contains("valid: 12 points"));

    // break the full-design Latin property by duplicating a row's slice
    let text = fs::read_to_string(&good).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[2] = lines[1].clone();
    let bad = dir.path().join("bad.csv");
    fs::write(&bad, lines.join("\n")).unwrap();
    let out = mixkrig(&["design", "validate", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("LHD"));

    let a = stdout_ok(&["design", "lhd", "--n", "5", "--q", "2", "--seed", "3"]);
    let b = stdout_ok(&["design", "lhd", "--n", "5", "--q", "2", "--seed", "3"]);
    assert_eq!(a, b);
}

fn write_config(path: &Path) {
    fs::write(
        path,
        r#"
functions = ["alpine_upended"]
s_values = [4]
n_values = [4]
families = ["EC", "LRC"]
replications = 2
base_seed = 3
individual = true
[fit]
starts = 2
max_evals = 150
[empirical]
resolution = 30
[test_set]
size = 100
"#,
    )
    .unwrap();
}

#[test]
fn bench_run_summarize_and_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.toml");
    write_config(&cfg);
    let c = cfg.to_str().unwrap();
    let check = stdout_ok(&["bench", "validate-config", c]);
    assert!(check.contains("s=4: EC LRC2 LRC3 IK"));
    assert!(check.contains("8 records expected"));

    let out = dir.path().join("run");
    let o = out.to_str().unwrap();
    stdout_ok(&["bench", "run", "--config", c, "--out", o, "--jobs", "2"]);
    let records = fs::read_to_string(out.join("records.csv")).unwrap();
    let mut lines = records.lines();
    assert!(lines.next().unwrap().starts_with('#'));
    assert_eq!(lines.next().unwrap(), "function,s,n,family,rank,rep,rmse_corr,q2,fit_seconds,status");
    assert_eq!(lines.count(), 8);

    let summary = stdout_ok(&["bench", "summarize", "--records", out.join("records.csv").to_str().unwrap()]);
    assert!(summary.starts_with("function,s,n,family,rank,metric,median,q25,q75,failures"));
    assert_eq!(summary, fs::read_to_string(out.join("summary.csv")).unwrap());

    let q2 = dir.path().join("q2.csv");
    fs::write(&q2, "y_true,y_pred\n1,1\n2,2\n4,4\n").unwrap();
    assert_eq!(stdout_ok(&["bench", "q2", "--data", q2.to_str().unwrap()]).trim(), "1");

    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    fs::write(&a, "1,1\n1,1\n").unwrap();
    fs::write(&b, "1,-1\n-1,1\n").unwrap();
    let rmse = stdout_ok(&["bench", "corr-rmse", "--estimate", a.to_str().unwrap(), "--empirical", b.to_str().unwrap()]);
    assert_eq!(rmse.trim(), "2");

    fs::write(&cfg, "functions = [\"ackley\"]\nreplications = 0\n").unwrap();
    assert!(!mixkrig(&["bench", "validate-config", c]).status.success());
}

#[test]
fn gp_fit_and_predict() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.csv");
    let mut text = String::from("slice,x1,y\n");
    for k in 0..6 {
        let x = k as f64 / 5.0;
        text.push_str(&format!("1,{x},{}\n", (3.0 * x).sin()));
        text.push_str(&format!("2,{x},{}\n", -(3.0 * x).sin()));
    }
    fs::write(&data, text).unwrap();
    let model = dir.path().join("m.json");
    stdout_ok(&[
        "gp", "fit", "--data", data.to_str().unwrap(), "--levels", "2", "--family", "UC", "--bounds", "0:1",
        "--starts", "3", "--out", model.to_str().unwrap(),
    ]);
    let pts = dir.path().join("pts.csv");
    fs::write(&pts, "slice,x1\n1,0.4\n2,0.4\n").unwrap();
    let out = stdout_ok(&["gp", "predict", "--model", model.to_str().unwrap(), "--points", pts.to_str().unwrap()]);
    let v: Vec<f64> = out.lines().skip(1).map(|l| l.parse().unwrap()).collect();
    let truth = (1.2f64).sin();
    assert!((v[0] - truth).abs() < 0.05, "{v:?}");
    assert!((v[1] + truth).abs() < 0.05, "{v:?}");
}
