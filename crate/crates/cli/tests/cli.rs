use std::path::PathBuf;
use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_minechain");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?}: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("minechain-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

#[test]
fn help_everywhere() {
    for sub in [
        "analyze", "mix", "safety", "curve", "simulate", "paths", "chain",
    ] {
        assert!(run(&[sub, "--help"]).status.success(), "{sub}");
    }
    assert!(run(&["--help"]).status.success());
}

#[test]
fn usage_errors_exit_two_with_one_line() {
    for args in [
        vec!["analyze", "--gap", "1"],
        vec!["mix", "--eps", "1"],
        vec!["curve", "--g", ""],
        vec!["analyze", "--p1", "0.5"],
        vec!["analyze", "--gap", "2", "--s", "3", "--p1", "0.5"],
        vec!["safety", "--p1", "0.1..0.2"],
        vec!["bogus"],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = String::from_utf8(out.stderr).unwrap();
        assert!(err.starts_with("error:"), "{args:?}: {err}");
    }
}

#[test]
fn thread_variable_is_validated() {
    let out = Command::new(BIN)
        .env("MINECHAIN_THREADS", "zero")
        .args([
            "--quiet", "paths", "--band", "--l", "0", "--m", "0", "--g", "1",
        ])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let ok = Command::new(BIN)
        .env("MINECHAIN_THREADS", "2")
        .args([
            "--quiet", "paths", "--band", "--l", "0", "--m", "0", "--g", "1",
        ])
        .output()
        .unwrap();
    assert!(ok.status.success());
}

#[test]
fn analyze_reports() {
    let v = json(&[
        "--quiet",
        "analyze",
        "--frontier-vs-frontier",
        "--p1",
        "0.4",
    ]);
    assert_eq!(v["g1"], 0.4);
    assert_eq!(v["h"], 1.0);
    let v = json(&[
        "--quiet", "analyze", "--gap", "1", "--s", "0", "--p1", "0.5", "--depth", "200",
    ]);
    assert!((v["g1"].as_f64().unwrap() - 8.0 / 15.0).abs() < 1e-12);
    let csv = stdout(&[
        "--quiet", "analyze", "--gap", "1", "--p1", "0.5", "--format", "csv",
    ]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 2);
    assert!(lines[0].starts_with("p1,g,s,d,c1,c2,tau_bar"));
    assert!(lines[1].contains(",0.533333333333,"));
}

#[test]
fn mix_modes() {
    let csv = stdout(&[
        "--quiet", "mix", "--exact", "--gap", "2", "--s", "0", "--p1", "0.5", "--depth", "30",
        "--eps", "1e-3",
    ]);
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    let (t, bound): (u64, u64) = (row[4].parse().unwrap(), row[5].parse().unwrap());
    assert!(t <= bound);
    let csv = stdout(&["--quiet", "mix", "--p1", "0.5,0.9", "--gbar", "1,2"]);
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn safety_modes() {
    let csv = stdout(&[
        "--quiet", "safety", "--d", "100", "--T", "1e8", "--p1max", "0.45",
    ]);
    assert!(csv.lines().any(|l| l.ends_with(",5,3")));
    let csv = stdout(&[
        "--quiet", "safety", "--d", "100", "--T", "1e4", "--s", "0", "--p1", "0.5", "--onset",
    ]);
    assert_eq!(csv.lines().nth(1).unwrap(), "100,0,0.5,10000,13");
    let csv = stdout(&[
        "--quiet", "safety", "--d", "100", "--T", "1e4", "--s", "2", "--p1", "0.5", "--g", "9..40",
    ]);
    assert!(csv.lines().skip(1).all(|l| l.ends_with(",Undetermined")));
    let turns = stdout(&[
        "--quiet",
        "safety",
        "--d",
        "100",
        "--T",
        "1e4",
        "--s",
        "0",
        "--p1",
        "0.5",
        "--onset",
        "--criterion",
        "turns",
    ]);
    assert_eq!(turns.lines().nth(1).unwrap(), "100,0,0.5,10000,");
}

#[test]
fn curve_single_gap() {
    let csv = stdout(&["--quiet", "curve", "--g", "1", "--p1", "0.1..0.9..0.1"]);
    let rows: Vec<Vec<&str>> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 18);
    let g1: Vec<f64> = rows
        .iter()
        .filter(|r| r[0] == "1")
        .map(|r| r[5].parse().unwrap())
        .collect();
    assert!(g1.windows(2).all(|w| w[0] < w[1]));
    assert!(rows
        .iter()
        .filter(|r| r[0] == "0")
        .all(|r| r[9] == "frontier"));
}

#[test]
fn simulate_is_deterministic() {
    let args = [
        "--quiet",
        "simulate",
        "--frontier-vs-frontier",
        "--p1",
        "0.3",
        "--turns",
        "1e5",
        "--seed",
        "7",
    ];
    let a = stdout(&args);
    assert_eq!(a, stdout(&args));
    let v: serde_json::Value = serde_json::from_str(&a).unwrap();
    let g1 = &v["g1"];
    assert!((g1["value"].as_f64().unwrap() - 0.3).abs() <= 3.0 * g1["se"].as_f64().unwrap());
    let v = json(&[
        "--quiet", "simulate", "--gap", "1", "--p1", "0.5", "--depth", "1", "--hit", "1,1",
        "--reps", "50",
    ]);
    assert_eq!(v["samples"].as_array().unwrap().len(), 50);
    assert_eq!(v["censored"], 0);
}

#[test]
fn paths_output() {
    let v = json(&[
        "--quiet", "paths", "--band", "--l", "0", "--m", "0", "--g", "4",
    ]);
    assert_eq!(v["count"]["value"], "1");
    let v = json(&[
        "--quiet", "paths", "--d", "5", "--g", "2", "--s", "0", "--check",
    ]);
    assert_eq!(v["dp_agrees"], true);
    let v = json(&["--quiet", "paths", "--d", "100", "--g", "5", "--s", "3"]);
    let digits = v["n00"]["value"].as_str().unwrap();
    assert!(digits.len() > 40 && digits.bytes().all(|b| b.is_ascii_digit()));
}

#[test]
fn chain_dumps() {
    let dot = stdout(&[
        "--quiet", "chain", "--gap", "3", "--p1", "0.5", "--depth", "6", "--format", "dot",
    ]);
    assert!(dot.starts_with("digraph"));
    let v = json(&[
        "--quiet",
        "chain",
        "--gap",
        "1",
        "--p1",
        "0.5",
        "--depth",
        "4",
        "--stationary",
    ]);
    let pi: f64 = v["stationary"]
        .as_array()
        .unwrap()
        .iter()
        .map(|x| x.as_f64().unwrap())
        .sum();
    assert!((pi - 1.0).abs() < 1e-12);
    assert_eq!(
        v["states"].as_array().unwrap().len(),
        v["stationary"].as_array().unwrap().len()
    );
}

#[test]
fn manifest_sidecar_and_reproduction() {
    let out = scratch("table.csv");
    let path = out.to_str().unwrap();
    stdout(&["mix", "--gbar", "1..3", "--out", path]);
    let body = std::fs::read(&out).unwrap();
    let manifest: serde_json::Value =
        serde_json::from_slice(&std::fs::read(format!("{path}.manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["subcommand"], "mix");
    assert_eq!(manifest["parameters"]["mix"]["gbar"], "1..3");
    let digest = manifest["outputs"][0]["sha256"].as_str().unwrap();
    assert_eq!(digest.len(), 64);
    stdout(&["mix", "--gbar", "1..3", "--out", path]);
    assert_eq!(std::fs::read(&out).unwrap(), body);

    let stderr = run(&["paths", "--band", "--l", "1", "--m", "0", "--g", "1"]).stderr;
    let m: serde_json::Value = serde_json::from_slice(&stderr).unwrap();
    assert_eq!(m["outputs"][0]["path"], "<stdout>");
}

#[test]
fn trace_is_recorded_in_manifest() {
    let trace = scratch("trace.csv");
    let out = scratch("sim.json");
    stdout(&[
        "simulate",
        "--gap",
        "2",
        "--p1",
        "0.4",
        "--turns",
        "1000",
        "--batches",
        "10",
        "--trace",
        trace.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(
        std::fs::read_to_string(&trace).unwrap().lines().count(),
        1001
    );
    let m: serde_json::Value =
        serde_json::from_slice(&std::fs::read(format!("{}.manifest.json", out.display())).unwrap())
            .unwrap();
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
    assert_eq!(m["seeds"][0], 0);
}
