use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

use curvdecay_cli::{run_scenarios, RunOptions, Status};

fn curvdecay(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_curvdecay")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("scenarios.config");
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

const FLAT: &str = r#"
[[scenario]]
id = "flat"
profile = { kind = "zero" }
manifold = { warp = "euclidean", dimension = 2 }
command = { kind = "isoperimetric", radii = [1.0] }
"#;

#[test]
fn constant_prints_flat_value() {
    let out =
        curvdecay(&["constant", "--case", "domain", "--n", "2", "--theta", "1", "--B", "0", "--b1", "0", "--r0", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let c: f64 = String::from_utf8(out.stdout).unwrap().trim().parse().unwrap();
    assert!((c - 2.0 * PI.sqrt()).abs() < 1e-15);

    let out = curvdecay(&[
        "constant",
        "--case",
        "submanifold",
        "--n",
        "2",
        "--p",
        "1",
        "--theta",
        "1",
        "--B",
        "0",
        "--b1",
        "0",
        "--r0",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(1), "codimension 1 is rejected");

    let out = curvdecay(&["constant", "--case", "sphere", "--n", "2"]);
    assert_eq!(out.status.code(), Some(1), "bad arguments are usage errors");
    assert_eq!(curvdecay(&["--help"]).status.code(), Some(0));
}

#[test]
fn validate_checks_schema_only() {
    let dir = tempfile::tempdir().unwrap();
    let good = write_config(dir.path(), FLAT);
    let out = curvdecay(&["validate", "--config", &good]);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("1 scenario(s) ok"));

    let bad = write_config(dir.path(), &FLAT.replace("radii", "radius"));
    let out = curvdecay(&["validate", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radius"));
}

#[test]
fn duplicate_ids_run_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), &format!("{FLAT}{FLAT}"));
    let out_dir = dir.path().join("out");
    let out = curvdecay(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(!out_dir.exists());
}

#[test]
fn csv_report_and_failure_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    // The second scenario violates the decay precondition.
    let text = format!(
        "{FLAT}{}",
        r#"
[[scenario]]
id = "too-curved"
profile = { kind = "euler", params = [0.5] }
manifold = { warp = "comparison", dimension = 2, profile = { kind = "euler", params = [2.0] }, r_max = 50.0 }
command = { kind = "isoperimetric", radii = [1.0] }
"#
    );
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out =
        curvdecay(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap(), "--format", "csv", "--workers", "2"]);
    assert_eq!(out.status.code(), Some(2));

    let mut rows = csv::Reader::from_path(out_dir.join("reports.csv")).unwrap();
    assert_eq!(rows.headers().unwrap(), vec!["scenario_id", "key", "value", "status"]);
    let rows: Vec<csv::StringRecord> = rows.records().map(Result::unwrap).collect();
    let margin = rows.iter().find(|r| &r[0] == "flat" && &r[1] == "r=1/margin").unwrap();
    assert!(margin[2].parse::<f64>().unwrap().abs() < 1e-12);
    assert_eq!(&margin[3], "PASS");
    assert!(rows.iter().all(|r| &r[0] == "flat"), "a failed precondition computes nothing");
}

#[test]
fn numerical_failure_does_not_abort_the_batch() {
    let dir = tempfile::tempdir().unwrap();
    // h₁ grows like t^1000 and overflows long before the horizon.
    let text = format!(
        "{}{FLAT}",
        r#"
[[scenario]]
id = "overflow"
profile = { kind = "euler", params = [1e6] }
command = { kind = "constants", horizon = 1e4 }
"#
    );
    let cfg = write_config(dir.path(), &text);
    let out_dir = dir.path().join("out");
    let out = curvdecay(&["run", "--config", &cfg, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
    let reports = run_scenarios(Path::new(&cfg), &RunOptions::default()).unwrap();
    assert_eq!(reports[0].status, Status::NumericalFailure);
    assert_eq!(reports[1].scenario_id, "flat");
    assert_eq!(reports[1].status, Status::Pass);
}

#[test]
fn random_lemmas_follow_the_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"
[[scenario]]
id = "batch"
command = { kind = "lemmas", random = 4 }
"#,
    );
    let path = Path::new(&cfg);
    let run = |seed| run_scenarios(path, &RunOptions { seed: Some(seed), workers: Some(2), timings: false }).unwrap();
    let (a, b, c) = (run(5), run(5), run(6));
    assert_eq!(a, b);
    assert_ne!(a[0].computed, c[0].computed);
    assert_eq!(a[0].status, Status::Pass, "{:?}", a[0].messages);
    assert_eq!(a[0].get("lemma_results"), Some(20.0));
    assert_eq!(a[0].inputs["seed"], 5);
}

#[test]
fn timings_are_opt_in() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), FLAT);
    let path = Path::new(&cfg);
    let plain = run_scenarios(path, &RunOptions::default()).unwrap();
    assert!(plain[0].wall_time_ms.is_none());
    let timed = run_scenarios(path, &RunOptions { timings: true, ..Default::default() }).unwrap();
    assert!(timed[0].wall_time_ms.unwrap() >= 0.0);
}
