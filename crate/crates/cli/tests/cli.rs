use std::path::{Path, PathBuf};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> i32 {
    let mut full = vec!["magflow"];
    full.extend_from_slice(args);
    magflow_cli::run(full)
}

fn report(out: &Path, command: &str) -> Value {
    let text = std::fs::read_to_string(out.join(format!("{command}.json"))).unwrap();
    serde_json::from_str(&text).unwrap()
}

fn write_config(dir: &Path, body: &str) -> PathBuf {
    let p = dir.join("run.toml");
    std::fs::write(&p, body).unwrap();
    p
}

const SMALL_TORUS: &str = r#"
[system.surface]
backend = "torus"
max_degree = 1
u = [[0, 1, 0.05, 0.0], [0, -1, 0.05, 0.0]]
lambda = [[0, 0, 0.2, 0.0], [1, 0, 0.0, -0.025], [-1, 0, 0.0, 0.025]]

[verify]
random_systems = 1
functions = 3
points_per_function = 4
"#;

#[test]
fn commutators_pass_and_write_reports() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TORUS);
    let out = dir.path().join("out");
    let code = run(&["commutators", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let r = report(&out, "commutators");
    assert_eq!(r["pass"], true);
    assert_eq!(r["seed"], 5);
    assert_eq!(r["records"].as_array().unwrap().len(), 7);
    assert!(r.get("unix_time").is_none());
    let meta: Value = serde_json::from_str(&std::fs::read_to_string(out.join("commutators.meta.json")).unwrap()).unwrap();
    assert!(meta["unix_time"].as_u64().unwrap() > 0);
}

#[test]
fn corrupted_frame_is_caught() {
    let dir = tempfile::tempdir().unwrap();
    let body = format!("{SMALL_TORUS}\n[verify.corrupt]\nfield = \"H\"\ncomponent = 2\nfactor = 1.01\n");
    let cfg = write_config(dir.path(), &body);
    let out = dir.path().join("out");
    let code = run(&["commutators", "--config", cfg.to_str().unwrap(), "--seed", "5", "--out", out.to_str().unwrap()]);
    assert_eq!(code, 1);
    let r = report(&out, "commutators");
    let failing: Vec<_> = r["records"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|x| x["pass"] == false)
        .map(|x| x["identity"].as_str().unwrap().to_string())
        .collect();
    assert!(!failing.is_empty());
    assert!(failing.iter().all(|n| n.starts_with("commutator") || n == "dual pairings"), "{failing:?}");
}

#[test]
fn randomized_suites_need_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SMALL_TORUS);
    let out = dir.path().join("out");
    assert_eq!(run(&["verify-identities", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    assert!(!out.join("verify-identities.json").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = out.to_str().unwrap();
    assert_eq!(run(&["orbits", "--config", "/nonexistent.toml", "--out", o]), 2);
    let cfg = write_config(dir.path(), &format!("{SMALL_TORUS}\n[spectrum]\nbogus = 1\n"));
    assert_eq!(run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", o]), 2);
    // word targets need the hyperbolic backend
    let cfg = write_config(dir.path(), &format!("{SMALL_TORUS}\n[[orbits.targets]]\nkind = \"word\"\nword = \"a\"\n"));
    assert_eq!(run(&["orbits", "--config", cfg.to_str().unwrap(), "--out", o]), 2);
    // deform needs a family
    let cfg = configs().join("torus.toml");
    assert_eq!(run(&["deform", "--config", cfg.to_str().unwrap(), "--out", o]), 2);
    // intensity outside the regime
    let cfg = write_config(dir.path(), "[system.surface]\nbackend = \"hyperbolic\"\nlambda_const = 1.5\n");
    assert_eq!(run(&["commutators", "--config", cfg.to_str().unwrap(), "--seed", "1", "--out", o]), 2);
    // unknown subcommand
    assert_eq!(run(&["frobnicate"]), 2);
}

#[test]
fn dry_run_writes_nothing() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("hyperbolic.toml");
    for cmd in ["verify-identities", "orbits", "index-form", "spectrum", "lyapunov"] {
        assert_eq!(run(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--dry-run"]), 0);
    }
    assert!(!out.exists());
}

#[test]
fn orbit_store_is_reused() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("torus.toml");
    let args = ["orbits", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    assert_eq!(run(&args), 0);
    let first = std::fs::read_to_string(out.join("orbits.jsonl")).unwrap();
    assert_eq!(first.lines().count(), 1);
    assert_eq!(run(&args), 0);
    let second = std::fs::read_to_string(out.join("orbits.jsonl")).unwrap();
    assert_eq!(first, second);
    let mut rdr = csv::Reader::from_path(out.join("orbits.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["class", "t", "x1", "x2", "theta"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 201);
    assert!(rows.iter().all(|r| &r[0] == "torus(1,0;w0)"));
}

#[test]
fn spectrum_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = configs().join("flat_control.toml");
    assert_eq!(run(&["spectrum", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 0);
    let mut rdr = csv::Reader::from_path(out.join("spectrum.csv")).unwrap();
    assert_eq!(rdr.headers().unwrap(), vec!["class", "tau", "length", "holonomy", "action"]);
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 1);
    assert_eq!(&rows[0][0], "torus(0,0;w1)");
    // radius-2 circle at intensity 1/2: length 4 pi, action pi / lambda = 2 pi mod 1
    let length: f64 = rows[0][2].parse().unwrap();
    let action: f64 = rows[0][4].parse().unwrap();
    assert!((length - 4.0 * std::f64::consts::PI).abs() < 1e-9);
    let want = (2.0 * std::f64::consts::PI).rem_euclid(1.0);
    assert!((action - want).abs() < 1e-9);
}

#[test]
fn jobs_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("hyperbolic.toml");
    let mut reports = Vec::new();
    for jobs in ["1", "3"] {
        let out = dir.path().join(format!("out{jobs}"));
        let code = run(&["jacobi-check", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--jobs", jobs]);
        assert_eq!(code, 0);
        reports.push(std::fs::read(out.join("jacobi-check.json")).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
}
