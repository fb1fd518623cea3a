use std::path::PathBuf;
use std::process::{Command, Output};
use std::sync::atomic::{AtomicUsize, Ordering};

use inflate_lab_cli::{parse_config_text, ExperimentConfig};
use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_inflate-lab"));
    c.env_remove("INFLATE_LAB_THREADS");
    c
}

fn scratch(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("inflate-lab-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

static NEXT: AtomicUsize = AtomicUsize::new(0);

fn run(command: &str, config: &str) -> Output {
    let path = scratch(&format!("{command}-{}.json", NEXT.fetch_add(1, Ordering::Relaxed)), config);
    bin().arg(command).arg("--config").arg(path).output().unwrap()
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&out.stderr));
    })
}

fn stderr_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stderr).unwrap()
}

#[test]
fn mv_of_first_vertex_is_zero() {
    let out = run(
        "mv",
        &std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/mv.json")).unwrap(),
    );
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["command"], "mv");
    assert_eq!(v["report"]["value"], 0.0);
    assert_eq!(v["report"]["analytic"], true);
}

#[test]
fn identity_inflation_verifies() {
    let out = run(
        "check-inflation",
        r#"{"params": {"map": {"entries": [[1, 0], [0, 1]], "domain_norm": {"dim": 2, "kind": "euclidean"}, "codomain_norm": {"dim": 2, "kind": "euclidean"}}, "lambda": 1}}"#,
    );
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["report"]["verification"]["verified"], true);
    assert!((v["report"]["verification"]["min_sign_vol"].as_f64().unwrap() - 1.0).abs() < 1e-9);
}

#[test]
fn malformed_json_exits_2() {
    let out = run("mv", r#"{"params": {"u": [1.0, 0.0"#);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "schema");
}

#[test]
fn schema_errors_point_at_the_field() {
    let out = run(
        "mv",
        r#"{"params": {"u": "north", "a": {"dim": 2, "kind": "euclidean"}, "b": {"dim": 2, "kind": "euclidean"}}}"#,
    );
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"]["pointer"], "params.u");
    assert_eq!(err["error"]["exit_code"], 2);
}

#[test]
fn precondition_errors_exit_2() {
    // ‖(u|0)‖ = 2 breaks the standing assumption.
    let out = run(
        "mv",
        r#"{"params": {"u": [2.0, 0.0], "a": {"dim": 2, "kind": "euclidean"}, "b": {"dim": 2, "kind": "euclidean"}}}"#,
    );
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"]["kind"], "precondition");
}

#[test]
fn failed_certificate_exits_3() {
    let out = run(
        "check-inflation",
        r#"{"params": {"map": {"entries": [[0.5, 0], [0, 1]], "domain_norm": {"dim": 2, "kind": "euclidean"}, "codomain_norm": {"dim": 2, "kind": "euclidean"}}, "lambda": 1, "certificate": {"preimages": [[1, 0], [0, 1]], "eigenvalues": [4, 1]}}}"#,
    );
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"]["kind"], "numerical");
}

#[test]
fn config_command_must_match() {
    let out = run("calibrate", r#"{"command": "mv", "params": {}}"#);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn flags_override_config() {
    let dir = std::env::temp_dir().join(format!("inflate-lab-cli-{}", std::process::id()));
    let target = dir.join("calibrate.csv");
    let config = scratch(
        "calibrate-override.json",
        r#"{"command": "calibrate", "params": {"box_sizes": [0.05]}, "seed": 4, "output": {"format": "json"}}"#,
    );
    let out = bin()
        .args(["calibrate", "--seed", "9", "--format", "csv", "--out"])
        .arg(&target)
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(out.stdout.is_empty());
    let csv = std::fs::read_to_string(&target).unwrap();
    assert!(csv.lines().count() > 1 && !csv.starts_with('{'));

    let out = bin()
        .args(["calibrate", "--seed", "9"])
        .arg("--config")
        .arg(&config)
        .output()
        .unwrap();
    assert_eq!(stdout_json(&out)["seed"], 9);
}

#[test]
fn csv_is_refused_where_unsupported() {
    let path = scratch(
        "mv-csv.json",
        &std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/mv.json")).unwrap(),
    );
    let out = bin()
        .args(["mv", "--format", "csv", "--config"])
        .arg(path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn configs_round_trip() {
    for text in [
        r#"{"command": "mv", "params": {"u": [1.0, 0.0]}, "seed": 3, "output": {"path": "out.json", "format": "json"}}"#,
        r#"{"command": "experiment-negative", "params": {"r": 0.01, "eps": [0.5]}, "seed": 0, "output": {"path": null, "format": "csv"}}"#,
    ] {
        let config: ExperimentConfig = serde_json::from_str(text).unwrap();
        let again: ExperimentConfig = serde_json::from_str(&serde_json::to_string(&config).unwrap()).unwrap();
        assert_eq!(config, again);
        let file = parse_config_text(text).unwrap();
        assert_eq!(file.params, config.params);
    }
}

#[test]
fn shipped_configs_parse() {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs");
    for entry in std::fs::read_dir(dir).unwrap() {
        let text = std::fs::read_to_string(entry.unwrap().path()).unwrap();
        let file = parse_config_text(&text).unwrap();
        assert!(file.command.is_some());
    }
}
