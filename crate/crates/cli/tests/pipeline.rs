use std::fs;
use std::path::Path;
use std::process::Command;

use breather_cli::{parse_config, Pipeline, Stage};
use tempfile::TempDir;

fn pipeline(source: &str, out: &Path) -> Pipeline {
    let mut cfg = parse_config(source).unwrap();
    cfg.out = out.to_path_buf();
    Pipeline::new(cfg).unwrap()
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

const JSON_ARTIFACTS: &[&str] = &[
    "ground_state.json",
    "phase_plan.json",
    "kernel.json",
    "branch.jsonl",
    "verification.json",
];

#[test]
fn zero_coupling_fails_at_the_ground_state() {
    let dir = TempDir::new().unwrap();
    let err = pipeline("gamma0 = 0.0", dir.path()).run(Stage::Verify).unwrap_err();
    assert_eq!(err.stage, Stage::GroundState);
    assert!(err.to_string().contains("ground-state"));
}

#[test]
fn wrong_excited_phase_fails_at_the_kernel() {
    let dir = TempDir::new().unwrap();
    let err = pipeline("tau_1 = 1.0", dir.path()).run(Stage::Verify).unwrap_err();
    assert_eq!(err.stage, Stage::Kernel, "{err}");
    assert!(dir.path().join("phase_plan.json").exists());
}

#[test]
fn full_run_is_reproducible_and_matches_staged_run() {
    let (a, b, c) = (TempDir::new().unwrap(), TempDir::new().unwrap(), TempDir::new().unwrap());
    pipeline("", a.path()).run(Stage::Verify).unwrap();
    pipeline("", b.path()).run(Stage::Verify).unwrap();
    let staged = pipeline("", c.path());
    for stage in [Stage::GroundState, Stage::Phases, Stage::Kernel, Stage::Branch, Stage::Verify] {
        staged.run_stage(stage).unwrap();
    }
    for name in JSON_ARTIFACTS {
        let reference = read(a.path(), name);
        assert_eq!(reference, read(b.path(), name), "{name} differs between runs");
        assert_eq!(reference, read(c.path(), name), "{name} differs from the staged run");
    }

    let verification: serde_json::Value = serde_json::from_str(&read(a.path(), "verification.json")).unwrap();
    assert!(verification.is_object() || verification.is_array());
    let branch = read(a.path(), "branch.jsonl");
    assert_eq!(branch.lines().count(), 6);
    for line in branch.lines() {
        let point: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(point["residual"].as_f64().unwrap() <= 1e-10);
    }
    let csv = read(a.path(), "ground_state.csv");
    assert_eq!(csv.lines().count(), 4097);
}

#[test]
fn stage_names_round_trip() {
    for stage in [Stage::GroundState, Stage::Phases, Stage::Kernel, Stage::Branch, Stage::Verify] {
        assert_eq!(stage.name().parse::<Stage>().unwrap(), stage);
    }
    assert!("solve".parse::<Stage>().is_err());
}

fn binary() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_breather"));
    cmd.env_remove("RUST_LOG");
    cmd
}

#[test]
fn binary_exit_codes() {
    let dir = TempDir::new().unwrap();
    let out = binary()
        .args(["--override", "omega=0.5", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("requires omega > m"));

    let out = binary()
        .args(["ground-state", "--override", "gamma0=0", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ground-state"));

    let config = dir.path().join("run.toml");
    fs::write(&config, "K = 7\n").unwrap();
    let out = binary()
        .args(["pipeline", "--stage", "phases", "--config"])
        .arg(&config)
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let plan: serde_json::Value = serde_json::from_str(&read(dir.path(), "phase_plan.json")).unwrap();
    assert!(plan.to_string().contains('7'));
    assert!(!dir.path().join("kernel.json").exists());
}
