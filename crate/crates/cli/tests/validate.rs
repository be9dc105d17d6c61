//! The validate subcommand and the config-error exit path: shipped
//! configs pass, broken ones are diagnosed by field path and exit 2.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn settle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_settle"))
        .args(args)
        .output()
        .expect("settle should launch")
}

fn validate(config: &Path) -> Output {
    settle(&["validate", "--config", config.to_str().unwrap()])
}

/// Writes a throwaway config under the cargo scratch dir.
fn scratch_config(name: &str, text: &str) -> PathBuf {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join(name);
    std::fs::write(&path, text).expect("scratch config");
    path
}

#[test]
fn every_shipped_config_validates() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let mut seen = 0;
    for entry in std::fs::read_dir(&dir).expect("configs dir") {
        let path = entry.unwrap().path();
        if path.extension().and_then(|e| e.to_str()) != Some("toml") {
            continue;
        }
        seen += 1;
        let output = validate(&path);
        assert!(
            output.status.success(),
            "{}: {}",
            path.display(),
            String::from_utf8_lossy(&output.stdout)
        );
        assert_eq!(String::from_utf8_lossy(&output.stdout).trim(), "ok");
    }
    assert_eq!(
        seen, 7,
        "one shipped config per experiment plus the unstable state"
    );
}

#[test]
fn zero_arclength_step_is_reported_by_field_path() {
    let path = scratch_config(
        "zero_ds.toml",
        r#"
experiment = "heq_continue"
output_dir = "out"

[continuation]
ds = 0.0
"#,
    );
    let output = validate(&path);
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("continuation.ds"), "diagnostic: {stdout}");
}

#[test]
fn pde_solve_without_a_stepper_is_rejected() {
    let path = scratch_config(
        "no_stepper.toml",
        r#"
experiment = "ci_solve"
output_dir = "out"
"#,
    );
    let output = validate(&path);
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("stepper"), "diagnostic: {stdout}");
}

#[test]
fn unknown_fields_are_rejected() {
    let path = scratch_config(
        "typo.toml",
        r#"
experiment = "heq_solve"
output_dir = "out"

[solver]
atoll = 1e-12
"#,
    );
    let output = validate(&path);
    assert_eq!(output.status.code(), Some(2));
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("atoll"), "diagnostic: {stdout}");
}

#[test]
fn unparseable_toml_is_a_config_error() {
    let path = scratch_config("broken.toml", "experiment = [unclosed\n");
    let output = validate(&path);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn missing_config_file_is_a_config_error() {
    let path = Path::new(env!("CARGO_TARGET_TMPDIR")).join("does_not_exist.toml");
    let output = validate(&path);
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn malformed_override_is_a_config_error() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs");
    let config = dir.join("heq_solve.toml");
    let output = settle(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--set",
        "solver.atol",
    ]);
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("solver.atol"), "diagnostic: {stderr}");
}

#[test]
fn run_rejects_an_invalid_config_before_writing_anything() {
    let out = Path::new(env!("CARGO_TARGET_TMPDIR")).join("never_created");
    let _ = std::fs::remove_dir_all(&out);
    let path = scratch_config(
        "bad_run.toml",
        &format!(
            r#"
experiment = "heq_continue"
output_dir = "{}"

[continuation]
ds = 0.0
"#,
            out.display()
        ),
    );
    let output = settle(&["run", "--config", path.to_str().unwrap()]);
    assert_eq!(output.status.code(), Some(2));
    assert!(
        !out.exists(),
        "config errors must precede filesystem writes"
    );
}
