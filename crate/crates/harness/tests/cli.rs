//! CLI surface: subcommands, flags, and exit-code categories, exercised
//! through the compiled binary.

use std::path::Path;
use std::process::Command;

fn binary() -> Command {
    Command::new(env!("CARGO_BIN_EXE_reshuffle"))
}

fn write_config(dir: &Path, out: &Path, epochs: usize) -> std::path::PathBuf {
    let text = format!(
        r#"
[dataset]
kind = "synthetic"
samples = 16
features = 5
sparsity = 0.6
label_noise = 0.0
seed = 2

[regularization]
l1 = 0.01
l2 = "auto"
placement = "regularizer"

[run]
epochs = {epochs}
seeds = [1, 2]
out = "{}"

[[algorithm]]
kind = "prox_rr"
"#,
        out.display()
    );
    let path = dir.join("config.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn validate_accepts_a_good_config() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &dir.path().join("out"), 3);
    let output = binary().arg("validate").arg(&config).output().unwrap();
    assert!(output.status.success(), "{output:?}");
    let stdout = String::from_utf8_lossy(&output.stdout);
    assert!(stdout.contains("configuration ok"));
}

#[test]
fn validate_rejects_empty_budget_with_config_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &dir.path().join("out"), 0);
    let output = binary().arg("validate").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&output.stderr);
    assert!(stderr.contains("empty budget"), "{stderr}");
}

#[test]
fn missing_dataset_file_uses_dataset_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
[dataset]
kind = "libsvm"
path = "{}"

[regularization]
l1 = 0.0
l2 = 0.1
placement = "regularizer"

[run]
epochs = 2
seeds = [1]
out = "{}"

[[algorithm]]
kind = "prox_rr"
"#,
        dir.path().join("nonexistent.libsvm").display(),
        dir.path().join("out").display()
    );
    let config = dir.path().join("config.toml");
    std::fs::write(&config, text).unwrap();
    let output = binary().arg("run").arg(&config).output().unwrap();
    assert_eq!(output.status.code(), Some(3), "{output:?}");
}

#[test]
fn run_honors_seed_and_out_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path(), &dir.path().join("ignored"), 3);
    let out = dir.path().join("override");
    let output = binary()
        .arg("run")
        .arg(&config)
        .arg("--seed")
        .arg("9")
        .arg("--out")
        .arg(&out)
        .arg("--threads")
        .arg("1")
        .output()
        .unwrap();
    assert!(output.status.success(), "{output:?}");
    assert!(out.join("00_prox_rr-constant_seed9.csv").exists());
    assert!(!out.join("00_prox_rr-constant_seed1.csv").exists());
}

#[test]
fn solve_ref_writes_reference_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ref");
    let config = write_config(dir.path(), &out, 2);
    let output = binary().arg("solve-ref").arg(&config).output().unwrap();
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(out.join("x_star.csv")).unwrap();
    assert!(text.starts_with("index,value\n"));
    assert_eq!(text.lines().count(), 1 + 5);
}

#[test]
fn diagnose_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("diag");
    let config = write_config(dir.path(), &out, 2);
    let output = binary().arg("diagnose").arg(&config).output().unwrap();
    assert!(output.status.success(), "{output:?}");
    let text = std::fs::read_to_string(out.join("diagnosis.csv")).unwrap();
    assert!(text.contains("shuffling_radius_bound"));
}
