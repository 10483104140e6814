//! End-to-end runner contracts: output files, counter semantics, rerun
//! determinism, and the planted-model sanity of the synthetic generator.

use std::path::Path;

use reshuffle_harness::config::ExperimentConfig;
use reshuffle_harness::experiment::{self, SUMMARY_HEADER, TRACE_HEADER};

fn demo_config(out: &Path, epochs: usize) -> ExperimentConfig {
    let text = format!(
        r#"
[dataset]
kind = "synthetic"
samples = 24
features = 6
sparsity = 0.6
label_noise = 0.05
seed = 11

[regularization]
l1 = 0.01
l2 = "auto"
placement = "regularizer"

[run]
epochs = {epochs}
seeds = [1, 2, 3]
out = "{}"

[[algorithm]]
kind = "prox_rr"

[[algorithm]]
kind = "prox_sgd"

[[algorithm]]
kind = "rr_heuristic"
"#,
        out.display()
    );
    ExperimentConfig::from_toml(&text).unwrap()
}

#[test]
fn runner_writes_all_files_with_fixed_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let config = demo_config(&out, 5);
    let report = experiment::run_experiment(&config, Some(2)).unwrap();
    assert_eq!(report.failure_count, 0);
    assert_eq!(report.cells.len(), 9);

    for name in ["config.toml", "x_star.csv", "summary.csv", "failures.csv"] {
        assert!(out.join(name).exists(), "{name} missing");
    }
    let trace = std::fs::read_to_string(out.join("00_prox_rr-constant_seed1.csv")).unwrap();
    assert!(trace.starts_with(TRACE_HEADER));
    assert_eq!(trace.lines().count(), 1 + 5 + 1); // header + T epochs + initial record
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert!(summary.starts_with(SUMMARY_HEADER));

    // config round-trips through the copy that was written next to the data
    let copied = ExperimentConfig::load(&out.join("config.toml")).unwrap();
    assert_eq!(copied, config);
}

#[test]
fn prox_call_counters_follow_the_methods() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let epochs = 4;
    let config = demo_config(&out, epochs);
    let report = experiment::run_experiment(&config, None).unwrap();
    let n = 24u64;
    let t = epochs as u64;
    for cell in &report.cells {
        let trace = cell.outcome.as_ref().unwrap();
        let record = trace.final_record();
        if cell.label.contains("prox_rr") {
            assert_eq!(record.prox_calls, t);
            assert_eq!(record.grad_calls, n * t);
        } else {
            assert_eq!(record.prox_calls, n * t, "{}", cell.label);
            assert_eq!(record.grad_calls, n * t, "{}", cell.label);
        }
    }
}

#[test]
fn reruns_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    let mut config = demo_config(&out_a, 6);
    experiment::run_experiment(&config, Some(3)).unwrap();
    config.run.out = out_b.clone();
    experiment::run_experiment(&config, Some(1)).unwrap();

    for entry in std::fs::read_dir(&out_a).unwrap() {
        let name = entry.unwrap().file_name();
        if name == "config.toml" {
            continue; // differs in the out path by construction
        }
        let a = std::fs::read(out_a.join(&name)).unwrap();
        let b = std::fs::read(out_b.join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between reruns");
    }
}

#[test]
fn planted_separable_data_is_fit_to_low_error() {
    // label_noise = 0: a solver on the synthetic data reaches nearly zero
    // training misclassification
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
[dataset]
kind = "synthetic"
samples = 60
features = 8
sparsity = 0.8
label_noise = 0.0
seed = 3

[regularization]
l1 = 0.0
l2 = 1e-6
placement = "regularizer"

[run]
epochs = 1
seeds = [1]
out = "{}"

[[algorithm]]
kind = "prox_gd"
"#,
        dir.path().join("fit").display()
    );
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let built = experiment::build_problem(&config).unwrap();
    let x_star = experiment::reference_solution(&built, &config).unwrap();
    let mut errors = 0usize;
    for (row, &label) in built.dataset.rows.iter().zip(&built.dataset.labels) {
        let margin: f64 = row.iter().map(|&(i, v)| v * x_star[i]).sum();
        if (margin > 0.0) != label {
            errors += 1;
        }
    }
    let rate = errors as f64 / built.dataset.len() as f64;
    assert!(rate <= 1e-3, "misclassification {rate}");
}

#[test]
fn federated_runner_produces_server_prox_counts() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
[dataset]
kind = "synthetic"
samples = 24
features = 5
sparsity = 0.7
label_noise = 0.0
seed = 21

[regularization]
l1 = 0.005
l2 = 0.05
placement = "regularizer"

[run]
epochs = 6
seeds = [4]
out = "{}"

[[algorithm]]
kind = "fed_rr"

[federated]
clients = 3
partition = "iid"
"#,
        dir.path().join("fed").display()
    );
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let report = experiment::run_experiment(&config, None).unwrap();
    assert_eq!(report.failure_count, 0);
    let trace = report.cells[0].outcome.as_ref().unwrap();
    assert_eq!(trace.final_record().prox_calls, 6);
    // 3 clients x 8 padded slots x 6 epochs
    assert_eq!(trace.final_record().grad_calls, 3 * 8 * 6);
    let steps = trace.client_steps.as_ref().unwrap();
    assert!(steps.iter().all(|s| s.real + s.padded == 8 * 6));
}

#[test]
fn tuned_and_decreasing_schedules_run_through_the_harness() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("schedules");
    let text = format!(
        r#"
[dataset]
kind = "synthetic"
samples = 16
features = 5
sparsity = 0.7
label_noise = 0.0
seed = 29

[regularization]
l1 = 0.005
l2 = 0.2
placement = "regularizer"

[run]
epochs = 30
seeds = [3]
out = "{}"
record_objective = false

[[algorithm]]
kind = "prox_rr"
schedule = "tuned"
epsilon = 1e-3

[[algorithm]]
kind = "prox_rr"
schedule = "decreasing"
"#,
        out.display()
    );
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let report = experiment::run_experiment(&config, None).unwrap();
    assert_eq!(report.failure_count, 0);
    let built = experiment::build_problem(&config).unwrap();
    let cap = 1.0 / built.l_max + 1e-15;

    let tuned = report.cells[0].outcome.as_ref().unwrap();
    for record in tuned.records.iter().skip(1) {
        assert!(record.stepsize > 0.0 && record.stepsize <= cap);
        assert!(record.objective.is_none());
    }

    let decreasing = report.cells[1].outcome.as_ref().unwrap();
    let steps: Vec<f64> = decreasing.records.iter().skip(1).map(|r| r.stepsize).collect();
    assert!(steps.windows(2).all(|w| w[1] <= w[0] + 1e-15));
    assert!(steps.iter().all(|&g| g <= cap));
    assert!(steps.last().unwrap() < steps.first().unwrap(), "schedule never decayed");

    // record_objective = false keeps the schema: objective column is NaN
    let csv =
        std::fs::read_to_string(out.join("00_prox_rr-tuned_seed3.csv")).unwrap();
    let second_line = csv.lines().nth(1).unwrap();
    assert_eq!(second_line.split(',').count(), 6);
    assert!(second_line.split(',').nth(3).unwrap() == "NaN");
}

#[test]
fn too_many_clients_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = format!(
        r#"
[dataset]
kind = "synthetic"
samples = 3
features = 4
sparsity = 1.0
label_noise = 0.0
seed = 1

[regularization]
l1 = 0.0
l2 = 0.1
placement = "regularizer"

[run]
epochs = 2
seeds = [1]
out = "{}"

[[algorithm]]
kind = "fed_rr"

[federated]
clients = 5
partition = "by_shard"
"#,
        dir.path().join("x").display()
    );
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let err = experiment::run_experiment(&config, None).unwrap_err();
    assert!(err.to_string().contains("clients"), "{err}");
}

#[test]
fn libsvm_file_runs_end_to_end() {
    let dir = tempfile::tempdir().unwrap();
    let data_path = dir.path().join("tiny.libsvm");
    let mut lines = String::new();
    for i in 0..12 {
        let label = if i % 2 == 0 { "+1" } else { "-1" };
        let sign = if i % 2 == 0 { 1.0 } else { -1.0 };
        lines.push_str(&format!(
            "{label} 1:{} 3:{}\n",
            sign * (1.0 + 0.1 * i as f64),
            sign * 0.5
        ));
    }
    std::fs::write(&data_path, lines).unwrap();

    let out = dir.path().join("out");
    let text = format!(
        r#"
[dataset]
kind = "libsvm"
path = "{}"

[regularization]
l1 = 0.01
l2 = 0.1
placement = "regularizer"

[run]
epochs = 8
seeds = [1, 2]
out = "{}"

[[algorithm]]
kind = "prox_rr"
"#,
        data_path.display(),
        out.display()
    );
    let config = ExperimentConfig::from_toml(&text).unwrap();
    let report = experiment::run_experiment(&config, None).unwrap();
    assert_eq!(report.failure_count, 0);
    assert_eq!(report.x_star.len(), 3); // max 1-based index was 3
    let trace = report.cells[0].outcome.as_ref().unwrap();
    assert_eq!(trace.final_record().grad_calls, 12 * 8);
    assert!(out.join("00_prox_rr-constant_seed2.csv").exists());
}

#[test]
fn ridge_placement_does_not_move_the_minimizer() {
    // l2 inside the losses or inside the regularizer describes the same
    // composite objective, so the reference solutions agree
    let dir = tempfile::tempdir().unwrap();
    let base = format!(
        r#"
[dataset]
kind = "synthetic"
samples = 20
features = 6
sparsity = 0.7
label_noise = 0.0
seed = 17

[regularization]
l1 = 0.01
l2 = 0.3
placement = "PLACEMENT"

[run]
epochs = 3
seeds = [1]
out = "{}"

[[algorithm]]
kind = "prox_rr"
"#,
        dir.path().join("placement").display()
    );
    let in_reg =
        ExperimentConfig::from_toml(&base.replace("PLACEMENT", "regularizer")).unwrap();
    let in_loss = ExperimentConfig::from_toml(&base.replace("PLACEMENT", "loss")).unwrap();
    let built_reg = experiment::build_problem(&in_reg).unwrap();
    let built_loss = experiment::build_problem(&in_loss).unwrap();

    // the loss wiring folds l2 into each component's smoothness constant
    assert!((built_loss.l_max - (built_reg.l_max + 0.3)).abs() < 1e-12);
    assert!(built_loss.problem.min_component_strong_convexity() >= 0.3);

    let star_reg = experiment::reference_solution(&built_reg, &in_reg).unwrap();
    let star_loss = experiment::reference_solution(&built_loss, &in_loss).unwrap();
    let dist: f64 = star_reg
        .iter()
        .zip(&star_loss)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(dist <= 1e-8, "placements disagree by {dist}");
}

#[test]
fn diagnose_reports_radius_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let config = demo_config(&dir.path().join("diag"), 3);
    let rows = experiment::diagnose(&config, 100, 7).unwrap();
    let names: Vec<&str> = rows.iter().map(|(n, _)| n.as_str()).collect();
    for expected in
        ["n", "l_max", "sigma_star_sq", "shuffling_radius_bound", "shuffling_radius_estimate"]
    {
        assert!(names.contains(&expected), "missing {expected}");
    }
    let bound: f64 = rows
        .iter()
        .find(|(n, _)| n == "shuffling_radius_bound")
        .map(|(_, v)| v.parse().unwrap())
        .unwrap();
    let estimate: f64 = rows
        .iter()
        .find(|(n, _)| n == "shuffling_radius_estimate")
        .map(|(_, v)| v.parse().unwrap())
        .unwrap();
    assert!(bound >= estimate, "bound {bound} below estimate {estimate}");
}
