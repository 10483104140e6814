//! Experiment execution: builds the composite problem a configuration
//! describes, solves the reference solution once, runs every
//! (algorithm, seed) cell, and writes per-cell traces plus a seed-averaged
//! summary as CSV.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;

use reshuffle_core::algorithms::{prox_gd, prox_rr, prox_sgd, rr_heuristic};
use reshuffle_core::analysis::shuffling_radius_bound;
use reshuffle_core::federated::{fed_rr, FedOptions};
use reshuffle_core::losses::LogisticComponent;
use reshuffle_core::problem::SmoothComponent;
use reshuffle_core::prox::ElasticNet;
use reshuffle_core::reference::solve_reference;
use reshuffle_core::reformulate::build_federated;
use reshuffle_core::rng::PermutationMode;
use reshuffle_core::schedules::{
    constant_stepsize, tuned_stepsize_rr, Schedule, ScheduleParams, StepFamily,
    StrongConvexitySite,
};
use reshuffle_core::trace::{RunTrace, TraceOpts};
use reshuffle_core::{FederatedProblem64, Problem64};

use crate::config::{
    AlgorithmConfig, AlgorithmKind, DatasetConfig, ExperimentConfig, L2Spec, Placement,
    ScheduleKind,
};
use crate::data::{parse_libsvm, partition_rows, synth_logreg, SparseDataset};
use crate::error::{HarnessError, Result};

/// Fixed trace schema; documented in the README.
pub const TRACE_HEADER: &str = "epoch,stepsize,dist_sq_to_opt,objective,grad_calls,prox_calls";

/// Fixed summary schema.
pub const SUMMARY_HEADER: &str =
    "algorithm,epoch,stepsize,mean_dist_sq_to_opt,mean_objective,grad_calls,prox_calls,seeds";

const REFERENCE_MAX_ITERS: usize = 5_000_000;

/// The problem a configuration describes, plus resolved constants.
pub struct BuiltProblem {
    pub dataset: SparseDataset,
    pub problem: Problem64,
    pub federated: Option<FederatedProblem64>,
    /// Resolved ridge coefficient (the `"auto"` rule is `L_max / N` with the
    /// plain logistic constants).
    pub l2: f64,
    pub l_max: f64,
    /// Strong convexity of the composite objective: regularizer constant
    /// plus the smallest per-component constant.
    pub mu_total: f64,
}

pub fn load_dataset(config: &ExperimentConfig) -> Result<SparseDataset> {
    match &config.dataset {
        DatasetConfig::Synthetic { samples, features, sparsity, label_noise, seed } => {
            Ok(synth_logreg(*samples, *features, *sparsity, *label_noise, *seed))
        }
        DatasetConfig::Libsvm { path, features } => parse_libsvm(path, *features),
    }
}

/// Builds the elastic-net logistic problem with the configured ridge
/// placement, plus the federated split when requested.
pub fn build_problem(config: &ExperimentConfig) -> Result<BuiltProblem> {
    let dataset = load_dataset(config)?;
    let n = dataset.len();

    // base smoothness uses the plain logistic constants |a|^2 / 4
    let base_l_max = dataset
        .rows
        .iter()
        .map(|row| row.iter().map(|&(_, v)| v * v).sum::<f64>() / 4.0)
        .fold(0.0f64, f64::max);
    if base_l_max <= 0.0 {
        return Err(HarnessError::dataset("all feature rows are empty"));
    }
    let l2 = match config.regularization.l2 {
        L2Spec::Value(v) => v,
        L2Spec::Auto => base_l_max / n as f64,
    };
    let (in_loss_l2, reg_l2) = match config.regularization.placement {
        Placement::Loss => (l2, 0.0),
        Placement::Regularizer => (0.0, l2),
    };
    let regularizer = Arc::new(
        ElasticNet::new(config.regularization.l1, reg_l2)
            .map_err(HarnessError::Compute)?,
    );

    let component = |row: &Vec<(usize, f64)>, label: bool| -> Result<Arc<dyn SmoothComponent<f64>>> {
        Ok(Arc::new(
            LogisticComponent::new(row.clone(), label, in_loss_l2, dataset.dim)
                .map_err(HarnessError::Compute)?,
        ))
    };

    let components: Vec<Arc<dyn SmoothComponent<f64>>> = dataset
        .rows
        .iter()
        .zip(&dataset.labels)
        .map(|(row, &label)| component(row, label))
        .collect::<Result<_>>()?;
    let problem = Problem64::new(components, regularizer.clone()).map_err(HarnessError::Compute)?;

    let federated = match (&config.federated, config.algorithms.iter().any(|a| a.kind.is_federated()))
    {
        (Some(fed_config), _) => {
            let parts = partition_rows(
                &dataset,
                fed_config.clients,
                fed_config.partition,
                dataset_seed(config),
            );
            if parts.iter().any(Vec::is_empty) {
                return Err(HarnessError::config(
                    "more federated clients than data rows",
                ));
            }
            let clients: Vec<Vec<Arc<dyn SmoothComponent<f64>>>> = parts
                .iter()
                .map(|indices| {
                    indices
                        .iter()
                        .map(|&i| component(&dataset.rows[i], dataset.labels[i]))
                        .collect::<Result<_>>()
                })
                .collect::<Result<_>>()?;
            Some(build_federated(clients, regularizer, None).map_err(HarnessError::Compute)?)
        }
        (None, false) => None,
        (None, true) => {
            return Err(HarnessError::config(
                "federated algorithms need a [federated] section",
            ))
        }
    };

    let l_max = problem.l_max();
    let mu_total =
        problem.regularizer().strong_convexity() + problem.min_component_strong_convexity();
    Ok(BuiltProblem { dataset, problem, federated, l2, l_max, mu_total })
}

fn dataset_seed(config: &ExperimentConfig) -> u64 {
    match &config.dataset {
        DatasetConfig::Synthetic { seed, .. } => *seed,
        DatasetConfig::Libsvm { .. } => 0,
    }
}

fn resolve_schedule(
    built: &BuiltProblem,
    config: &ExperimentConfig,
    algorithm: &AlgorithmConfig,
    x_star: &[f64],
) -> Result<Schedule<f64>> {
    let family = match algorithm.kind {
        AlgorithmKind::ProxSgd | AlgorithmKind::ProxGd => StepFamily::Sgd,
        _ => StepFamily::Reshuffle,
    };
    let mut params = ScheduleParams::new(
        built.l_max,
        built.mu_total,
        built.problem.n(),
        config.run.epochs,
    );
    match algorithm.schedule {
        ScheduleKind::Constant => {
            let gamma = match algorithm.gamma {
                Some(g) => g,
                None => constant_stepsize(&params, family).map_err(HarnessError::Compute)?,
            };
            Ok(Schedule::Constant(gamma))
        }
        ScheduleKind::Decreasing => {
            if !(built.mu_total > 0.0) {
                return Err(HarnessError::config(
                    "decreasing schedule needs strong convexity (l2 > 0)",
                ));
            }
            Ok(Schedule::Decreasing(params))
        }
        ScheduleKind::Tuned => {
            if !(built.mu_total > 0.0) {
                return Err(HarnessError::config(
                    "tuned schedule needs strong convexity (l2 > 0)",
                ));
            }
            params.epsilon = algorithm.epsilon;
            params.sigma_rad =
                Some(shuffling_radius_bound(&built.problem, x_star).sqrt());
            let site = match config.regularization.placement {
                Placement::Loss => StrongConvexitySite::Components,
                Placement::Regularizer => StrongConvexitySite::Regularizer,
            };
            let gamma = tuned_stepsize_rr(&params, site).map_err(HarnessError::Compute)?;
            Ok(Schedule::Constant(gamma))
        }
    }
}

fn run_cell(
    built: &BuiltProblem,
    config: &ExperimentConfig,
    algorithm: &AlgorithmConfig,
    seed: u64,
    x_star: &[f64],
) -> Result<RunTrace<f64>> {
    let schedule = resolve_schedule(built, config, algorithm, x_star)?;
    let epochs = config.run.epochs;
    let d = built.problem.dim();
    let x0 = vec![0.0; d];
    let opts = TraceOpts {
        x_star: Some(x_star),
        record_objective: config.run.record_objective,
        keep_iterates: false,
    };
    let trace = match algorithm.kind {
        AlgorithmKind::ProxRr => {
            prox_rr(&built.problem, &x0, &schedule, epochs, PermutationMode::Reshuffle, seed, opts)?
                .1
        }
        AlgorithmKind::ProxSo => {
            prox_rr(
                &built.problem,
                &x0,
                &schedule,
                epochs,
                PermutationMode::ShuffleOnce,
                seed,
                opts,
            )?
            .1
        }
        AlgorithmKind::RrHeuristic => {
            rr_heuristic(&built.problem, &x0, &schedule, epochs, seed, opts)?.1
        }
        AlgorithmKind::ProxSgd => {
            let gamma = schedule.epoch_stepsize(0).map_err(HarnessError::Compute)?;
            let steps = built.problem.n() * epochs;
            prox_sgd(&built.problem, &x0, |_| gamma, steps, seed, opts)?.1
        }
        AlgorithmKind::ProxGd => {
            let gamma = schedule.epoch_stepsize(0).map_err(HarnessError::Compute)?;
            prox_gd(&built.problem, &x0, gamma, epochs, opts)?.1
        }
        AlgorithmKind::FedRr | AlgorithmKind::FedSo => {
            let fed = built.federated.as_ref().expect("validated");
            let mode = if algorithm.kind == AlgorithmKind::FedRr {
                PermutationMode::Reshuffle
            } else {
                PermutationMode::ShuffleOnce
            };
            fed_rr(fed, &x0, &schedule, epochs, mode, seed, FedOptions::default(), opts)?.1
        }
    };
    Ok(trace)
}

fn format_float(v: f64) -> String {
    if v.is_nan() {
        "NaN".to_string()
    } else {
        format!("{v}")
    }
}

fn render_trace_csv(trace: &RunTrace<f64>) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for record in &trace.records {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            record.epoch,
            format_float(record.stepsize),
            format_float(record.dist_sq.map_or(f64::NAN, |v| v)),
            format_float(record.objective.map_or(f64::NAN, |v| v)),
            record.grad_calls,
            record.prox_calls,
        ));
    }
    out
}

/// Result of one (algorithm, seed) cell.
#[derive(Debug)]
pub struct CellOutcome {
    pub label: String,
    pub seed: u64,
    pub outcome: std::result::Result<RunTrace<f64>, String>,
}

/// Everything a finished experiment produced.
#[derive(Debug)]
pub struct ExperimentReport {
    pub out_dir: PathBuf,
    pub x_star: Vec<f64>,
    pub cells: Vec<CellOutcome>,
    pub failure_count: usize,
}

fn write_text(path: &Path, content: &str) -> Result<()> {
    std::fs::write(path, content.as_bytes())?;
    Ok(())
}

/// Solves the reference problem for a configuration (cached by callers).
pub fn reference_solution(built: &BuiltProblem, config: &ExperimentConfig) -> Result<Vec<f64>> {
    Ok(solve_reference(&built.problem, config.run.reference_tol, REFERENCE_MAX_ITERS)?)
}

/// Runs every (algorithm, seed) cell and writes trace, summary, reference and
/// failure files under the configured output directory.
///
/// Cells run concurrently; outputs are written in a fixed order, so reruns of
/// the same configuration produce bitwise-identical files. Divergent cells
/// are recorded in `failures.csv` and do not abort the run.
pub fn run_experiment(
    config: &ExperimentConfig,
    threads: Option<usize>,
) -> Result<ExperimentReport> {
    config.validate()?;
    let built = build_problem(config)?;
    let x_star = reference_solution(&built, config)?;

    let labels = config.cell_labels();
    let mut cells: Vec<(String, &AlgorithmConfig, u64)> = Vec::new();
    for (label, algorithm) in labels.iter().zip(&config.algorithms) {
        for &seed in &config.run.seeds {
            cells.push((label.clone(), algorithm, seed));
        }
    }

    let execute = || -> Vec<CellOutcome> {
        cells
            .par_iter()
            .map(|(label, algorithm, seed)| CellOutcome {
                label: label.clone(),
                seed: *seed,
                outcome: run_cell(&built, config, algorithm, *seed, &x_star)
                    .map_err(|e| e.to_string()),
            })
            .collect()
    };
    let outcomes: Vec<CellOutcome> = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| HarnessError::config(format!("thread pool: {e}")))?
            .install(execute),
        None => execute(),
    };

    let out_dir = config.run.out.clone();
    std::fs::create_dir_all(&out_dir)?;
    write_text(&out_dir.join("config.toml"), &config.to_toml())?;

    let mut x_star_csv = String::from("index,value\n");
    for (i, v) in x_star.iter().enumerate() {
        x_star_csv.push_str(&format!("{i},{}\n", format_float(*v)));
    }
    write_text(&out_dir.join("x_star.csv"), &x_star_csv)?;

    let mut failures = String::from("algorithm,seed,error\n");
    let mut failure_count = 0usize;
    for cell in &outcomes {
        match &cell.outcome {
            Ok(trace) => {
                let path = out_dir.join(format!("{}_seed{}.csv", cell.label, cell.seed));
                write_text(&path, &render_trace_csv(trace))?;
            }
            Err(message) => {
                failures.push_str(&format!(
                    "{},{},\"{}\"\n",
                    cell.label,
                    cell.seed,
                    message.replace('"', "'")
                ));
                failure_count += 1;
            }
        }
    }
    write_text(&out_dir.join("failures.csv"), &failures)?;

    // seed-averaged curves per algorithm
    let mut summary = String::from(SUMMARY_HEADER);
    summary.push('\n');
    for label in &labels {
        let traces: Vec<&RunTrace<f64>> = outcomes
            .iter()
            .filter(|c| &c.label == label)
            .filter_map(|c| c.outcome.as_ref().ok())
            .collect();
        if traces.is_empty() {
            continue;
        }
        let records = traces[0].records.len();
        debug_assert!(traces.iter().all(|t| t.records.len() == records));
        for row in 0..records {
            let count = traces.len() as f64;
            let mean_dist = traces
                .iter()
                .map(|t| t.records[row].dist_sq.unwrap_or(f64::NAN))
                .sum::<f64>()
                / count;
            let mean_obj = traces
                .iter()
                .map(|t| t.records[row].objective.map_or(f64::NAN, |v| v))
                .sum::<f64>()
                / count;
            let reference = &traces[0].records[row];
            summary.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                label,
                reference.epoch,
                format_float(reference.stepsize),
                format_float(mean_dist),
                format_float(mean_obj),
                reference.grad_calls,
                reference.prox_calls,
                traces.len(),
            ));
        }
    }
    write_text(&out_dir.join("summary.csv"), &summary)?;

    Ok(ExperimentReport { out_dir, x_star, cells: outcomes, failure_count })
}

/// Key diagnostic quantities for a configuration, as (name, value) rows.
pub fn diagnose(config: &ExperimentConfig, num_perms: usize, seed: u64) -> Result<Vec<(String, String)>> {
    config.validate()?;
    let built = build_problem(config)?;
    let x_star = reference_solution(&built, config)?;
    let problem = &built.problem;
    let constants = problem.smoothness_constants();
    let gamma = 1.0 / constants.l_max;

    let grad_norm = reshuffle_core::linalg::norm(&problem.smooth_gradient(&x_star));
    let sigma_star_sq = reshuffle_core::analysis::variance_at_opt(problem, &x_star);
    let bound = shuffling_radius_bound(problem, &x_star);
    let estimate = reshuffle_core::analysis::shuffling_radius_empirical(
        problem, &x_star, gamma, num_perms, seed,
    )?;

    let mut rows: Vec<(String, String)> = vec![
        ("n".into(), problem.n().to_string()),
        ("dim".into(), problem.dim().to_string()),
        ("l_max".into(), format_float(constants.l_max)),
        ("l_bar".into(), format_float(constants.l_bar)),
        ("l2".into(), format_float(built.l2)),
        ("mu_total".into(), format_float(built.mu_total)),
        ("gamma".into(), format_float(gamma)),
        ("grad_norm_at_opt".into(), format_float(grad_norm)),
        ("sigma_star_sq".into(), format_float(sigma_star_sq)),
        ("shuffling_radius_bound".into(), format_float(bound)),
        ("shuffling_radius_estimate".into(), format_float(estimate.value)),
        ("shuffling_radius_exact".into(), estimate.exact.to_string()),
    ];
    if let Some(se) = estimate.std_error {
        rows.push(("shuffling_radius_std_error".into(), format_float(se)));
    }
    if let Some(fed) = &built.federated {
        rows.push(("clients".into(), fed.num_clients().to_string()));
        rows.push(("slots_per_client".into(), fed.slots().to_string()));
        let fed_bound = reshuffle_core::analysis::fed_shuffling_radius_bound(fed, &x_star);
        rows.push(("fed_radius_bound".into(), format_float(fed_bound)));
        for m in 0..fed.num_clients() {
            let variance = reshuffle_core::analysis::client_variance_at_opt(fed, m, &x_star);
            rows.push((format!("client_{m}_variance"), format_float(variance)));
        }
    }
    Ok(rows)
}
