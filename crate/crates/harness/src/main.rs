//! `reshuffle` command line: run experiments, solve reference solutions,
//! report shuffling diagnostics, and validate configurations.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use reshuffle_harness::config::ExperimentConfig;
use reshuffle_harness::error::Result;
use reshuffle_harness::experiment;

#[derive(Parser)]
#[command(name = "reshuffle", version, about = "Shuffling-based composite optimization harness")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) cell of an experiment configuration.
    Run {
        config: PathBuf,
        /// Replace the configured seed list with a single seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the configured output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads for concurrent cells (default: rayon's choice).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Solve the reference problem and write `x_star.csv`.
    SolveRef {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Report shuffling-radius diagnostics for a configuration.
    Diagnose {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Permutation samples when exact enumeration is not tractable.
        #[arg(long, default_value_t = 1000)]
        num_perms: usize,
        /// Sampling seed for the Monte-Carlo estimate.
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Parse and validate a configuration.
    Validate { config: PathBuf },
}

fn load(path: &PathBuf, seed: Option<u64>, out: Option<PathBuf>) -> Result<ExperimentConfig> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(seed) = seed {
        config.run.seeds = vec![seed];
    }
    if let Some(out) = out {
        config.run.out = out;
    }
    config.validate()?;
    Ok(config)
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Run { config, seed, out, threads } => {
            let config = load(&config, seed, out)?;
            let report = experiment::run_experiment(&config, threads)?;
            for cell in &report.cells {
                match &cell.outcome {
                    Ok(trace) => {
                        let record = trace.final_record();
                        println!(
                            "{} seed {}: dist_sq {:.6e}, grad_calls {}, prox_calls {}",
                            cell.label,
                            cell.seed,
                            record.dist_sq.unwrap_or(f64::NAN),
                            record.grad_calls,
                            record.prox_calls
                        );
                    }
                    Err(message) => {
                        eprintln!("{} seed {} FAILED: {message}", cell.label, cell.seed)
                    }
                }
            }
            if report.failure_count > 0 {
                eprintln!(
                    "{} cell(s) failed; see {}",
                    report.failure_count,
                    report.out_dir.join("failures.csv").display()
                );
            }
            println!("results written to {}", report.out_dir.display());
            Ok(())
        }
        Command::SolveRef { config, out } => {
            let config = load(&config, None, out)?;
            let built = experiment::build_problem(&config)?;
            let x_star = experiment::reference_solution(&built, &config)?;
            std::fs::create_dir_all(&config.run.out)?;
            let mut csv = String::from("index,value\n");
            for (i, v) in x_star.iter().enumerate() {
                csv.push_str(&format!("{i},{v}\n"));
            }
            let path = config.run.out.join("x_star.csv");
            std::fs::write(&path, csv)?;
            println!(
                "objective at x_star: {:.12e}",
                built.problem.objective(&x_star)
            );
            println!("reference written to {}", path.display());
            Ok(())
        }
        Command::Diagnose { config, out, num_perms, seed } => {
            let config = load(&config, None, out)?;
            let rows = experiment::diagnose(&config, num_perms, seed)?;
            let mut csv = String::from("quantity,value\n");
            for (name, value) in &rows {
                println!("{name}: {value}");
                csv.push_str(&format!("{name},{value}\n"));
            }
            std::fs::create_dir_all(&config.run.out)?;
            let path = config.run.out.join("diagnosis.csv");
            std::fs::write(&path, csv)?;
            println!("diagnosis written to {}", path.display());
            Ok(())
        }
        Command::Validate { config } => {
            let config = ExperimentConfig::load(&config)?;
            config.validate()?;
            println!("configuration ok: {} algorithm cell(s)", config.algorithms.len());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => {
            eprintln!("error: {error}");
            ExitCode::from(error.exit_code() as u8)
        }
    }
}
