//! Command-line front end: run experiment plans, dump generated scenarios,
//! and cross-check the evaluator against the straight-line oracle.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use udn_offload::harness::ExperimentPlan;
use udn_offload::oracle;
use udn_offload::scenario::{generate_scenario, ScenarioConfig};

#[derive(Parser)]
#[command(name = "udn-offload", about = "Offloading optimizer experiment harness", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment plan and write CSV results.
    Run {
        /// Plan file with key=value lines.
        #[arg(long)]
        plan: PathBuf,
        /// Output directory for reports.csv, metrics.csv, timings.csv and traces/.
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 picks the default for this machine.
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// Generate one scenario and dump its tables as CSV.
    ScenarioDump {
        /// Scenario config file with key=value lines; omit for defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Exhaustively compare the evaluator against an independent
    /// re-derivation of the objective on small random instances.
    OracleCheck {
        #[arg(long, default_value_t = 50)]
        instances: usize,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Run { plan, out, threads } => {
            let plan = ExperimentPlan::from_file(&plan)?;
            let result = udn_offload::harness::run_experiment(&plan, Some(&out), threads)?;
            println!("{} runs -> {}", result.runs.len(), out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::ScenarioDump { config, out } => {
            let cfg = match config {
                Some(path) => {
                    let text = std::fs::read_to_string(path)?;
                    ScenarioConfig::from_key_values(&text)?
                }
                None => ScenarioConfig::default(),
            };
            let scenario = generate_scenario(&cfg)?;
            scenario.write_csv_dump(&out)?;
            println!("scenario (seed {}) -> {}", cfg.seed, out.display());
            Ok(ExitCode::SUCCESS)
        }
        Command::OracleCheck { instances, seed } => {
            let result = oracle::check_batch(instances, seed)?;
            println!(
                "checked {} instances / {} points, max relative error {:.3e}",
                result.instances, result.points, result.max_rel_error
            );
            if result.failures.is_empty() && result.max_rel_error <= 1e-9 {
                println!("oracle check: PASS");
                Ok(ExitCode::SUCCESS)
            } else {
                for f in &result.failures {
                    eprintln!(
                        "instance {}: evaluator {:.17e} vs oracle {:.17e} (rel {:.3e})",
                        f.instance, f.evaluator_fitness, f.oracle_fitness, f.rel_error
                    );
                }
                println!("oracle check: FAIL");
                Ok(ExitCode::FAILURE)
            }
        }
    }
}
