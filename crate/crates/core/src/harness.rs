//! Experiment harness: parse a key=value plan, run every
//! (sweep value, algorithm, seed) combination, and dump traces, per-run
//! reports and aggregated metrics as CSV. All numeric output is fully
//! deterministic; wall-clock timings go to their own file so the rest can be
//! compared byte-for-byte across thread counts.

use std::fmt;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rayon::ThreadPoolBuilder;

use crate::baselines::{minimize_spend, minimize_time};
use crate::evaluator::{fitness, EvaluationReport};
use crate::optimizer::{run, OptimizerParams, TracePoint, Variant};
use crate::scenario::{generate_scenario, ConfigError, ScenarioConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    NumImds,
    PartitionFactor,
}

impl SweepVariable {
    fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "num_imds" => Ok(SweepVariable::NumImds),
            "partition_factor" => Ok(SweepVariable::PartitionFactor),
            other => Err(ConfigError::BadValue {
                key: "sweep_variable".into(),
                msg: format!("unknown sweep variable `{other}`"),
            }),
        }
    }
}

impl fmt::Display for SweepVariable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SweepVariable::NumImds => write!(f, "num_imds"),
            SweepVariable::PartitionFactor => write!(f, "partition_factor"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    Iwoa,
    Woa,
    Cmt,
    Cms,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Iwoa, Algorithm::Woa, Algorithm::Cmt, Algorithm::Cms];

    pub fn name(self) -> &'static str {
        match self {
            Algorithm::Iwoa => "IWOA",
            Algorithm::Woa => "WOA",
            Algorithm::Cmt => "CMT",
            Algorithm::Cms => "CMS",
        }
    }

    fn parse(s: &str) -> Result<Self, ConfigError> {
        match s {
            "IWOA" => Ok(Algorithm::Iwoa),
            "WOA" => Ok(Algorithm::Woa),
            "CMT" => Ok(Algorithm::Cmt),
            "CMS" => Ok(Algorithm::Cms),
            other => Err(ConfigError::BadValue {
                key: "algorithms".into(),
                msg: format!("unknown algorithm `{other}`"),
            }),
        }
    }
}

/// A full experiment: a base scenario configuration, one swept variable, a
/// seed list and the algorithms to compare.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentPlan {
    pub base: ScenarioConfig,
    pub sweep_variable: SweepVariable,
    pub sweep_values: Vec<f64>,
    pub seeds: Vec<u64>,
    pub algorithms: Vec<Algorithm>,
    pub iterations: usize,
    pub population_size: usize,
}

impl Default for ExperimentPlan {
    fn default() -> Self {
        ExperimentPlan {
            base: ScenarioConfig::default(),
            sweep_variable: SweepVariable::NumImds,
            sweep_values: vec![5.0, 10.0, 15.0, 20.0],
            seeds: (1..=20).collect(),
            algorithms: Algorithm::ALL.to_vec(),
            iterations: 500,
            population_size: 32,
        }
    }
}

fn parse_list<T, E>(value: &str, f: impl Fn(&str) -> Result<T, E>) -> Result<Vec<T>, E> {
    value.split(',').map(|v| f(v.trim())).collect()
}

impl ExperimentPlan {
    /// Parse `key=value` lines; `#` starts a comment. Plan-level keys are
    /// handled here, anything else must be a scenario configuration key.
    pub fn from_key_values(text: &str) -> Result<Self, ConfigError> {
        let mut plan = ExperimentPlan::default();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Invalid(format!("plan line {}: `{}`", lineno + 1, line)))?;
            let (key, value) = (key.trim(), value.trim());
            let bad = |k: &str, v: &str| ConfigError::BadValue {
                key: k.into(),
                msg: format!("cannot parse `{v}`"),
            };
            match key {
                "sweep_variable" => plan.sweep_variable = SweepVariable::parse(value)?,
                "sweep_values" => {
                    plan.sweep_values =
                        parse_list(value, |v| v.parse::<f64>().map_err(|_| bad(key, value)))?;
                }
                "seeds" => {
                    plan.seeds = parse_list(value, |v| v.parse::<u64>().map_err(|_| bad(key, value)))?;
                }
                "algorithms" => plan.algorithms = parse_list(value, Algorithm::parse)?,
                "iterations" => plan.iterations = value.parse().map_err(|_| bad(key, value))?,
                "population_size" => plan.population_size = value.parse().map_err(|_| bad(key, value))?,
                _ => plan.base.set_key(key, value)?,
            }
        }
        if plan.sweep_values.is_empty() || plan.seeds.is_empty() || plan.algorithms.is_empty() {
            return Err(ConfigError::Invalid(
                "sweep_values, seeds and algorithms must be non-empty".into(),
            ));
        }
        Ok(plan)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path)?;
        Self::from_key_values(&text)
    }

    fn config_for(&self, value: f64, seed: u64) -> ScenarioConfig {
        let mut cfg = self.base.clone();
        cfg.seed = seed;
        match self.sweep_variable {
            SweepVariable::NumImds => cfg.num_imds = value.round() as usize,
            SweepVariable::PartitionFactor => cfg.partition_factor = value,
        }
        cfg
    }
}

/// Outcome of a single (sweep value, algorithm, seed) run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunRecord {
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub seed: u64,
    pub report: EvaluationReport,
    pub trace: Vec<TracePoint>,
    pub max_share_error: f64,
    pub wall_secs: f64,
}

/// One aggregated row per (sweep value, algorithm).
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub sweep_variable: SweepVariable,
    pub sweep_value: f64,
    pub algorithm: Algorithm,
    pub mean_total_delay: f64,
    pub mean_local_energy: f64,
    pub mean_total_energy: f64,
    pub time_support_ratio: f64,
    pub cost_support_ratio: f64,
    pub mean_best_fitness: f64,
}

#[derive(Debug, Clone)]
pub struct ExperimentResult {
    pub runs: Vec<RunRecord>,
    pub metrics: Vec<MetricsRow>,
}

fn run_one(plan: &ExperimentPlan, value: f64, algorithm: Algorithm, seed: u64) -> Result<RunRecord, ConfigError> {
    let cfg = plan.config_for(value, seed);
    let scenario = generate_scenario(&cfg)?;
    let started = Instant::now();
    let (report, trace, max_share_error) = match algorithm {
        Algorithm::Iwoa | Algorithm::Woa => {
            let params = OptimizerParams {
                population_size: plan.population_size,
                iterations: plan.iterations,
                rng_seed: seed,
                variant: if algorithm == Algorithm::Iwoa { Variant::Improved } else { Variant::Classic },
            };
            let result = run(&scenario, &params);
            (result.best.report, result.trace, result.max_share_error)
        }
        Algorithm::Cmt | Algorithm::Cms => {
            let decision = if algorithm == Algorithm::Cmt {
                minimize_time(&scenario)
            } else {
                minimize_spend(&scenario)
            };
            let report = fitness(&scenario, &decision);
            let err = report.share_rel_error;
            (report, Vec::new(), err)
        }
    };
    Ok(RunRecord {
        sweep_value: value,
        algorithm,
        seed,
        report,
        trace,
        max_share_error,
        wall_secs: started.elapsed().as_secs_f64(),
    })
}

/// Fraction of devices in one solution meeting their deadline, resp. their
/// breach-cost cap. An empty report counts as full support.
pub fn device_support(report: &EvaluationReport) -> (f64, f64) {
    if report.delay_violation.is_empty() {
        log::warn!("support ratio requested for an empty report");
        return (1.0, 1.0);
    }
    let n = report.delay_violation.len() as f64;
    let time = report.delay_violation.iter().filter(|&&v| v == 0.0).count() as f64;
    let cost = report.cost_violation.iter().filter(|&&v| v == 0.0).count() as f64;
    (time / n, cost / n)
}

fn aggregate(plan: &ExperimentPlan, runs: &[RunRecord]) -> Vec<MetricsRow> {
    let mut rows = Vec::new();
    for &value in &plan.sweep_values {
        for &algorithm in &plan.algorithms {
            let group: Vec<&RunRecord> = runs
                .iter()
                .filter(|r| r.sweep_value == value && r.algorithm == algorithm)
                .collect();
            if group.is_empty() {
                continue;
            }
            let n = group.len() as f64;
            let mean = |f: &dyn Fn(&RunRecord) -> f64| group.iter().map(|r| f(r)).sum::<f64>() / n;
            let time_support_ratio = mean(&|r| device_support(&r.report).0);
            let cost_support_ratio = mean(&|r| device_support(&r.report).1);
            rows.push(MetricsRow {
                sweep_variable: plan.sweep_variable,
                sweep_value: value,
                algorithm,
                mean_total_delay: mean(&|r| r.report.per_imd_delay.iter().sum::<f64>()),
                mean_local_energy: mean(&|r| r.report.local_energy),
                mean_total_energy: mean(&|r| r.report.total_energy),
                time_support_ratio,
                cost_support_ratio,
                mean_best_fitness: mean(&|r| r.report.fitness),
            });
        }
    }
    rows
}

fn write_trace_csv(path: &Path, trace: &[TracePoint]) -> Result<(), ConfigError> {
    let mut out = String::from("iteration,best_fitness,best_energy,feasible\n");
    for p in trace {
        out.push_str(&format!(
            "{},{:.17e},{:.17e},{}\n",
            p.iteration, p.best_fitness, p.best_energy, p.feasible
        ));
    }
    fs::write(path, out)?;
    Ok(())
}

fn write_outputs(plan: &ExperimentPlan, result: &ExperimentResult, out_dir: &Path) -> Result<(), ConfigError> {
    fs::create_dir_all(out_dir)?;
    let traces_dir = out_dir.join("traces");
    fs::create_dir_all(&traces_dir)?;

    let mut reports = String::from(
        "sweep_variable,sweep_value,algorithm,seed,total_energy,local_energy,total_delay,fitness,time_support,cost_support,max_share_error\n",
    );
    let mut timings = String::from("sweep_variable,sweep_value,algorithm,seed,wall_secs\n");
    for r in &result.runs {
        let (time_support, cost_support) = device_support(&r.report);
        reports.push_str(&format!(
            "{},{},{},{},{:.17e},{:.17e},{:.17e},{:.17e},{:.6},{:.6},{:.17e}\n",
            plan.sweep_variable,
            r.sweep_value,
            r.algorithm.name(),
            r.seed,
            r.report.total_energy,
            r.report.local_energy,
            r.report.per_imd_delay.iter().sum::<f64>(),
            r.report.fitness,
            time_support,
            cost_support,
            r.max_share_error,
        ));
        timings.push_str(&format!(
            "{},{},{},{},{:.6}\n",
            plan.sweep_variable,
            r.sweep_value,
            r.algorithm.name(),
            r.seed,
            r.wall_secs,
        ));
        if !r.trace.is_empty() {
            let name = format!("trace_{}_{}_{}_{}.csv", plan.sweep_variable, r.sweep_value, r.algorithm.name(), r.seed);
            write_trace_csv(&traces_dir.join(name), &r.trace)?;
        }
    }
    fs::write(out_dir.join("reports.csv"), reports)?;
    fs::write(out_dir.join("timings.csv"), timings)?;

    let mut metrics = String::from(
        "sweep_variable,sweep_value,algorithm,mean_total_delay,mean_local_energy,mean_total_energy,time_support_ratio,cost_support_ratio,mean_best_fitness\n",
    );
    for m in &result.metrics {
        metrics.push_str(&format!(
            "{},{},{},{:.17e},{:.17e},{:.17e},{:.6},{:.6},{:.17e}\n",
            m.sweep_variable,
            m.sweep_value,
            m.algorithm.name(),
            m.mean_total_delay,
            m.mean_local_energy,
            m.mean_total_energy,
            m.time_support_ratio,
            m.cost_support_ratio,
            m.mean_best_fitness,
        ));
    }
    fs::write(out_dir.join("metrics.csv"), metrics)?;
    Ok(())
}

/// Execute the plan. `threads = 0` uses the default pool size; any count
/// yields identical numeric output because parallelism only covers fitness
/// evaluation within an iteration. Writes CSVs when `out_dir` is given.
pub fn run_experiment(
    plan: &ExperimentPlan,
    out_dir: Option<&Path>,
    threads: usize,
) -> Result<ExperimentResult, ConfigError> {
    let mut builder = ThreadPoolBuilder::new();
    if threads > 0 {
        builder = builder.num_threads(threads);
    }
    let pool = builder
        .build()
        .map_err(|e| ConfigError::Invalid(format!("thread pool: {e}")))?;

    let mut runs = Vec::new();
    pool.install(|| -> Result<(), ConfigError> {
        for &value in &plan.sweep_values {
            for &algorithm in &plan.algorithms {
                for &seed in &plan.seeds {
                    runs.push(run_one(plan, value, algorithm, seed)?);
                }
            }
        }
        Ok(())
    })?;

    let metrics = aggregate(plan, &runs);
    let result = ExperimentResult { runs, metrics };
    if let Some(dir) = out_dir {
        write_outputs(plan, &result, dir)?;
    }
    Ok(result)
}
