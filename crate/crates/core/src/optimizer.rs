//! Whale-style population search over the offloading decision space: the
//! improved variant with nonlinear coefficient schedules, Cauchy long jumps
//! and best-neighborhood exploitation, and the classical variant as a
//! baseline. All randomness flows through a single ChaCha8 stream on the
//! coordinator so runs are reproducible regardless of thread count.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::evaluator::{fitness, repair, DecisionVector, EvaluationReport, RawDecision};
use crate::scenario::Scenario;

/// Mixed into the scenario seed so the optimizer stream differs from the
/// generator streams.
const OPTIMIZER_SEED_SALT: u64 = 0xD1B5_4A32_D192_ED03;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Variant {
    Improved,
    Classic,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerParams {
    pub population_size: usize,
    pub iterations: usize,
    pub rng_seed: u64,
    pub variant: Variant,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        OptimizerParams {
            population_size: 32,
            iterations: 500,
            rng_seed: 0,
            variant: Variant::Improved,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Agent {
    pub position: RawDecision,
    pub decision: DecisionVector,
    pub report: EvaluationReport,
}

/// One point of the convergence trace, recorded after each iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct TracePoint {
    pub iteration: usize,
    pub best_fitness: f64,
    pub best_energy: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub best: Agent,
    pub trace: Vec<TracePoint>,
    /// Worst compute-share conservation error seen across all evaluations.
    pub max_share_error: f64,
}

/// Per-agent move coefficients for one iteration of the improved variant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Coefficients {
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

/// Nonlinear schedules: k1 decays 1 -> 0, k2's envelope shrinks 2 -> 0, k3
/// stays a uniform scaling in [0, 2).
pub fn coefficients_from(t: usize, iterations: usize, r1: f64, r2: f64) -> Coefficients {
    let phase = t as f64 / iterations as f64 * std::f64::consts::FRAC_PI_2;
    Coefficients {
        k1: (phase + std::f64::consts::PI).sin() + 1.0,
        k2: 2.0 * (2.0 * r1 - 1.0) * (1.0 - phase.sin()),
        k3: 2.0 * r2,
    }
}

fn coefficients(t: usize, iterations: usize, rng: &mut ChaCha8Rng) -> Coefficients {
    let r1: f64 = rng.gen();
    let r2: f64 = rng.gen();
    coefficients_from(t, iterations, r1, r2)
}

/// Spiral magnitude for the improved variant; oscillates and flattens as the
/// run progresses.
pub fn spiral_coefficient(t: usize, iterations: usize, r3: f64) -> f64 {
    let progress = t as f64 / iterations as f64;
    let a3 = (-2.0 - progress) * r3 + 1.0;
    (a3 + 5.0 * (std::f64::consts::PI * (1.0 - progress)).cos()).exp()
        * (2.0 * a3 * std::f64::consts::PI).cos()
}

/// x <- k1 * best - k2 * |k3 * best - x|
pub fn encircle_gene(c: &Coefficients, best: f64, x: f64) -> f64 {
    c.k1 * best - c.k2 * (c.k3 * best - x).abs()
}

/// x <- k1 * best + k4 * |k3 * best - x|
pub fn spiral_gene(c: &Coefficients, k4: f64, best: f64, x: f64) -> f64 {
    c.k1 * best + k4 * (c.k3 * best - x).abs()
}

/// Heavy-tailed jump: x plus a Cauchy deviate scaled by k2.
pub fn cauchy_gene(c: &Coefficients, x: f64, r1: f64) -> f64 {
    x + c.k2 * (std::f64::consts::PI * (r1 - 0.5)).tan()
}

/// Exploit around the incumbent best: best * (1 + 0.5 * r4), r4 in [0, 1).
pub fn neighborhood_gene(best: f64, r4: f64) -> f64 {
    best * (1.0 + 0.5 * r4)
}

/// Tallies of which move each agent took, for coverage checks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BranchCounts {
    pub encircle: usize,
    pub spiral: usize,
    pub cauchy: usize,
}

pub struct OptimizerState<'a> {
    scenario: &'a Scenario,
    params: OptimizerParams,
    rng: ChaCha8Rng,
    pub population: Vec<Agent>,
    pub best: Agent,
    pub trace: Vec<TracePoint>,
    pub max_share_error: f64,
    pub branch_counts: BranchCounts,
    t: usize,
}

fn evaluate_raw(scenario: &Scenario, raw: RawDecision) -> Agent {
    let decision = repair(scenario, &raw);
    let report = fitness(scenario, &decision);
    Agent { position: raw, decision, report }
}

/// Evaluate a batch of candidate positions in parallel, preserving order.
fn evaluate_batch(scenario: &Scenario, raws: Vec<RawDecision>) -> Vec<Agent> {
    raws.into_par_iter().map(|raw| evaluate_raw(scenario, raw)).collect()
}

fn for_each_gene(raw: &mut RawDecision, mut f: impl FnMut(&mut f64)) {
    for block in [
        &mut raw.bs,
        &mut raw.crypto,
        &mut raw.channel,
        &mut raw.power,
        &mut raw.split1,
        &mut raw.split2,
    ] {
        for g in block.iter_mut() {
            f(g);
        }
    }
}

fn map_genes(best: &RawDecision, x: &RawDecision, mut f: impl FnMut(f64, f64) -> f64) -> RawDecision {
    let zip_block =
        |b: &[f64], v: &[f64], f: &mut dyn FnMut(f64, f64) -> f64| b.iter().zip(v).map(|(&b, &x)| f(b, x)).collect();
    RawDecision {
        bs: zip_block(&best.bs, &x.bs, &mut f),
        crypto: zip_block(&best.crypto, &x.crypto, &mut f),
        channel: zip_block(&best.channel, &x.channel, &mut f),
        power: zip_block(&best.power, &x.power, &mut f),
        split1: zip_block(&best.split1, &x.split1, &mut f),
        split2: zip_block(&best.split2, &x.split2, &mut f),
    }
}

impl<'a> OptimizerState<'a> {
    /// Random feasible-by-construction initial population. Split genes are
    /// drawn nested (second stage within the first) so the swarm starts in
    /// the valid region.
    pub fn new(scenario: &'a Scenario, params: &OptimizerParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed ^ OPTIMIZER_SEED_SALT);
        let cfg = &scenario.config;
        let u = scenario.num_imds();
        let k = scenario.num_tasks();
        let mut raws = Vec::with_capacity(params.population_size);
        for _ in 0..params.population_size {
            let bs: Vec<f64> = (0..u).map(|_| rng.gen_range(0..=cfg.num_sbs) as f64).collect();
            let crypto: Vec<f64> =
                (0..u * k).map(|_| rng.gen_range(1..=scenario.crypto_catalog.len()) as f64).collect();
            let channel: Vec<f64> = (0..u).map(|_| rng.gen_range(1..=scenario.num_subchannels) as f64).collect();
            let power: Vec<f64> = (0..u).map(|_| rng.gen::<f64>() * cfg.max_power).collect();
            let mut split1 = Vec::with_capacity(u * k);
            let mut split2 = Vec::with_capacity(u * k);
            for i in 0..u {
                for j in 0..k {
                    let g = rng.gen::<f64>() * scenario.tasks[i][j].data_size;
                    split1.push(g);
                    split2.push(rng.gen::<f64>() * g);
                }
            }
            raws.push(RawDecision { bs, crypto, channel, power, split1, split2 });
        }
        let population = evaluate_batch(scenario, raws);
        let best = population
            .iter()
            .max_by(|a, b| a.report.fitness.total_cmp(&b.report.fitness))
            .expect("population is never empty")
            .clone();
        let max_share_error =
            population.iter().map(|a| a.report.share_rel_error).fold(0.0f64, f64::max);
        OptimizerState {
            scenario,
            params: params.clone(),
            rng,
            population,
            best,
            trace: Vec::new(),
            max_share_error,
            branch_counts: BranchCounts::default(),
            t: 0,
        }
    }

    /// Greedy replacement: strictly better candidates only, so traces are
    /// monotone and plateaus keep the incumbent.
    fn absorb_batch(&mut self, candidates: Vec<Agent>) {
        for (agent, candidate) in self.population.iter_mut().zip(candidates) {
            self.max_share_error = self.max_share_error.max(candidate.report.share_rel_error);
            if candidate.report.fitness > agent.report.fitness {
                *agent = candidate;
            }
            if agent.report.fitness > self.best.report.fitness {
                self.best = agent.clone();
            }
        }
    }

    /// One iteration of the improved variant.
    pub fn step_improved(&mut self) {
        self.t += 1;
        let iterations = self.params.iterations;
        let best_raw = self.best.position.clone();
        let mut moved = Vec::with_capacity(self.population.len());
        for agent in &self.population {
            // The branch is chosen per agent; inside a move the stochastic
            // coefficients are random vectors with fresh draws per gene.
            let select = coefficients(self.t, iterations, &mut self.rng);
            let r5: f64 = self.rng.gen();
            let next = if r5 < 0.5 {
                if select.k2.abs() >= 1.0 {
                    self.branch_counts.cauchy += 1;
                    let mut pos = agent.position.clone();
                    for_each_gene(&mut pos, |g| {
                        let r1: f64 = self.rng.gen();
                        *g = cauchy_gene(&select, *g, r1);
                    });
                    pos
                } else {
                    self.branch_counts.encircle += 1;
                    map_genes(&best_raw, &agent.position, |b, x| {
                        let c = coefficients(self.t, iterations, &mut self.rng);
                        encircle_gene(&c, b, x)
                    })
                }
            } else {
                self.branch_counts.spiral += 1;
                map_genes(&best_raw, &agent.position, |b, x| {
                    let c = coefficients(self.t, iterations, &mut self.rng);
                    let r3: f64 = self.rng.gen();
                    let k4 = spiral_coefficient(self.t, iterations, r3);
                    spiral_gene(&c, k4, b, x)
                })
            };
            moved.push(next);
        }
        // Both the main move and the neighborhood candidate are retained
        // greedily: an agent only adopts a position that strictly improves
        // its fitness, so the whole population is elitist, not just the
        // historically best agent.
        let moved_agents = evaluate_batch(self.scenario, moved);
        self.absorb_batch(moved_agents);
        // Neighborhood candidates draw per-gene noise around the incumbent
        // best as updated by the main moves above.
        let updated_best = self.best.position.clone();
        let mut neighborhood = Vec::with_capacity(self.population.len());
        for _ in 0..self.population.len() {
            let mut pos = updated_best.clone();
            for_each_gene(&mut pos, |g| {
                let r4: f64 = self.rng.gen();
                *g = neighborhood_gene(*g, r4);
            });
            neighborhood.push(pos);
        }
        let neighborhood_agents = evaluate_batch(self.scenario, neighborhood);
        self.absorb_batch(neighborhood_agents);
        self.trace.push(TracePoint {
            iteration: self.t,
            best_fitness: self.best.report.fitness,
            best_energy: self.best.report.total_energy,
            feasible: self.best.report.feasible,
        });
    }

    /// One iteration of the classical variant: linear a-schedule, random-whale
    /// search when |A| >= 1, unconditional position replacement. Best-so-far
    /// bookkeeping still powers the trace.
    pub fn step_classic(&mut self) {
        self.t += 1;
        let a = 2.0 * (1.0 - self.t as f64 / self.params.iterations as f64);
        let current_best = self
            .population
            .iter()
            .max_by(|x, y| x.report.fitness.total_cmp(&y.report.fitness))
            .expect("population is never empty")
            .position
            .clone();
        let mut moved = Vec::with_capacity(self.population.len());
        for idx in 0..self.population.len() {
            // A, C, and l are random vectors: fresh draws per gene.
            let branch_a: f64 = 2.0 * a * self.rng.gen::<f64>() - a;
            let p: f64 = self.rng.gen();
            let x = &self.population[idx].position;
            let next = if p < 0.5 {
                let target = if branch_a.abs() >= 1.0 {
                    let other = self.rng.gen_range(0..self.population.len());
                    self.population[other].position.clone()
                } else {
                    current_best.clone()
                };
                map_genes(&target, x, |b, x| {
                    let a_coef = 2.0 * a * self.rng.gen::<f64>() - a;
                    let c_coef = 2.0 * self.rng.gen::<f64>();
                    b - a_coef * (c_coef * b - x).abs()
                })
            } else {
                map_genes(&current_best, x, |b, x| {
                    let l: f64 = self.rng.gen_range(-1.0..1.0);
                    let swirl = (l * std::f64::consts::TAU).cos() * l.exp();
                    (b - x).abs() * swirl + b
                })
            };
            moved.push(next);
        }
        let candidates = evaluate_batch(self.scenario, moved);
        for (agent, candidate) in self.population.iter_mut().zip(candidates) {
            self.max_share_error = self.max_share_error.max(candidate.report.share_rel_error);
            *agent = candidate;
            if agent.report.fitness > self.best.report.fitness {
                self.best = agent.clone();
            }
        }
        self.trace.push(TracePoint {
            iteration: self.t,
            best_fitness: self.best.report.fitness,
            best_energy: self.best.report.total_energy,
            feasible: self.best.report.feasible,
        });
    }

    pub fn step(&mut self) {
        match self.params.variant {
            Variant::Improved => self.step_improved(),
            Variant::Classic => self.step_classic(),
        }
    }
}

/// Run the configured variant to completion and return the best agent plus
/// the per-iteration convergence trace.
pub fn run(scenario: &Scenario, params: &OptimizerParams) -> RunResult {
    let mut state = OptimizerState::new(scenario, params);
    for _ in 0..params.iterations {
        state.step();
    }
    RunResult {
        best: state.best,
        trace: state.trace,
        max_share_error: state.max_share_error,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{generate_scenario, ScenarioConfig};
    use proptest::prelude::*;

    fn small_scenario(seed: u64) -> Scenario {
        let cfg = ScenarioConfig {
            seed,
            num_imds: 3,
            num_sbs: 6,
            num_clusters: 2,
            num_tasks_per_imd: 2,
            ..ScenarioConfig::default()
        };
        generate_scenario(&cfg).unwrap()
    }

    #[test]
    fn coefficient_schedule_endpoints() {
        let start = coefficients_from(0, 100, 1.0, 0.5);
        assert!((start.k1 - 1.0).abs() < 1e-12);
        assert!((start.k2 - 2.0).abs() < 1e-12);
        assert!((start.k3 - 1.0).abs() < 1e-12);

        let end = coefficients_from(100, 100, 1.0, 0.5);
        assert!(end.k1.abs() < 1e-12);
        assert!(end.k2.abs() < 1e-12);

        let mid = coefficients_from(50, 100, 1.0, 0.5);
        let expected = 2.0 * (1.0 - std::f64::consts::FRAC_PI_4.sin());
        assert!((mid.k2 - expected).abs() < 1e-12);
    }

    #[test]
    fn move_equations_hand_values() {
        let c = Coefficients { k1: 0.5, k2: 1.5, k3: 2.0 };
        // encircle: 0.5*4 - 1.5*|2*4 - 1| = 2 - 10.5
        assert!((encircle_gene(&c, 4.0, 1.0) - (-8.5)).abs() < 1e-12);
        // spiral with k4 = 0.25: 2 + 0.25*7 = 3.75
        assert!((spiral_gene(&c, 0.25, 4.0, 1.0) - 3.75).abs() < 1e-12);
        // cauchy with r1 = 0.5: tan(0) = 0 -> unchanged
        assert_eq!(cauchy_gene(&c, 3.0, 0.5), 3.0);
        // neighborhood: 4 * (1 + 0.5*0.5) = 5
        assert!((neighborhood_gene(4.0, 0.5) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn spiral_coefficient_hand_value() {
        // r3 = 0 -> a3 = 1; progress 0 -> exp(1 + 5*cos(pi)) * cos(2pi) = exp(-4).
        let k4 = spiral_coefficient(0, 100, 0.0);
        assert!((k4 - (-4.0f64).exp()).abs() < 1e-12, "{k4}");
    }

    #[test]
    fn improved_trace_is_monotone_and_full_length() {
        let sc = small_scenario(11);
        let params = OptimizerParams {
            population_size: 8,
            iterations: 60,
            rng_seed: 11,
            variant: Variant::Improved,
        };
        let result = run(&sc, &params);
        assert_eq!(result.trace.len(), 60);
        for w in result.trace.windows(2) {
            assert!(w[1].best_fitness >= w[0].best_fitness);
        }
        assert!(result.max_share_error < 1e-9);
    }

    #[test]
    fn classic_trace_is_monotone_via_best_so_far() {
        let sc = small_scenario(12);
        let params = OptimizerParams {
            population_size: 8,
            iterations: 60,
            rng_seed: 12,
            variant: Variant::Classic,
        };
        let result = run(&sc, &params);
        assert_eq!(result.trace.len(), 60);
        for w in result.trace.windows(2) {
            assert!(w[1].best_fitness >= w[0].best_fitness);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let sc = small_scenario(21);
        for variant in [Variant::Improved, Variant::Classic] {
            let params = OptimizerParams {
                population_size: 6,
                iterations: 30,
                rng_seed: 5,
                variant,
            };
            let a = run(&sc, &params);
            let b = run(&sc, &params);
            assert_eq!(a.best.decision, b.best.decision);
            assert_eq!(a.trace, b.trace);
        }
    }

    #[test]
    fn different_seeds_diverge() {
        let sc = small_scenario(21);
        let mut params = OptimizerParams {
            population_size: 6,
            iterations: 30,
            rng_seed: 5,
            variant: Variant::Improved,
        };
        let a = run(&sc, &params);
        params.rng_seed = 6;
        let b = run(&sc, &params);
        assert_ne!(a.best.position, b.best.position);
    }

    #[test]
    fn all_branches_exercised() {
        let sc = small_scenario(31);
        let params = OptimizerParams {
            population_size: 8,
            iterations: 100,
            rng_seed: 31,
            variant: Variant::Improved,
        };
        let mut state = OptimizerState::new(&sc, &params);
        for _ in 0..params.iterations {
            state.step();
        }
        let counts = state.branch_counts;
        assert!(counts.encircle > 0, "{counts:?}");
        assert!(counts.spiral > 0, "{counts:?}");
        assert!(counts.cauchy > 0, "{counts:?}");
    }

    #[test]
    fn best_agent_is_repaired_and_consistent() {
        let sc = small_scenario(41);
        let params = OptimizerParams {
            population_size: 6,
            iterations: 20,
            rng_seed: 41,
            variant: Variant::Improved,
        };
        let result = run(&sc, &params);
        let d = &result.best.decision;
        assert_eq!(d, &crate::evaluator::repair(&sc, &d.to_raw()));
        let report = crate::evaluator::fitness(&sc, d);
        assert_eq!(report.fitness, result.best.report.fitness);
    }

    proptest! {
        #[test]
        fn coefficient_ranges(t in 0usize..=200, r1 in 0.0f64..1.0, r2 in 0.0f64..1.0) {
            let c = coefficients_from(t, 200, r1, r2);
            prop_assert!(-1e-12 <= c.k1 && c.k1 <= 1.0 + 1e-12);
            prop_assert!(c.k2.abs() <= 2.0 + 1e-12);
            prop_assert!((0.0..2.0).contains(&c.k3));
        }

        #[test]
        fn spiral_coefficient_finite(t in 0usize..=200, r3 in 0.0f64..1.0) {
            prop_assert!(spiral_coefficient(t, 200, r3).is_finite());
        }
    }
}
