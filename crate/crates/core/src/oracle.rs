//! Independent cross-check of the evaluator. `straight_line_fitness` rebuilds
//! the objective from scratch — explicit association indicator arrays and
//! textbook loops, sharing no code with the evaluator — and `check_batch`
//! compares the two over exhaustively enumerated decision grids on tiny
//! scenarios.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::evaluator::{self, DecisionVector};
use crate::scenario::{generate_scenario, ConfigError, Scenario, ScenarioConfig};

/// Recompute the penalized objective with an entirely separate code path.
pub fn straight_line_fitness(scenario: &Scenario, decision: &DecisionVector) -> f64 {
    let cfg = &scenario.config;
    let u = scenario.num_imds();
    let k_tasks = scenario.num_tasks();
    let s_count = cfg.num_sbs;

    // Association indicators: x[i][s] = 1 iff IMD i picked BS s (0 = MBS).
    let mut x = vec![vec![0u8; s_count + 1]; u];
    for i in 0..u {
        x[i][decision.bs_choice[i]] = 1;
    }

    // Uplink rate of every IMD.
    let mut rate = vec![0.0; u];
    for i in 0..u {
        if x[i][0] == 1 {
            let mut mbs_users = 0.0;
            for v in 0..u {
                if x[v][0] == 1 {
                    mbs_users += 1.0;
                }
            }
            let snr = decision.power[i] * scenario.channel_gain[i][0] / cfg.noise_power;
            rate[i] = scenario.mbs_bandwidth / mbs_users * (1.0 + snr).log2();
        } else {
            let s = decision.bs_choice[i];
            let mut interference = 0.0;
            for v in 0..u {
                if v == i || x[v][0] == 1 {
                    continue;
                }
                let sv = decision.bs_choice[v];
                let same_cluster = scenario.cluster_of_sbs[sv - 1] == scenario.cluster_of_sbs[s - 1];
                let same_channel = decision.channel_choice[v] == decision.channel_choice[i];
                let weaker = scenario.channel_gain[v][s] <= scenario.channel_gain[i][s];
                if same_cluster && same_channel && weaker {
                    interference += decision.power[v] * scenario.channel_gain[v][s];
                }
            }
            let sinr = decision.power[i] * scenario.channel_gain[i][s] / (interference + cfg.noise_power);
            rate[i] = cfg.subchannel_bandwidth * (1.0 + sinr).log2();
        }
    }

    // Cycle demand placed on each BS by each task.
    let idx = |i: usize, k: usize| i * k_tasks + k;
    let mut sbs_demand = vec![vec![0.0; s_count + 1]; u * k_tasks];
    let mut mbs_demand = vec![0.0; u * k_tasks];
    for i in 0..u {
        for k in 0..k_tasks {
            let t = &scenario.tasks[i][k];
            let crypto = &scenario.crypto_catalog[decision.crypto_choice[idx(i, k)] - 1];
            let g = decision.first_stage_split[idx(i, k)];
            let h = decision.second_stage_split[idx(i, k)];
            if x[i][0] == 1 {
                mbs_demand[idx(i, k)] = g * t.cycles_per_bit + crypto.decrypt_cost * g;
            } else {
                let s = decision.bs_choice[i];
                sbs_demand[idx(i, k)][s] =
                    (g - h) * t.cycles_per_bit + crypto.decrypt_cost * g + crypto.encrypt_cost * h;
                mbs_demand[idx(i, k)] = h * t.cycles_per_bit + crypto.decrypt_cost * h;
            }
        }
    }
    let mbs_total: f64 = mbs_demand.iter().sum();

    let mut objective = 0.0;
    let mut total_energy_acc = 0.0;
    for i in 0..u {
        // Completion time: per-task max of local and remote path, summed.
        let mut tau = 0.0;
        for k in 0..k_tasks {
            let t = &scenario.tasks[i][k];
            let crypto = &scenario.crypto_catalog[decision.crypto_choice[idx(i, k)] - 1];
            let g = decision.first_stage_split[idx(i, k)];
            let h = decision.second_stage_split[idx(i, k)];

            let local = ((t.data_size - g) * t.cycles_per_bit + crypto.encrypt_cost * g) / cfg.f_ue;

            let mbs_share = if mbs_total == 0.0 {
                cfg.f_bs
            } else {
                cfg.f_bs * mbs_demand[idx(i, k)] / mbs_total
            };
            let remote = if x[i][0] == 1 {
                g / rate[i] + g * t.cycles_per_bit / mbs_share + crypto.decrypt_cost * g / mbs_share
            } else {
                let s = decision.bs_choice[i];
                let mut sbs_total = 0.0;
                for row in &sbs_demand {
                    sbs_total += row[s];
                }
                let sbs_share = if sbs_total == 0.0 {
                    cfg.f_bs
                } else {
                    cfg.f_bs * sbs_demand[idx(i, k)][s] / sbs_total
                };
                g / rate[i]
                    + (g - h) * t.cycles_per_bit / sbs_share
                    + h / cfg.backhaul_rate
                    + h * t.cycles_per_bit / mbs_share
                    + crypto.decrypt_cost * g / sbs_share
                    + crypto.encrypt_cost * h / sbs_share
                    + crypto.decrypt_cost * h / mbs_share
            };
            tau += if local > remote { local } else { remote };

            total_energy_acc += cfg.energy_coeff * (t.data_size - g) * t.cycles_per_bit * cfg.f_ue * cfg.f_ue
                + crypto.energy_cost * g
                + decision.power[i] / 1000.0 * g / rate[i];
        }

        // Expected breach cost.
        let mut psi = 0.0;
        for k in 0..k_tasks {
            let t = &scenario.tasks[i][k];
            let level = scenario.crypto_catalog[decision.crypto_choice[idx(i, k)] - 1].level;
            if level < t.expected_level {
                psi += t.finance_loss * (1.0 - (-t.risk_coeff * f64::from(t.expected_level - level)).exp());
            }
        }

        if tau > scenario.deadlines[i] {
            objective -= cfg.penalty_alpha * (tau - scenario.deadlines[i]);
        }
        if psi > scenario.max_costs[i] {
            objective -= cfg.penalty_beta * (psi - scenario.max_costs[i]);
        }
    }
    objective - total_energy_acc
}

#[derive(Debug, Clone)]
pub struct OracleFailure {
    pub instance: usize,
    pub decision: DecisionVector,
    pub evaluator_fitness: f64,
    pub oracle_fitness: f64,
    pub rel_error: f64,
}

#[derive(Debug, Clone)]
pub struct OracleCheckResult {
    pub instances: usize,
    pub points: u64,
    pub max_rel_error: f64,
    pub failures: Vec<OracleFailure>,
}

/// Total number of points across all instances is kept near this budget so a
/// batch finishes quickly; every selected instance is still enumerated
/// exhaustively.
const POINT_BUDGET: u64 = 20_000_000;

fn tiny_config(rng: &mut ChaCha8Rng, budget_left: u64, instances_left: u64) -> ScenarioConfig {
    let mut u: usize = rng.gen_range(1..=2);
    let mut k: usize = rng.gen_range(1..=2);
    let mut n: usize = rng.gen_range(1..=2);
    let w: usize = rng.gen_range(1..=2);
    let cap = (budget_left / instances_left.max(1)).max(1_000);
    let points = |u: usize, k: usize, n: usize| -> u64 {
        let uk = (u * k) as u32;
        3u64.pow(u as u32) * 2u64.pow(uk) * (n as u64).pow(u as u32)
            * 3u64.pow(u as u32) * 3u64.pow(uk) * 3u64.pow(uk)
    };
    // Shrink the largest axes first until the grid fits the remaining budget.
    if points(u, k, n) > cap {
        k = 1;
    }
    if points(u, k, n) > cap {
        u = 1;
    }
    if points(u, k, n) > cap {
        n = 1;
    }
    let omega = 1.0e6;
    ScenarioConfig {
        seed: rng.gen(),
        num_imds: u,
        num_sbs: 2,
        num_clusters: w,
        num_tasks_per_imd: k,
        subchannel_bandwidth: omega,
        // eta = 0.5 and this total make the subchannel count come out as n.
        system_bandwidth: 2.0 * n as f64 * w as f64 * omega,
        partition_factor: 0.5,
        expected_level_set: vec![1, 2],
        ..ScenarioConfig::default()
    }
}

fn enumerate_instance(
    scenario: &Scenario,
    instance: usize,
    result: &mut OracleCheckResult,
) {
    let u = scenario.num_imds();
    let k_tasks = scenario.num_tasks();
    let uk = u * k_tasks;
    let n = scenario.num_subchannels;
    let pmax = scenario.config.max_power;
    const FRACS: [f64; 3] = [0.25, 0.5, 1.0];

    // Mixed-radix counter over all genes; split genes index fractions of
    // their upper bound so the grid stays inside the valid region.
    let mut radices = Vec::new();
    radices.extend(std::iter::repeat(3usize).take(u)); // bs: 0, 1, 2
    radices.extend(std::iter::repeat(2usize).take(uk)); // crypto: 1, 2
    radices.extend(std::iter::repeat(n).take(u));
    radices.extend(std::iter::repeat(3usize).take(u)); // power fractions
    radices.extend(std::iter::repeat(3usize).take(uk)); // split1 fractions
    radices.extend(std::iter::repeat(3usize).take(uk)); // split2 fractions
    let mut digits = vec![0usize; radices.len()];

    loop {
        let mut pos = 0;
        let mut take = |count: usize| {
            let slice = digits[pos..pos + count].to_vec();
            pos += count;
            slice
        };
        let bs_choice: Vec<usize> = take(u);
        let crypto_choice: Vec<usize> = take(uk).into_iter().map(|d| d + 1).collect();
        let channel_choice: Vec<usize> = take(u).into_iter().map(|d| d + 1).collect();
        let power: Vec<f64> = take(u).into_iter().map(|d| pmax * FRACS[d]).collect();
        let split1_digits = take(uk);
        let split2_digits = take(uk);
        let mut first_stage_split = Vec::with_capacity(uk);
        let mut second_stage_split = Vec::with_capacity(uk);
        for i in 0..u {
            for k in 0..k_tasks {
                let g = scenario.tasks[i][k].data_size * FRACS[split1_digits[i * k_tasks + k]];
                first_stage_split.push(g);
                second_stage_split.push(g * FRACS[split2_digits[i * k_tasks + k]]);
            }
        }
        let decision = DecisionVector {
            bs_choice,
            crypto_choice,
            channel_choice,
            power,
            first_stage_split,
            second_stage_split,
        };

        let a = evaluator::fitness(scenario, &decision).fitness;
        let b = straight_line_fitness(scenario, &decision);
        let rel = (a - b).abs() / a.abs().max(b.abs()).max(1e-300);
        result.points += 1;
        if rel > result.max_rel_error {
            result.max_rel_error = rel;
        }
        if rel > 1e-9 && result.failures.len() < 16 {
            result.failures.push(OracleFailure {
                instance,
                decision: decision.clone(),
                evaluator_fitness: a,
                oracle_fitness: b,
                rel_error: rel,
            });
        }

        // Advance the counter.
        let mut carry = 0;
        loop {
            digits[carry] += 1;
            if digits[carry] < radices[carry] {
                break;
            }
            digits[carry] = 0;
            carry += 1;
            if carry == digits.len() {
                return;
            }
        }
    }
}

/// Enumerate `instances` random tiny scenarios exhaustively and compare the
/// evaluator against the straight-line objective at every grid point.
pub fn check_batch(instances: usize, seed: u64) -> Result<OracleCheckResult, ConfigError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut result = OracleCheckResult {
        instances,
        points: 0,
        max_rel_error: 0.0,
        failures: Vec::new(),
    };
    for inst in 0..instances {
        let budget_left = POINT_BUDGET.saturating_sub(result.points);
        let cfg = tiny_config(&mut rng, budget_left, (instances - inst) as u64);
        let scenario = generate_scenario(&cfg)?;
        enumerate_instance(&scenario, inst, &mut result);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tiny_batch_agrees() {
        let result = check_batch(3, 99).unwrap();
        assert_eq!(result.instances, 3);
        assert!(result.points > 0);
        assert!(
            result.max_rel_error <= 1e-9,
            "max rel error {} with {} failures",
            result.max_rel_error,
            result.failures.len()
        );
    }

    #[test]
    fn oracle_matches_on_handpicked_decisions() {
        let cfg = ScenarioConfig {
            seed: 5,
            num_imds: 2,
            num_sbs: 4,
            num_clusters: 2,
            num_tasks_per_imd: 2,
            ..ScenarioConfig::default()
        };
        let sc = generate_scenario(&cfg).unwrap();
        let decisions = [
            DecisionVector {
                bs_choice: vec![0, 0],
                crypto_choice: vec![6, 5, 4, 3],
                channel_choice: vec![1, 1],
                power: vec![10.0, 150.0],
                first_stage_split: vec![1e6, 1e6, 1e6, 1e6],
                second_stage_split: vec![1e5, 1e5, 1e5, 1e5],
            },
            DecisionVector {
                bs_choice: vec![1, 2],
                crypto_choice: vec![1, 2, 1, 2],
                channel_choice: vec![2, 2],
                power: vec![199.0, 0.5],
                first_stage_split: vec![1.5e6, 1e6, 2e5, 1e6],
                second_stage_split: vec![1.5e6, 1e-20, 1e5, 5e5],
            },
        ];
        for d in &decisions {
            let a = evaluator::fitness(&sc, d).fitness;
            let b = straight_line_fitness(&sc, d);
            let rel = (a - b).abs() / a.abs().max(b.abs());
            assert!(rel <= 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn batch_is_deterministic() {
        let a = check_batch(2, 7).unwrap();
        let b = check_batch(2, 7).unwrap();
        assert_eq!(a.points, b.points);
        assert_eq!(a.max_rel_error, b.max_rel_error);
    }
}
