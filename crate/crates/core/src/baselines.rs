//! Deterministic comparison policies. The minimize-time policy computes
//! everything on the device; the minimize-spend policy offloads everything at
//! full power to the strongest base station. Both protect every task with the
//! cheapest algorithm that meets its expected level, so no breach cost is
//! incurred.

use crate::evaluator::{repair, DecisionVector, RawDecision};
use crate::scenario::Scenario;

/// Cheapest protection level with zero failure probability for the task.
fn safe_crypto_level(scenario: &Scenario, i: usize, k: usize) -> usize {
    let expected = scenario.tasks[i][k].expected_level;
    scenario
        .crypto_catalog
        .iter()
        .position(|c| c.level >= expected)
        .map(|p| p + 1)
        .unwrap_or(scenario.crypto_catalog.len())
}

fn crypto_genes(scenario: &Scenario) -> Vec<f64> {
    let mut genes = Vec::with_capacity(scenario.num_imds() * scenario.num_tasks());
    for i in 0..scenario.num_imds() {
        for k in 0..scenario.num_tasks() {
            genes.push(safe_crypto_level(scenario, i, k) as f64);
        }
    }
    genes
}

fn nearest_bs(scenario: &Scenario, i: usize) -> usize {
    let (xi, yi) = scenario.imd_positions[i];
    let mut best = 0;
    let mut best_dist = f64::INFINITY;
    for (s, &(xs, ys)) in scenario.bs_positions.iter().enumerate() {
        let dist = (xi - xs).hypot(yi - ys);
        if dist < best_dist {
            best_dist = dist;
            best = s;
        }
    }
    best
}

fn strongest_bs(scenario: &Scenario, i: usize) -> usize {
    let gains = &scenario.channel_gain[i];
    let mut best = 0;
    for s in 1..gains.len() {
        if gains[s] > gains[best] {
            best = s;
        }
    }
    best
}

/// Compute-locally policy: keep all data on the device, associate with the
/// nearest base station at minimum power so the radio stays effectively idle.
pub fn minimize_time(scenario: &Scenario) -> DecisionVector {
    let cfg = &scenario.config;
    let u = scenario.num_imds();
    let uk = u * scenario.num_tasks();
    let raw = RawDecision {
        bs: (0..u).map(|i| nearest_bs(scenario, i) as f64).collect(),
        crypto: crypto_genes(scenario),
        channel: vec![1.0; u],
        power: vec![cfg.power_floor; u],
        split1: vec![cfg.data_floor; uk],
        split2: vec![cfg.data_floor; uk],
    };
    repair(scenario, &raw)
}

/// Offload-everything policy: push all data in the first stage to the
/// strongest base station at maximum power, spreading IMDs over subchannels
/// round-robin.
pub fn minimize_spend(scenario: &Scenario) -> DecisionVector {
    let cfg = &scenario.config;
    let u = scenario.num_imds();
    let n = scenario.num_subchannels;
    let mut split1 = Vec::with_capacity(u * scenario.num_tasks());
    for i in 0..u {
        for k in 0..scenario.num_tasks() {
            split1.push(scenario.tasks[i][k].data_size);
        }
    }
    let raw = RawDecision {
        bs: (0..u).map(|i| strongest_bs(scenario, i) as f64).collect(),
        crypto: crypto_genes(scenario),
        channel: (0..u).map(|i| (i % n + 1) as f64).collect(),
        power: vec![cfg.max_power; u],
        split2: vec![cfg.data_floor; split1.len()],
        split1,
    };
    repair(scenario, &raw)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluator::{breach_cost, fitness, total_delay};
    use crate::scenario::{generate_scenario, ScenarioConfig};

    fn scenario(seed: u64) -> Scenario {
        let cfg = ScenarioConfig {
            seed,
            num_imds: 4,
            num_sbs: 8,
            num_clusters: 3,
            num_tasks_per_imd: 2,
            ..ScenarioConfig::default()
        };
        generate_scenario(&cfg).unwrap()
    }

    #[test]
    fn minimize_time_delay_is_pure_local_compute() {
        let sc = scenario(1);
        let d = minimize_time(&sc);
        for i in 0..sc.num_imds() {
            let expected: f64 = sc.tasks[i]
                .iter()
                .map(|t| t.data_size * t.cycles_per_bit / sc.config.f_ue)
                .sum();
            let tau = total_delay(&sc, &d, i);
            assert!((tau - expected).abs() < 1e-9, "imd {i}: {tau} vs {expected}");
        }
    }

    #[test]
    fn minimize_time_energy_is_pure_compute_energy() {
        let sc = scenario(2);
        let d = minimize_time(&sc);
        let cfg = &sc.config;
        let expected: f64 = sc
            .tasks
            .iter()
            .flatten()
            .map(|t| cfg.energy_coeff * t.data_size * t.cycles_per_bit * cfg.f_ue * cfg.f_ue)
            .sum();
        let report = fitness(&sc, &d);
        assert!((report.total_energy - expected).abs() / expected < 1e-9);
        assert!((report.local_energy - expected).abs() / expected < 1e-9);
    }

    #[test]
    fn both_policies_incur_zero_breach_cost() {
        for seed in 0..5 {
            let sc = scenario(seed);
            for d in [minimize_time(&sc), minimize_spend(&sc)] {
                for i in 0..sc.num_imds() {
                    assert_eq!(breach_cost(&sc, &d, i), 0.0);
                }
            }
        }
    }

    #[test]
    fn minimize_spend_local_compute_vanishes() {
        let sc = scenario(3);
        let d = minimize_spend(&sc);
        let report = fitness(&sc, &d);
        assert!(report.local_energy < 1e-12, "{}", report.local_energy);
    }

    #[test]
    fn policies_are_repair_fixed_points() {
        let sc = scenario(4);
        for d in [minimize_time(&sc), minimize_spend(&sc)] {
            assert_eq!(d, repair(&sc, &d.to_raw()));
        }
    }

    #[test]
    fn minimize_spend_targets_strongest_gain() {
        let sc = scenario(5);
        let d = minimize_spend(&sc);
        for i in 0..sc.num_imds() {
            let b = d.bs_choice[i];
            for s in 0..=sc.config.num_sbs {
                assert!(sc.channel_gain[i][b] >= sc.channel_gain[i][s]);
            }
        }
    }
}
