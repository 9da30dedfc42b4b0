//! Decode a decision vector and score it: uplink rates, proportional compute
//! shares, per-task local/remote times, security breach cost, device energy,
//! and the penalized fitness. Everything here is a pure function of
//! (Scenario, DecisionVector).

use crate::scenario::{CryptoProfile, Scenario, TaskSpec};

/// One agent position after repair.
///
/// Integer genes are stored decoded: `bs_choice[i]` is 0 for the MBS or the
/// SBS index 1..=S; `crypto_choice` holds the 1-based algorithm index per
/// flattened (IMD, task); `channel_choice[i]` is the 1-based subchannel.
/// Splits are in bits, with `second_stage_split <= first_stage_split <=
/// data_size` per task.
#[derive(Debug, Clone, PartialEq)]
pub struct DecisionVector {
    pub bs_choice: Vec<usize>,
    pub crypto_choice: Vec<usize>,
    pub channel_choice: Vec<usize>,
    /// Uplink transmission power in mW per IMD.
    pub power: Vec<f64>,
    /// Bits offloaded device -> BS, per flattened (IMD, task).
    pub first_stage_split: Vec<f64>,
    /// Bits relayed SBS -> MBS, per flattened (IMD, task).
    pub second_stage_split: Vec<f64>,
}

/// An unconstrained position as produced by the search moves, before repair.
#[derive(Debug, Clone, PartialEq)]
pub struct RawDecision {
    pub bs: Vec<f64>,
    pub crypto: Vec<f64>,
    pub channel: Vec<f64>,
    pub power: Vec<f64>,
    pub split1: Vec<f64>,
    pub split2: Vec<f64>,
}

impl DecisionVector {
    pub fn to_raw(&self) -> RawDecision {
        RawDecision {
            bs: self.bs_choice.iter().map(|&v| v as f64).collect(),
            crypto: self.crypto_choice.iter().map(|&v| v as f64).collect(),
            channel: self.channel_choice.iter().map(|&v| v as f64).collect(),
            power: self.power.clone(),
            split1: self.first_stage_split.clone(),
            split2: self.second_stage_split.clone(),
        }
    }
}

/// Everything the fitness computation produced, kept for diagnostics and
/// reporting.
#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    /// Total device-side energy (compute + encrypt + upload), J.
    pub total_energy: f64,
    /// Device-side compute energy only (the "local energy" figure metric), J.
    pub local_energy: f64,
    pub per_imd_delay: Vec<f64>,
    pub per_imd_cost: Vec<f64>,
    pub delay_violation: Vec<f64>,
    pub cost_violation: Vec<f64>,
    pub per_imd_rate: Vec<f64>,
    /// SBS compute share per flattened (IMD, task); 0 for MBS-associated IMDs.
    pub sbs_share: Vec<f64>,
    /// MBS compute share per flattened (IMD, task).
    pub mbs_share: Vec<f64>,
    /// Worst relative error of per-BS share sums against f_bs.
    pub share_rel_error: f64,
    pub fitness: f64,
    pub feasible: bool,
}

fn chosen_crypto<'a>(scenario: &'a Scenario, decision: &DecisionVector, i: usize, k: usize) -> &'a CryptoProfile {
    let l = decision.crypto_choice[scenario.task_index(i, k)];
    &scenario.crypto_catalog[l - 1]
}

fn splits(scenario: &Scenario, decision: &DecisionVector, i: usize, k: usize) -> (f64, f64) {
    let idx = scenario.task_index(i, k);
    (decision.first_stage_split[idx], decision.second_stage_split[idx])
}

/// NOMA uplink rate of IMD `i` on its chosen SBS and subchannel, bits/s.
/// Interference comes from co-channel IMDs whose chosen SBS lies in the same
/// cluster and whose gain at the serving SBS is not above IMD `i`'s.
pub fn uplink_rate_sbs(scenario: &Scenario, decision: &DecisionVector, i: usize) -> f64 {
    let s = decision.bs_choice[i];
    assert!(s >= 1, "uplink_rate_sbs called for an MBS-associated IMD");
    let cluster = scenario.cluster_of_sbs[s - 1];
    let gain_i = scenario.channel_gain[i][s];
    let mut interference = 0.0;
    for u in 0..scenario.num_imds() {
        if u == i {
            continue;
        }
        let b_u = decision.bs_choice[u];
        if b_u == 0 || scenario.cluster_of_sbs[b_u - 1] != cluster {
            continue;
        }
        if decision.channel_choice[u] != decision.channel_choice[i] {
            continue;
        }
        let gain_u = scenario.channel_gain[u][s];
        if gain_u <= gain_i {
            interference += decision.power[u] * gain_u;
        }
    }
    let sinr = decision.power[i] * gain_i / (interference + scenario.config.noise_power);
    // ln_1p keeps tiny SINRs from rounding the rate down to exactly zero.
    scenario.config.subchannel_bandwidth * sinr.ln_1p() / std::f64::consts::LN_2
}

/// OFDMA uplink rate of an MBS-associated IMD: the macro band is split
/// equally among all MBS-associated IMDs, with no interference.
pub fn uplink_rate_mbs(scenario: &Scenario, decision: &DecisionVector, i: usize) -> f64 {
    assert_eq!(decision.bs_choice[i], 0, "uplink_rate_mbs called for an SBS-associated IMD");
    let count = decision.bs_choice.iter().filter(|&&b| b == 0).count();
    let snr = decision.power[i] * scenario.channel_gain[i][0] / scenario.config.noise_power;
    scenario.mbs_bandwidth / count as f64 * snr.ln_1p() / std::f64::consts::LN_2
}

/// Rate of IMD `i` on whichever BS it selected.
pub fn uplink_rate(scenario: &Scenario, decision: &DecisionVector, i: usize) -> f64 {
    if decision.bs_choice[i] == 0 {
        uplink_rate_mbs(scenario, decision, i)
    } else {
        uplink_rate_sbs(scenario, decision, i)
    }
}

/// CPU cycles task (i, k) demands from its serving SBS: compute on the
/// locally-kept remote part plus decrypting the inbound and encrypting the
/// relayed part.
fn sbs_cycles(scenario: &Scenario, decision: &DecisionVector, i: usize, k: usize) -> f64 {
    let (d_bar, d_hat) = splits(scenario, decision, i, k);
    let task = &scenario.tasks[i][k];
    let crypto = chosen_crypto(scenario, decision, i, k);
    (d_bar - d_hat) * task.cycles_per_bit + crypto.decrypt_cost * d_bar + crypto.encrypt_cost * d_hat
}

/// CPU cycles task (i, k) demands from the MBS, which depends on whether the
/// data arrives relayed from an SBS or directly from the device.
fn mbs_cycles(scenario: &Scenario, decision: &DecisionVector, i: usize, k: usize) -> f64 {
    let (d_bar, d_hat) = splits(scenario, decision, i, k);
    let task = &scenario.tasks[i][k];
    let crypto = chosen_crypto(scenario, decision, i, k);
    if decision.bs_choice[i] == 0 {
        d_bar * task.cycles_per_bit + crypto.decrypt_cost * d_bar
    } else {
        d_hat * task.cycles_per_bit + crypto.decrypt_cost * d_hat
    }
}

/// Proportional compute share of task (i, k) at its serving SBS, cycles/s.
pub fn sbs_compute_share(scenario: &Scenario, decision: &DecisionVector, i: usize, k: usize) -> f64 {
    let s = decision.bs_choice[i];
    assert!(s >= 1, "sbs_compute_share called for an MBS-associated IMD");
    let mut denom = 0.0;
    for u in 0..scenario.num_imds() {
        if decision.bs_choice[u] != s {
            continue;
        }
        for j in 0..scenario.num_tasks() {
            denom += sbs_cycles(scenario, decision, u, j);
        }
    }
    if denom == 0.0 {
        scenario.config.f_bs
    } else {
        scenario.config.f_bs * sbs_cycles(scenario, decision, i, k) / denom
    }
}

/// Proportional compute share of task (i, k) at the MBS, cycles/s. Every
/// task claims MBS cycles: relayed second-stage data for SBS-associated
/// IMDs, directly uploaded data for MBS-associated ones.
pub fn mbs_compute_share(scenario: &Scenario, decision: &DecisionVector, i: usize, k: usize) -> f64 {
    let mut denom = 0.0;
    for u in 0..scenario.num_imds() {
        for j in 0..scenario.num_tasks() {
            denom += mbs_cycles(scenario, decision, u, j);
        }
    }
    if denom == 0.0 {
        scenario.config.f_bs
    } else {
        scenario.config.f_bs * mbs_cycles(scenario, decision, i, k) / denom
    }
}

fn local_time_with(scenario: &Scenario, task: &TaskSpec, crypto: &CryptoProfile, d_bar: f64) -> f64 {
    ((task.data_size - d_bar) * task.cycles_per_bit + crypto.encrypt_cost * d_bar) / scenario.config.f_ue
}

/// Device-side time for task (i, k): compute the kept part, encrypt the
/// offloaded part.
pub fn local_time(scenario: &Scenario, decision: &DecisionVector, i: usize, k: usize) -> f64 {
    let (d_bar, _) = splits(scenario, decision, i, k);
    local_time_with(scenario, &scenario.tasks[i][k], chosen_crypto(scenario, decision, i, k), d_bar)
}

fn remote_time_sbs_with(
    scenario: &Scenario,
    task: &TaskSpec,
    crypto: &CryptoProfile,
    d_bar: f64,
    d_hat: f64,
    rate: f64,
    sbs_share: f64,
    mbs_share: f64,
) -> f64 {
    d_bar / rate
        + (d_bar - d_hat) * task.cycles_per_bit / sbs_share
        + d_hat / scenario.config.backhaul_rate
        + d_hat * task.cycles_per_bit / mbs_share
        + crypto.decrypt_cost * d_bar / sbs_share
        + crypto.encrypt_cost * d_hat / sbs_share
        + crypto.decrypt_cost * d_hat / mbs_share
}

/// Remote path time for an SBS-associated task: upload, SBS compute,
/// backhaul, MBS compute, plus the SBS decrypt / re-encrypt and MBS decrypt
/// overheads. A zero rate with positive offload propagates as +inf.
pub fn remote_time_sbs(scenario: &Scenario, decision: &DecisionVector, i: usize, k: usize) -> f64 {
    let (d_bar, d_hat) = splits(scenario, decision, i, k);
    remote_time_sbs_with(
        scenario,
        &scenario.tasks[i][k],
        chosen_crypto(scenario, decision, i, k),
        d_bar,
        d_hat,
        uplink_rate_sbs(scenario, decision, i),
        sbs_compute_share(scenario, decision, i, k),
        mbs_compute_share(scenario, decision, i, k),
    )
}

fn remote_time_mbs_with(
    task: &TaskSpec,
    crypto: &CryptoProfile,
    d_bar: f64,
    rate: f64,
    mbs_share: f64,
) -> f64 {
    d_bar / rate + d_bar * task.cycles_per_bit / mbs_share + crypto.decrypt_cost * d_bar / mbs_share
}

/// Remote path time for an MBS-associated task: upload, MBS compute, MBS
/// decrypt.
pub fn remote_time_mbs(scenario: &Scenario, decision: &DecisionVector, i: usize, k: usize) -> f64 {
    let (d_bar, _) = splits(scenario, decision, i, k);
    remote_time_mbs_with(
        &scenario.tasks[i][k],
        chosen_crypto(scenario, decision, i, k),
        d_bar,
        uplink_rate_mbs(scenario, decision, i),
        mbs_compute_share(scenario, decision, i, k),
    )
}

/// Completion time of IMD `i`: tasks run sequentially, each task's local and
/// remote paths run in parallel.
pub fn total_delay(scenario: &Scenario, decision: &DecisionVector, i: usize) -> f64 {
    (0..scenario.num_tasks())
        .map(|k| {
            let local = local_time(scenario, decision, i, k);
            let remote = if decision.bs_choice[i] == 0 {
                remote_time_mbs(scenario, decision, i, k)
            } else {
                remote_time_sbs(scenario, decision, i, k)
            };
            local.max(remote)
        })
        .sum()
}

/// Probability that protection at `level` fails for this task.
pub fn failure_probability(task: &TaskSpec, level: u32) -> f64 {
    if level < task.expected_level {
        1.0 - (-task.risk_coeff * (task.expected_level - level) as f64).exp()
    } else {
        0.0
    }
}

/// Expected financial loss of IMD `i` over its tasks, k$.
pub fn breach_cost(scenario: &Scenario, decision: &DecisionVector, i: usize) -> f64 {
    (0..scenario.num_tasks())
        .map(|k| {
            let task = &scenario.tasks[i][k];
            let level = chosen_crypto(scenario, decision, i, k).level;
            task.finance_loss * failure_probability(task, level)
        })
        .sum()
}

fn energy_terms_with(
    scenario: &Scenario,
    task: &TaskSpec,
    crypto: &CryptoProfile,
    d_bar: f64,
    power_mw: f64,
    rate: f64,
) -> (f64, f64) {
    let cfg = &scenario.config;
    let compute = cfg.energy_coeff * (task.data_size - d_bar) * task.cycles_per_bit * cfg.f_ue * cfg.f_ue;
    let encrypt = crypto.energy_cost * d_bar;
    let upload = power_mw / 1000.0 * d_bar / rate;
    (compute, encrypt + upload)
}

/// Total energy consumed by all IMDs, J: local compute, encryption and
/// upload.
pub fn total_energy(scenario: &Scenario, decision: &DecisionVector) -> f64 {
    let (local, offload) = energy_split(scenario, decision);
    local + offload
}

fn energy_split(scenario: &Scenario, decision: &DecisionVector) -> (f64, f64) {
    let mut local = 0.0;
    let mut offload = 0.0;
    for i in 0..scenario.num_imds() {
        let rate = uplink_rate(scenario, decision, i);
        for k in 0..scenario.num_tasks() {
            let (d_bar, _) = splits(scenario, decision, i, k);
            let (compute, rest) = energy_terms_with(
                scenario,
                &scenario.tasks[i][k],
                chosen_crypto(scenario, decision, i, k),
                d_bar,
                decision.power[i],
                rate,
            );
            local += compute;
            offload += rest;
        }
    }
    (local, offload)
}

/// Full evaluation: all intermediates plus the penalized fitness
/// F = -energy - alpha * deadline overruns - beta * cost overruns.
pub fn fitness(scenario: &Scenario, decision: &DecisionVector) -> EvaluationReport {
    let cfg = &scenario.config;
    let u = scenario.num_imds();
    let k_tasks = scenario.num_tasks();

    let per_imd_rate: Vec<f64> = (0..u).map(|i| uplink_rate(scenario, decision, i)).collect();

    let mut sbs_share = vec![0.0; u * k_tasks];
    let mut mbs_share = vec![0.0; u * k_tasks];
    for i in 0..u {
        for k in 0..k_tasks {
            let idx = scenario.task_index(i, k);
            if decision.bs_choice[i] != 0 {
                sbs_share[idx] = sbs_compute_share(scenario, decision, i, k);
            }
            mbs_share[idx] = mbs_compute_share(scenario, decision, i, k);
        }
    }

    let mut per_imd_delay = Vec::with_capacity(u);
    for i in 0..u {
        let mut tau = 0.0;
        for k in 0..k_tasks {
            let idx = scenario.task_index(i, k);
            let (d_bar, d_hat) = splits(scenario, decision, i, k);
            let task = &scenario.tasks[i][k];
            let crypto = chosen_crypto(scenario, decision, i, k);
            let local = local_time_with(scenario, task, crypto, d_bar);
            let remote = if decision.bs_choice[i] == 0 {
                remote_time_mbs_with(task, crypto, d_bar, per_imd_rate[i], mbs_share[idx])
            } else {
                remote_time_sbs_with(
                    scenario,
                    task,
                    crypto,
                    d_bar,
                    d_hat,
                    per_imd_rate[i],
                    sbs_share[idx],
                    mbs_share[idx],
                )
            };
            tau += local.max(remote);
        }
        per_imd_delay.push(tau);
    }

    let per_imd_cost: Vec<f64> = (0..u).map(|i| breach_cost(scenario, decision, i)).collect();

    let mut local_energy = 0.0;
    let mut offload_energy = 0.0;
    for i in 0..u {
        for k in 0..k_tasks {
            let (d_bar, _) = splits(scenario, decision, i, k);
            let (compute, rest) = energy_terms_with(
                scenario,
                &scenario.tasks[i][k],
                chosen_crypto(scenario, decision, i, k),
                d_bar,
                decision.power[i],
                per_imd_rate[i],
            );
            local_energy += compute;
            offload_energy += rest;
        }
    }
    let total_energy = local_energy + offload_energy;

    let delay_violation: Vec<f64> = per_imd_delay
        .iter()
        .zip(scenario.deadlines.iter())
        .map(|(&tau, &cap)| (tau - cap).max(0.0))
        .collect();
    let cost_violation: Vec<f64> = per_imd_cost
        .iter()
        .zip(scenario.max_costs.iter())
        .map(|(&psi, &cap)| (psi - cap).max(0.0))
        .collect();

    let penalty: f64 = delay_violation.iter().map(|v| cfg.penalty_alpha * v).sum::<f64>()
        + cost_violation.iter().map(|v| cfg.penalty_beta * v).sum::<f64>();
    let fitness = -total_energy - penalty;
    let feasible = delay_violation.iter().all(|&v| v == 0.0) && cost_violation.iter().all(|&v| v == 0.0);

    // Conservation diagnostic: shares at a claimed BS must sum back to f_bs.
    let mut share_rel_error: f64 = 0.0;
    for s in 1..=scenario.config.num_sbs {
        let mut sum = 0.0;
        let mut claimed = false;
        for i in 0..u {
            if decision.bs_choice[i] == s {
                claimed = true;
                for k in 0..k_tasks {
                    sum += sbs_share[scenario.task_index(i, k)];
                }
            }
        }
        if claimed {
            share_rel_error = share_rel_error.max((sum - cfg.f_bs).abs() / cfg.f_bs);
        }
    }
    let mbs_sum: f64 = mbs_share.iter().sum();
    share_rel_error = share_rel_error.max((mbs_sum - cfg.f_bs).abs() / cfg.f_bs);

    EvaluationReport {
        total_energy,
        local_energy,
        per_imd_delay,
        per_imd_cost,
        delay_violation,
        cost_violation,
        per_imd_rate,
        sbs_share,
        mbs_share,
        share_rel_error,
        fitness,
        feasible,
    }
}

fn clamp_int(x: f64, lo: usize, hi: usize) -> usize {
    if !x.is_finite() {
        return lo;
    }
    let r = x.round();
    if r <= lo as f64 {
        lo
    } else if r >= hi as f64 {
        hi
    } else {
        r as usize
    }
}

fn clamp_float(x: f64, lo: f64, hi: f64) -> f64 {
    if !x.is_finite() {
        return lo;
    }
    x.max(lo).min(hi)
}

/// Total repair: clamp every gene into its valid range, ordering the split
/// pair so `floor <= second <= first <= data_size` holds per task.
pub fn repair(scenario: &Scenario, raw: &RawDecision) -> DecisionVector {
    let cfg = &scenario.config;
    let bs_choice: Vec<usize> = raw.bs.iter().map(|&x| clamp_int(x, 0, cfg.num_sbs)).collect();
    let crypto_choice: Vec<usize> = raw
        .crypto
        .iter()
        .map(|&x| clamp_int(x, 1, scenario.crypto_catalog.len()))
        .collect();
    let channel_choice: Vec<usize> = raw
        .channel
        .iter()
        .map(|&x| clamp_int(x, 1, scenario.num_subchannels))
        .collect();
    let power: Vec<f64> = raw
        .power
        .iter()
        .map(|&x| clamp_float(x, cfg.power_floor, cfg.max_power))
        .collect();

    let mut first = Vec::with_capacity(raw.split1.len());
    let mut second = Vec::with_capacity(raw.split2.len());
    for i in 0..scenario.num_imds() {
        for k in 0..scenario.num_tasks() {
            let idx = scenario.task_index(i, k);
            let d = scenario.tasks[i][k].data_size;
            let g = clamp_float(raw.split1[idx], cfg.data_floor, d);
            let h = clamp_float(raw.split2[idx], cfg.data_floor, g);
            first.push(g);
            second.push(h);
        }
    }

    DecisionVector {
        bs_choice,
        crypto_choice,
        channel_choice,
        power,
        first_stage_split: first,
        second_stage_split: second,
    }
}
