//! Simulation world: BS/IMD topology, channel gains, SBS clusters, spectrum
//! plan, task set and cryptographic catalog, all derived deterministically
//! from a seed and a configuration.

use std::fs;
use std::io::Write;
use std::path::Path;

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use thiserror::Error;

/// Log-normal shadowing standard deviation in dB.
pub const SHADOWING_STD_DB: f64 = 8.0;

/// Stream separator so the clustering RNG does not replay the topology draws.
const CLUSTER_SEED_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("invalid config: {0}")]
    Invalid(String),
    #[error("unknown config key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {msg}")]
    BadValue { key: String, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Immutable description of one simulation setup. All randomness in the
/// derived [`Scenario`] comes from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub seed: u64,
    /// Number of IMDs (U).
    pub num_imds: usize,
    /// Number of SBSs; must be >= num_imds.
    pub num_sbs: usize,
    /// Number of SBS clusters (W).
    pub num_clusters: usize,
    /// Tasks per IMD (K).
    pub num_tasks_per_imd: usize,
    /// System bandwidth in Hz.
    pub system_bandwidth: f64,
    /// Subchannel bandwidth in Hz.
    pub subchannel_bandwidth: f64,
    /// Spectrum partition factor eta in [0, 1]; the MBS tier owns eta of the band.
    pub partition_factor: f64,
    /// Noise power in mW.
    pub noise_power: f64,
    /// Maximum uplink transmission power in mW.
    pub max_power: f64,
    /// Lower power bound in mW, kept above zero to avoid degenerate SNR.
    pub power_floor: f64,
    /// Lower bound on offloaded data in bits.
    pub data_floor: f64,
    /// Wired SBS-to-MBS backhaul rate in bits/s.
    pub backhaul_rate: f64,
    /// Edge server compute capacity in cycles/s (same for MBS and SBSs).
    pub f_bs: f64,
    /// Device compute capacity in cycles/s.
    pub f_ue: f64,
    /// Energy coefficient of the device chip architecture, J*s^2/cycle^3.
    pub energy_coeff: f64,
    /// Macrocell radius in meters; all nodes are placed inside this disc.
    pub macrocell_radius: f64,
    /// Per-IMD deadline range in seconds.
    pub deadline_range: (f64, f64),
    /// Task data size range in bits.
    pub data_size_range: (f64, f64),
    /// CPU cycles per bit range.
    pub cycles_per_bit_range: (f64, f64),
    /// Finance loss range in k$ per failed task.
    pub finance_loss_range: (f64, f64),
    /// Per-IMD maximum breach cost range in k$.
    pub max_breach_cost_range: (f64, f64),
    /// Security risk coefficient range.
    pub risk_coeff_range: (f64, f64),
    /// Candidate expected security levels.
    pub expected_level_set: Vec<u32>,
    /// Deadline penalty weight per second.
    pub penalty_alpha: f64,
    /// Breach cost penalty weight per k$.
    pub penalty_beta: f64,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            num_imds: 10,
            num_sbs: 30,
            num_clusters: 5,
            num_tasks_per_imd: 3,
            system_bandwidth: 2.0e7,
            subchannel_bandwidth: 1.0e6,
            partition_factor: 0.5,
            noise_power: 1e-11,
            max_power: 199.526,
            power_floor: 1e-20,
            data_floor: 1e-20,
            backhaul_rate: 1e9,
            f_bs: 2.0e10,
            f_ue: 1.0e9,
            energy_coeff: 1e-25,
            macrocell_radius: 500.0,
            deadline_range: (5.0, 10.0),
            data_size_range: (1.6e6, 4.0e6),
            cycles_per_bit_range: (50.0, 100.0),
            finance_loss_range: (1.0, 5.0),
            max_breach_cost_range: (5.0, 10.0),
            risk_coeff_range: (1.0, 3.0),
            expected_level_set: vec![5, 6],
            penalty_alpha: 1e4,
            penalty_beta: 1e4,
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let err = |msg: String| Err(ConfigError::Invalid(msg));
        if self.num_imds < 1 || self.num_sbs < 1 || self.num_clusters < 1 || self.num_tasks_per_imd < 1 {
            return err("all counts must be >= 1".into());
        }
        if self.num_sbs < self.num_imds {
            return err(format!(
                "num_sbs ({}) must be >= num_imds ({})",
                self.num_sbs, self.num_imds
            ));
        }
        if self.num_clusters > self.num_sbs {
            return err("num_clusters must be <= num_sbs".into());
        }
        if !(0.0..=1.0).contains(&self.partition_factor) {
            return err("partition_factor must lie in [0, 1]".into());
        }
        if self.noise_power <= 0.0 {
            return err("noise_power must be > 0".into());
        }
        if self.power_floor <= 0.0 || self.max_power < self.power_floor {
            return err("power bounds require 0 < power_floor <= max_power".into());
        }
        if self.data_floor <= 0.0 {
            return err("data_floor must be > 0".into());
        }
        if self.macrocell_radius <= 0.0 {
            return err("macrocell_radius must be > 0".into());
        }
        for (name, (lo, hi)) in [
            ("deadline_range", self.deadline_range),
            ("data_size_range", self.data_size_range),
            ("cycles_per_bit_range", self.cycles_per_bit_range),
            ("finance_loss_range", self.finance_loss_range),
            ("max_breach_cost_range", self.max_breach_cost_range),
            ("risk_coeff_range", self.risk_coeff_range),
        ] {
            if lo > hi || lo <= 0.0 {
                return err(format!("{name} must satisfy 0 < min <= max"));
            }
        }
        if self.expected_level_set.is_empty() {
            return err("expected_level_set must be non-empty".into());
        }
        if self.penalty_alpha <= 0.0 || self.penalty_beta <= 0.0 {
            return err("penalty weights must be > 0".into());
        }
        Ok(())
    }

    /// Parse a plain-text `key=value` configuration. Keys mirror the field
    /// names exactly; unknown keys are an error. Missing keys keep defaults.
    pub fn from_key_values(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = Self::default();
        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| ConfigError::Invalid(format!("expected key=value, got `{line}`")))?;
            cfg.set_key(key.trim(), value.trim())?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn set_key(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        fn num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T, ConfigError> {
            v.parse().map_err(|_| ConfigError::BadValue {
                key: key.into(),
                msg: format!("cannot parse `{v}`"),
            })
        }
        fn range(key: &str, v: &str) -> Result<(f64, f64), ConfigError> {
            let parts: Vec<&str> = v.split(',').map(str::trim).collect();
            if parts.len() != 2 {
                return Err(ConfigError::BadValue {
                    key: key.into(),
                    msg: "expected `min,max`".into(),
                });
            }
            Ok((num(key, parts[0])?, num(key, parts[1])?))
        }
        match key {
            "seed" => self.seed = num(key, value)?,
            "num_imds" => self.num_imds = num(key, value)?,
            "num_sbs" => self.num_sbs = num(key, value)?,
            "num_clusters" => self.num_clusters = num(key, value)?,
            "num_tasks_per_imd" => self.num_tasks_per_imd = num(key, value)?,
            "system_bandwidth" => self.system_bandwidth = num(key, value)?,
            "subchannel_bandwidth" => self.subchannel_bandwidth = num(key, value)?,
            "partition_factor" => self.partition_factor = num(key, value)?,
            "noise_power" => self.noise_power = num(key, value)?,
            "max_power" => self.max_power = num(key, value)?,
            "power_floor" => self.power_floor = num(key, value)?,
            "data_floor" => self.data_floor = num(key, value)?,
            "backhaul_rate" => self.backhaul_rate = num(key, value)?,
            "f_bs" => self.f_bs = num(key, value)?,
            "f_ue" => self.f_ue = num(key, value)?,
            "energy_coeff" => self.energy_coeff = num(key, value)?,
            "macrocell_radius" => self.macrocell_radius = num(key, value)?,
            "deadline_range" => self.deadline_range = range(key, value)?,
            "data_size_range" => self.data_size_range = range(key, value)?,
            "cycles_per_bit_range" => self.cycles_per_bit_range = range(key, value)?,
            "finance_loss_range" => self.finance_loss_range = range(key, value)?,
            "max_breach_cost_range" => self.max_breach_cost_range = range(key, value)?,
            "risk_coeff_range" => self.risk_coeff_range = range(key, value)?,
            "expected_level_set" => {
                let mut set = Vec::new();
                for part in value.split(',') {
                    set.push(num(key, part.trim())?);
                }
                self.expected_level_set = set;
            }
            "penalty_alpha" => self.penalty_alpha = num(key, value)?,
            "penalty_beta" => self.penalty_beta = num(key, value)?,
            _ => return Err(ConfigError::UnknownKey(key.into())),
        }
        Ok(())
    }
}

/// One cryptographic algorithm: protection level and per-bit costs.
#[derive(Debug, Clone, PartialEq)]
pub struct CryptoProfile {
    /// Protection level v_l.
    pub level: u32,
    /// Encryption cost in cycles/bit.
    pub encrypt_cost: f64,
    /// Decryption cost in cycles/bit.
    pub decrypt_cost: f64,
    /// Encryption energy in J/bit.
    pub energy_cost: f64,
}

/// The six-algorithm catalog used by default.
pub fn default_crypto_catalog() -> Vec<CryptoProfile> {
    let encrypt = [100.0, 200.0, 250.0, 300.0, 350.0, 1050.0];
    let decrypt = [90.0, 280.0, 350.0, 300.0, 400.0, 1700.0];
    let energy = [2.5296, 5.0425, 6.837, 7.8528, 8.7073, 26.3643];
    (0..6)
        .map(|l| CryptoProfile {
            level: l as u32 + 1,
            encrypt_cost: encrypt[l],
            decrypt_cost: decrypt[l],
            energy_cost: energy[l] * 1e-7,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct TaskSpec {
    /// Data size in bits.
    pub data_size: f64,
    /// CPU cycles needed per bit.
    pub cycles_per_bit: f64,
    /// Finance loss in k$ if security protection fails.
    pub finance_loss: f64,
    /// Security risk coefficient.
    pub risk_coeff: f64,
    /// Expected security level.
    pub expected_level: u32,
}

/// The immutable world evaluated against. Index 0 of `bs_positions` and of
/// the gain rows is the MBS; SBSs are 1..=num_sbs. Cluster ids are 1..=W.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub config: ScenarioConfig,
    pub bs_positions: Vec<(f64, f64)>,
    pub imd_positions: Vec<(f64, f64)>,
    /// Linear power gain per (IMD, BS) pair; gain[i][s], s in 0..=num_sbs.
    pub channel_gain: Vec<Vec<f64>>,
    /// Cluster id (1..=num_clusters) of SBS s at index s-1.
    pub cluster_of_sbs: Vec<usize>,
    /// Orthogonal subchannels per cluster.
    pub num_subchannels: usize,
    /// Band owned by the MBS tier, in Hz.
    pub mbs_bandwidth: f64,
    /// tasks[i][k].
    pub tasks: Vec<Vec<TaskSpec>>,
    /// Per-IMD deadline in seconds.
    pub deadlines: Vec<f64>,
    /// Per-IMD maximum acceptable breach cost in k$.
    pub max_costs: Vec<f64>,
    pub crypto_catalog: Vec<CryptoProfile>,
}

impl Scenario {
    pub fn num_imds(&self) -> usize {
        self.config.num_imds
    }

    pub fn num_tasks(&self) -> usize {
        self.config.num_tasks_per_imd
    }

    /// Flattened (IMD, task) index used by per-task gene blocks.
    pub fn task_index(&self, imd: usize, task: usize) -> usize {
        imd * self.config.num_tasks_per_imd + task
    }
}

/// Path loss in dB between the MBS and a device at `dist_m` meters.
pub fn path_loss_mbs_db(dist_m: f64) -> f64 {
    128.1 + 37.6 * (dist_m / 1000.0).log10()
}

/// Path loss in dB between an SBS and a device at `dist_m` meters.
pub fn path_loss_sbs_db(dist_m: f64) -> f64 {
    140.7 + 36.7 * (dist_m / 1000.0).log10()
}

/// MBS-tier bandwidth and per-cluster subchannel count. `N` is floored at 1
/// so the channel gene never degenerates.
pub fn spectrum_plan(config: &ScenarioConfig) -> (f64, usize) {
    let mbs_bandwidth = config.partition_factor * config.system_bandwidth;
    let raw = (1.0 - config.partition_factor) * config.system_bandwidth
        / (config.subchannel_bandwidth * config.num_clusters as f64);
    let n = raw.round() as i64;
    if n < 1 {
        log::warn!(
            "partition_factor {} leaves the SBS tier without spectrum; flooring N at 1",
            config.partition_factor
        );
        (mbs_bandwidth, 1)
    } else {
        (mbs_bandwidth, n as usize)
    }
}

fn dist(a: (f64, f64), b: (f64, f64)) -> f64 {
    ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()
}

fn draw_in_disc(rng: &mut impl Rng, radius: f64) -> (f64, f64) {
    let r = radius * rng.gen::<f64>().sqrt();
    let phi = rng.gen_range(0.0..std::f64::consts::TAU);
    (r * phi.cos(), r * phi.sin())
}

fn draw_range(rng: &mut impl Rng, (lo, hi): (f64, f64)) -> f64 {
    if lo == hi {
        lo
    } else {
        rng.gen_range(lo..hi)
    }
}

/// Lloyd K-means over 2-D positions. Returns 1-based cluster ids, one per
/// point. Ties go to the lowest cluster id; empty clusters are re-seeded
/// with the point farthest from its current centroid. Runs a fixed number of
/// seeded restarts and keeps the lowest-WCSS result, so a single unlucky
/// initialization cannot pin the clustering to a poor local optimum.
pub fn cluster_sbs(positions: &[(f64, f64)], num_clusters: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<(f64, Vec<usize>)> = None;
    for _ in 0..10 {
        let (assignment, history) = lloyd_once(positions, num_clusters, &mut rng);
        let wcss = *history.last().unwrap();
        if best.as_ref().map_or(true, |(b, _)| wcss < *b) {
            best = Some((wcss, assignment));
        }
    }
    best.unwrap().1.into_iter().map(|a| a + 1).collect()
}

/// Single Lloyd run seeded from `seed`, with the per-round within-cluster
/// sum of squares, for tests.
#[cfg(test)]
pub(crate) fn lloyd_with_history(
    positions: &[(f64, f64)],
    num_clusters: usize,
    seed: u64,
) -> (Vec<usize>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (assignment, history) = lloyd_once(positions, num_clusters, &mut rng);
    (assignment.into_iter().map(|a| a + 1).collect(), history)
}

fn lloyd_once(
    positions: &[(f64, f64)],
    num_clusters: usize,
    rng: &mut impl Rng,
) -> (Vec<usize>, Vec<f64>) {
    assert!(num_clusters >= 1 && num_clusters <= positions.len());
    let mut indices: Vec<usize> = (0..positions.len()).collect();
    indices.shuffle(rng);
    let mut centroids: Vec<(f64, f64)> = indices[..num_clusters]
        .iter()
        .map(|&i| positions[i])
        .collect();

    let mut assignment = vec![0usize; positions.len()];
    let mut history = Vec::new();
    for _round in 0..100 {
        let mut next = vec![0usize; positions.len()];
        for (p, slot) in positions.iter().zip(next.iter_mut()) {
            let mut best = 0;
            let mut best_d = f64::INFINITY;
            for (c, centroid) in centroids.iter().enumerate() {
                let d = dist(*p, *centroid);
                if d < best_d {
                    best_d = d;
                    best = c;
                }
            }
            *slot = best;
        }

        // Re-seed empty clusters with the globally farthest point.
        loop {
            let mut counts = vec![0usize; num_clusters];
            for &a in &next {
                counts[a] += 1;
            }
            let Some(empty) = counts.iter().position(|&c| c == 0) else {
                break;
            };
            let farthest = (0..positions.len())
                .max_by(|&a, &b| {
                    let da = dist(positions[a], centroids[next[a]]);
                    let db = dist(positions[b], centroids[next[b]]);
                    da.partial_cmp(&db).unwrap()
                })
                .unwrap();
            centroids[empty] = positions[farthest];
            next[farthest] = empty;
        }

        for c in 0..num_clusters {
            let members: Vec<&(f64, f64)> = positions
                .iter()
                .zip(next.iter())
                .filter(|(_, &a)| a == c)
                .map(|(p, _)| p)
                .collect();
            if !members.is_empty() {
                let n = members.len() as f64;
                centroids[c] = (
                    members.iter().map(|p| p.0).sum::<f64>() / n,
                    members.iter().map(|p| p.1).sum::<f64>() / n,
                );
            }
        }

        let wcss: f64 = positions
            .iter()
            .zip(next.iter())
            .map(|(p, &a)| dist(*p, centroids[a]).powi(2))
            .sum();
        history.push(wcss);

        let stable = next == assignment;
        assignment = next;
        if stable {
            break;
        }
    }
    (assignment, history)
}

/// Build the full world from a config. Pure in the config, including the
/// seed: identical configs produce bit-identical scenarios.
pub fn generate_scenario(config: &ScenarioConfig) -> Result<Scenario, ConfigError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let shadowing = Normal::new(0.0, SHADOWING_STD_DB).unwrap();

    let mut bs_positions = vec![(0.0, 0.0)]; // MBS at the macrocell center
    for _ in 0..config.num_sbs {
        bs_positions.push(draw_in_disc(&mut rng, config.macrocell_radius));
    }

    let cluster_of_sbs = cluster_sbs(
        &bs_positions[1..],
        config.num_clusters,
        config.seed ^ CLUSTER_SEED_SALT,
    );

    let mut imd_positions = Vec::with_capacity(config.num_imds);
    for _ in 0..config.num_imds {
        // A zero distance to any BS makes the path-loss log degenerate.
        let pos = loop {
            let candidate = draw_in_disc(&mut rng, config.macrocell_radius);
            if bs_positions.iter().all(|&bs| dist(candidate, bs) > 0.0) {
                break candidate;
            }
        };
        imd_positions.push(pos);
    }

    let mut channel_gain = Vec::with_capacity(config.num_imds);
    for &imd in &imd_positions {
        let mut row = Vec::with_capacity(bs_positions.len());
        for (s, &bs) in bs_positions.iter().enumerate() {
            let d = dist(imd, bs);
            let pl = if s == 0 {
                path_loss_mbs_db(d)
            } else {
                path_loss_sbs_db(d)
            };
            let shadow = shadowing.sample(&mut rng);
            row.push(10f64.powf(-(pl + shadow) / 10.0));
        }
        channel_gain.push(row);
    }

    let catalog = default_crypto_catalog();
    let mut tasks = Vec::with_capacity(config.num_imds);
    for _ in 0..config.num_imds {
        let mut per_imd = Vec::with_capacity(config.num_tasks_per_imd);
        for _ in 0..config.num_tasks_per_imd {
            let level_idx = rng.gen_range(0..config.expected_level_set.len());
            per_imd.push(TaskSpec {
                data_size: draw_range(&mut rng, config.data_size_range),
                cycles_per_bit: draw_range(&mut rng, config.cycles_per_bit_range),
                finance_loss: draw_range(&mut rng, config.finance_loss_range),
                risk_coeff: draw_range(&mut rng, config.risk_coeff_range),
                expected_level: config.expected_level_set[level_idx],
            });
        }
        tasks.push(per_imd);
    }

    let deadlines = (0..config.num_imds)
        .map(|_| draw_range(&mut rng, config.deadline_range))
        .collect();
    let max_costs = (0..config.num_imds)
        .map(|_| draw_range(&mut rng, config.max_breach_cost_range))
        .collect();

    let (mbs_bandwidth, num_subchannels) = spectrum_plan(config);

    Ok(Scenario {
        config: config.clone(),
        bs_positions,
        imd_positions,
        channel_gain,
        cluster_of_sbs,
        num_subchannels,
        mbs_bandwidth,
        tasks,
        deadlines,
        max_costs,
        crypto_catalog: catalog,
    })
}

impl Scenario {
    /// Dump the world as one CSV per table, for inspection.
    pub fn write_csv_dump(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;

        let mut f = fs::File::create(dir.join("bs_positions.csv"))?;
        writeln!(f, "bs,x,y")?;
        for (s, (x, y)) in self.bs_positions.iter().enumerate() {
            writeln!(f, "{s},{x},{y}")?;
        }

        let mut f = fs::File::create(dir.join("imd_positions.csv"))?;
        writeln!(f, "imd,x,y")?;
        for (i, (x, y)) in self.imd_positions.iter().enumerate() {
            writeln!(f, "{i},{x},{y}")?;
        }

        let mut f = fs::File::create(dir.join("channel_gains.csv"))?;
        writeln!(f, "imd,bs,channel_gain")?;
        for (i, row) in self.channel_gain.iter().enumerate() {
            for (s, g) in row.iter().enumerate() {
                writeln!(f, "{i},{s},{g}")?;
            }
        }

        let mut f = fs::File::create(dir.join("clusters.csv"))?;
        writeln!(f, "sbs,cluster")?;
        for (s, c) in self.cluster_of_sbs.iter().enumerate() {
            writeln!(f, "{},{}", s + 1, c)?;
        }

        let mut f = fs::File::create(dir.join("tasks.csv"))?;
        writeln!(
            f,
            "imd,task,data_size,cycles_per_bit,finance_loss,risk_coeff,expected_level"
        )?;
        for (i, per_imd) in self.tasks.iter().enumerate() {
            for (k, t) in per_imd.iter().enumerate() {
                writeln!(
                    f,
                    "{i},{k},{},{},{},{},{}",
                    t.data_size, t.cycles_per_bit, t.finance_loss, t.risk_coeff, t.expected_level
                )?;
            }
        }

        let mut f = fs::File::create(dir.join("imds.csv"))?;
        writeln!(f, "imd,deadline,max_cost")?;
        for i in 0..self.num_imds() {
            writeln!(f, "{i},{},{}", self.deadlines[i], self.max_costs[i])?;
        }

        let mut f = fs::File::create(dir.join("crypto_catalog.csv"))?;
        writeln!(f, "level,encrypt_cost,decrypt_cost,energy_cost")?;
        for p in &self.crypto_catalog {
            writeln!(
                f,
                "{},{},{},{}",
                p.level, p.encrypt_cost, p.decrypt_cost, p.energy_cost
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn small_config() -> ScenarioConfig {
        ScenarioConfig {
            seed: 42,
            num_imds: 4,
            num_sbs: 8,
            num_clusters: 2,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn same_seed_same_scenario() {
        let cfg = small_config();
        let a = generate_scenario(&cfg).unwrap();
        let b = generate_scenario(&cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn path_loss_at_one_km() {
        assert!((path_loss_mbs_db(1000.0) - 128.1).abs() < 1e-12);
        assert!((path_loss_sbs_db(1000.0) - 140.7).abs() < 1e-12);
    }

    #[test]
    fn degenerate_data_range() {
        let mut cfg = small_config();
        cfg.data_size_range = (1.6e6, 1.6e6);
        let sc = generate_scenario(&cfg).unwrap();
        for per_imd in &sc.tasks {
            for t in per_imd {
                assert_eq!(t.data_size, 1.6e6);
            }
        }
    }

    #[test]
    fn spectrum_plan_examples() {
        let mut cfg = ScenarioConfig::default();
        cfg.partition_factor = 0.5;
        assert_eq!(spectrum_plan(&cfg), (1e7, 2));
        cfg.partition_factor = 1.0;
        assert_eq!(spectrum_plan(&cfg), (2e7, 1));
        cfg.partition_factor = 0.0;
        assert_eq!(spectrum_plan(&cfg), (0.0, 4));
    }

    #[test]
    fn one_cluster_per_sbs_when_w_equals_s() {
        let positions: Vec<(f64, f64)> = (0..6).map(|i| (i as f64 * 10.0, 0.0)).collect();
        let ids = cluster_sbs(&positions, 6, 1);
        let mut sorted = ids.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 6);
    }

    #[test]
    fn single_cluster() {
        let positions: Vec<(f64, f64)> = (0..5).map(|i| (i as f64, i as f64)).collect();
        let ids = cluster_sbs(&positions, 1, 9);
        assert!(ids.iter().all(|&c| c == 1));
    }

    #[test]
    fn square_corners_match_best_balanced_pairing() {
        let positions: [(f64, f64); 4] = [(0.0, 0.0), (1.0, 0.0), (0.0, 1.0), (1.0, 1.0)];
        let wcss = |groups: [[usize; 2]; 2]| -> f64 {
            groups
                .iter()
                .map(|g| {
                    let cx = (positions[g[0]].0 + positions[g[1]].0) / 2.0;
                    let cy = (positions[g[0]].1 + positions[g[1]].1) / 2.0;
                    g.iter()
                        .map(|&p| {
                            (positions[p].0 - cx).powi(2) + (positions[p].1 - cy).powi(2)
                        })
                        .sum::<f64>()
                })
                .sum()
        };
        let best = [[[0, 1], [2, 3]], [[0, 2], [1, 3]], [[0, 3], [1, 2]]]
            .into_iter()
            .map(wcss)
            .fold(f64::INFINITY, f64::min);

        for seed in 0..5 {
            let ids = cluster_sbs(&positions, 2, seed);
            let mut groups: Vec<Vec<usize>> = vec![Vec::new(); 2];
            for (p, &c) in ids.iter().enumerate() {
                groups[c - 1].push(p);
            }
            assert!(groups.iter().all(|g| g.len() == 2), "unbalanced: {ids:?}");
            let got = wcss([
                [groups[0][0], groups[0][1]],
                [groups[1][0], groups[1][1]],
            ]);
            assert!((got - best).abs() < 1e-9, "seed {seed}: {got} vs {best}");
        }
    }

    #[test]
    fn unknown_key_is_an_error() {
        let err = ScenarioConfig::from_key_values("bogus=1").unwrap_err();
        assert!(matches!(err, ConfigError::UnknownKey(_)));
    }

    #[test]
    fn key_value_parsing() {
        let cfg = ScenarioConfig::from_key_values(
            "seed=7\nnum_imds=3\nnum_sbs=5\nnum_clusters=2\ndeadline_range=4,6\nexpected_level_set=5,6\n# comment\n",
        )
        .unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.num_imds, 3);
        assert_eq!(cfg.deadline_range, (4.0, 6.0));
    }

    #[test]
    fn invalid_config_rejected() {
        let mut cfg = small_config();
        cfg.num_sbs = 2; // fewer SBSs than IMDs
        assert!(generate_scenario(&cfg).is_err());
    }

    #[test]
    fn crypto_catalog_levels_strictly_increase() {
        let catalog = default_crypto_catalog();
        assert_eq!(catalog.len(), 6);
        for pair in catalog.windows(2) {
            assert!(pair[0].level < pair[1].level);
        }
        assert!((catalog[0].energy_cost - 2.5296e-7).abs() < 1e-18);
        assert_eq!(catalog[5].encrypt_cost, 1050.0);
        assert_eq!(catalog[5].decrypt_cost, 1700.0);
    }

    proptest! {
        #[test]
        fn gains_positive_and_clusters_partition(seed in 0u64..500) {
            let cfg = ScenarioConfig { seed, ..small_config() };
            let sc = generate_scenario(&cfg).unwrap();
            for row in &sc.channel_gain {
                for &g in row {
                    prop_assert!(g > 0.0);
                }
            }
            prop_assert_eq!(sc.cluster_of_sbs.len(), cfg.num_sbs);
            let mut seen = vec![false; cfg.num_clusters];
            for &c in &sc.cluster_of_sbs {
                prop_assert!(c >= 1 && c <= cfg.num_clusters);
                seen[c - 1] = true;
            }
            prop_assert!(seen.into_iter().all(|s| s));
        }

        #[test]
        fn kmeans_wcss_non_increasing(seed in 0u64..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let positions: Vec<(f64, f64)> = (0..12)
                .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            let (_, history) = lloyd_with_history(&positions, 3, seed);
            for pair in history.windows(2) {
                prop_assert!(pair[1] <= pair[0] + 1e-9);
            }
        }
    }
}
