//! Experiment driver: training runs, scheme sweeps and policy-vs-reference
//! accuracy reports, all reproducible from one master seed.
//!
//! Configuration is a TOML file with human units (dBm, dB, wavelength
//! multiples); unknown keys are rejected. Every CSV artifact starts with a
//! provenance comment carrying the config hash and the effective master
//! seed, so reruns are byte-comparable.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::baselines::{self, Scheme, SweepAxis, SweepPoint};
use crate::channel::{sample_scenario, SystemConfig};
use crate::ddpg::{self, AgentConfig};
use crate::error::{Error, Result};
use crate::neural::{Checkpoint, Network};
use crate::rl_env::EnvConfig;
use crate::seed;
use crate::units::{db_to_linear, dbm_to_watts};

/// Command-line overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub out_dir: Option<PathBuf>,
    pub scenarios: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepKind {
    Power,
    Region,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct FileConfig {
    master_seed: u64,
    out_dir: PathBuf,
    system: SystemSection,
    reward: RewardSection,
    agent: AgentSection,
    sweep: SweepSection,
    accuracy: AccuracySection,
}

impl Default for FileConfig {
    fn default() -> Self {
        FileConfig {
            master_seed: 7,
            out_dir: PathBuf::from("runs"),
            system: SystemSection::default(),
            reward: RewardSection::default(),
            agent: AgentSection::default(),
            sweep: SweepSection::default(),
            accuracy: AccuracySection::default(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SystemSection {
    n_bs_antennas: usize,
    wavelength: f64,
    l_b: usize,
    l_a: usize,
    l_r: usize,
    /// Mobility square side as a multiple of the wavelength.
    region_side_wavelengths: f64,
    alpha: f64,
    sigma2_dbm: f64,
    p_t_dbm: f64,
    p_nf_dbm: f64,
    r_th: f64,
    g0_db: f64,
    omega_si2_db: f64,
    d_bn: f64,
    d_bf: f64,
    d_nf: f64,
}

impl Default for SystemSection {
    fn default() -> Self {
        SystemSection {
            n_bs_antennas: 4,
            wavelength: 0.01,
            l_b: 6,
            l_a: 6,
            l_r: 6,
            region_side_wavelengths: 2.0,
            alpha: 3.9,
            sigma2_dbm: -100.0,
            p_t_dbm: 15.0,
            p_nf_dbm: 10.0,
            r_th: 0.7,
            g0_db: -40.0,
            omega_si2_db: -110.0,
            d_bn: 50.0,
            d_bf: 100.0,
            d_nf: 50.0,
        }
    }
}

impl SystemSection {
    fn to_system_config(&self) -> SystemConfig<f64> {
        SystemConfig {
            n_bs_antennas: self.n_bs_antennas,
            wavelength: self.wavelength,
            l_b: self.l_b,
            l_a: self.l_a,
            l_r: self.l_r,
            region_side: self.region_side_wavelengths * self.wavelength,
            alpha: self.alpha,
            sigma2: dbm_to_watts(self.sigma2_dbm),
            p_t: dbm_to_watts(self.p_t_dbm),
            p_nf: dbm_to_watts(self.p_nf_dbm),
            r_th: self.r_th,
            g0: db_to_linear(self.g0_db),
            omega_si2: db_to_linear(self.omega_si2_db),
            d_bn: self.d_bn,
            d_bf: self.d_bf,
            d_nf: self.d_nf,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct RewardSection {
    pen: f64,
}

impl Default for RewardSection {
    fn default() -> Self {
        RewardSection { pen: 10.0 }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AgentSection {
    discount: f64,
    tau: f64,
    buffer_capacity: usize,
    batch_size: usize,
    noise_stddev_initial: f64,
    noise_decay: f64,
    noise_floor: f64,
    episodes: usize,
    steps_per_episode: usize,
    actor_lr: f64,
    critic_lr: f64,
    hidden: Vec<usize>,
    reward_scale: f64,
}

impl Default for AgentSection {
    fn default() -> Self {
        let d = AgentConfig::<f64>::default();
        AgentSection {
            discount: d.discount,
            tau: d.tau,
            buffer_capacity: d.buffer_capacity,
            batch_size: d.batch_size,
            noise_stddev_initial: d.noise_stddev_initial,
            noise_decay: d.noise_decay,
            noise_floor: d.noise_floor,
            episodes: d.episodes,
            steps_per_episode: d.steps_per_episode,
            actor_lr: d.actor_lr,
            critic_lr: d.critic_lr,
            hidden: d.hidden,
            reward_scale: d.reward_scale,
        }
    }
}

impl AgentSection {
    fn to_agent_config(&self) -> AgentConfig<f64> {
        AgentConfig {
            discount: self.discount,
            tau: self.tau,
            buffer_capacity: self.buffer_capacity,
            batch_size: self.batch_size,
            noise_stddev_initial: self.noise_stddev_initial,
            noise_decay: self.noise_decay,
            noise_floor: self.noise_floor,
            episodes: self.episodes,
            steps_per_episode: self.steps_per_episode,
            actor_lr: self.actor_lr,
            critic_lr: self.critic_lr,
            hidden: self.hidden.clone(),
            reward_scale: self.reward_scale,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct SweepSection {
    power_dbm: Vec<f64>,
    region_scale: Vec<f64>,
    n_scenarios: usize,
    optimizer_budget: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        SweepSection {
            power_dbm: vec![11.0, 13.0, 15.0, 17.0, 18.0],
            region_scale: vec![0.25, 0.5, 0.75, 1.0, 1.25, 1.5],
            n_scenarios: 200,
            optimizer_budget: 20_000,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
struct AccuracySection {
    power_dbm: Vec<f64>,
    n_scenarios: usize,
    optimizer_budget: usize,
}

impl Default for AccuracySection {
    fn default() -> Self {
        AccuracySection {
            power_dbm: vec![15.0],
            n_scenarios: 20,
            optimizer_budget: 20_000,
        }
    }
}

/// Fully resolved experiment configuration.
#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub master_seed: u64,
    pub out_dir: PathBuf,
    pub system: SystemConfig<f64>,
    pub pen: f64,
    pub agent: AgentConfig<f64>,
    pub sweep_power_dbm: Vec<f64>,
    pub sweep_region_scale: Vec<f64>,
    pub sweep_scenarios: usize,
    pub sweep_budget: usize,
    pub accuracy_power_dbm: Vec<f64>,
    pub accuracy_scenarios: usize,
    pub accuracy_budget: usize,
    /// SHA-256 of the raw config file, for provenance lines.
    pub config_hash: String,
}

impl ExperimentConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> Result<Self> {
        let bytes = std::fs::read(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let text = String::from_utf8(bytes.clone())
            .map_err(|_| Error::Config(format!("{} is not UTF-8", path.display())))?;
        let file: FileConfig =
            toml::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let digest = Sha256::digest(&bytes);
        let mut config_hash = String::with_capacity(16);
        for byte in digest.iter().take(8) {
            let _ = write!(config_hash, "{byte:02x}");
        }
        let config = ExperimentConfig {
            master_seed: overrides.seed.unwrap_or(file.master_seed),
            out_dir: overrides.out_dir.clone().unwrap_or(file.out_dir),
            system: file.system.to_system_config(),
            pen: file.reward.pen,
            agent: file.agent.to_agent_config(),
            sweep_power_dbm: file.sweep.power_dbm,
            sweep_region_scale: file.sweep.region_scale,
            sweep_scenarios: overrides.scenarios.unwrap_or(file.sweep.n_scenarios),
            sweep_budget: file.sweep.optimizer_budget,
            accuracy_power_dbm: file.accuracy.power_dbm,
            accuracy_scenarios: overrides.scenarios.unwrap_or(file.accuracy.n_scenarios),
            accuracy_budget: file.accuracy.optimizer_budget,
            config_hash,
        };
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<()> {
        self.system.validate()?;
        self.agent.validate()?;
        if !(self.pen > 0.0) {
            return Err(Error::Config("reward.pen must be > 0".into()));
        }
        if self.sweep_power_dbm.is_empty() || self.sweep_region_scale.is_empty() {
            return Err(Error::Config("sweep.power_dbm and sweep.region_scale must be non-empty".into()));
        }
        if self.sweep_region_scale.iter().any(|s| *s <= 0.0) {
            return Err(Error::Config("sweep.region_scale entries must be > 0".into()));
        }
        if self.accuracy_power_dbm.is_empty() {
            return Err(Error::Config("accuracy.power_dbm must be non-empty".into()));
        }
        if self.sweep_scenarios < 1 || self.accuracy_scenarios < 1 {
            return Err(Error::Config("scenario counts must be >= 1".into()));
        }
        if self.sweep_budget < 1 || self.accuracy_budget < 1 {
            return Err(Error::Config("optimizer budgets must be >= 1".into()));
        }
        Ok(())
    }

    pub fn env_config(&self) -> EnvConfig<f64> {
        EnvConfig {
            system: self.system.clone(),
            pen: self.pen,
        }
    }

    fn provenance(&self) -> String {
        format!(
            "# config_hash={} master_seed={}",
            self.config_hash, self.master_seed
        )
    }
}

fn write_csv(path: &Path, provenance: &str, header: &str, rows: &[String]) -> Result<()> {
    let mut out = String::new();
    out.push_str(provenance);
    out.push('\n');
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    std::fs::write(path, out)?;
    Ok(())
}

/// Artifacts of a training run.
#[derive(Debug, Clone)]
pub struct TrainArtifacts {
    pub curve_csv: PathBuf,
    pub checkpoint: PathBuf,
    /// Mean reward over the final 10% of episodes.
    pub final_window_mean: f64,
}

/// Train the agent, write `learning_curve.csv` and `model.json`.
pub fn cmd_train(config_path: &Path, overrides: &Overrides) -> Result<TrainArtifacts> {
    let config = ExperimentConfig::load(config_path, overrides)?;
    let result = ddpg::train(&config.env_config(), &config.agent, config.master_seed)?;
    std::fs::create_dir_all(&config.out_dir)?;

    let curve_csv = config.out_dir.join("learning_curve.csv");
    let rows: Vec<String> = result
        .curve
        .iter()
        .enumerate()
        .map(|(i, reward)| format!("{},{}", i + 1, reward))
        .collect();
    write_csv(&curve_csv, &config.provenance(), "episode,mean_reward", &rows)?;

    let checkpoint = config.out_dir.join("model.json");
    Checkpoint::new(vec![
        result.agent.actor.to_checkpoint("actor"),
        result.agent.critic.to_checkpoint("critic"),
    ])
    .save(&checkpoint)?;

    let window = (result.curve.len() / 10).max(1);
    let final_window_mean =
        result.curve[result.curve.len() - window..].iter().sum::<f64>() / window as f64;
    Ok(TrainArtifacts {
        curve_csv,
        checkpoint,
        final_window_mean,
    })
}

/// Artifacts of a sweep run.
#[derive(Debug, Clone)]
pub struct SweepArtifacts {
    pub sweep_csv: PathBuf,
    pub points: Vec<SweepPoint<f64>>,
    /// Violations of the expected scheme ordering and (for power sweeps)
    /// per-scheme monotonicity across the sweep.
    pub ordering_violations: usize,
}

/// Run all four schemes over the requested axis and write the sweep CSV.
pub fn cmd_sweep(config_path: &Path, kind: SweepKind, overrides: &Overrides) -> Result<SweepArtifacts> {
    let config = ExperimentConfig::load(config_path, overrides)?;
    let (axis, mut dbm_sorted) = match kind {
        SweepKind::Power => {
            let mut dbm = config.sweep_power_dbm.clone();
            dbm.sort_by(|a, b| a.partial_cmp(b).expect("finite dBm values"));
            (
                SweepAxis::BsPower(dbm.iter().map(|d| dbm_to_watts(*d)).collect()),
                dbm,
            )
        }
        SweepKind::Region => (SweepAxis::RegionScale(config.sweep_region_scale.clone()), vec![]),
    };
    if kind == SweepKind::Region {
        dbm_sorted.clear();
    }

    let mut points: Vec<SweepPoint<f64>> = Vec::new();
    for scheme in Scheme::ALL {
        points.extend(baselines::evaluate_scheme_sweep(
            &config.system,
            scheme,
            &axis,
            config.sweep_scenarios,
            config.sweep_budget,
            config.master_seed,
        )?);
    }

    let (variable, value_of): (&str, Box<dyn Fn(usize, &SweepPoint<f64>) -> f64>) = match kind {
        SweepKind::Power => ("bs_power_dbm", Box::new(move |i, _p| dbm_sorted[i])),
        SweepKind::Region => ("region_scale", Box::new(|_i, p: &SweepPoint<f64>| p.value)),
    };
    let n_points = points.len() / Scheme::ALL.len();
    let rows: Vec<String> = points
        .iter()
        .enumerate()
        .map(|(idx, p)| {
            let within = idx % n_points;
            format!(
                "{},{},{},{},{},{}",
                p.scheme,
                variable,
                value_of(within, p),
                p.mean_rate,
                p.stderr,
                p.n_scenarios
            )
        })
        .collect();

    std::fs::create_dir_all(&config.out_dir)?;
    let sweep_csv = config.out_dir.join(match kind {
        SweepKind::Power => "sweep_power.csv",
        SweepKind::Region => "sweep_region.csv",
    });
    write_csv(
        &sweep_csv,
        &config.provenance(),
        "scheme,sweep_variable,value,mean_rate,stderr,n_scenarios",
        &rows,
    )?;

    let ordering_violations = count_ordering_violations(&points, n_points, kind);
    Ok(SweepArtifacts {
        sweep_csv,
        points,
        ordering_violations,
    })
}

fn mean_at(points: &[SweepPoint<f64>], n_points: usize, scheme: Scheme, idx: usize) -> f64 {
    let scheme_pos = Scheme::ALL.iter().position(|s| *s == scheme).expect("known scheme");
    points[scheme_pos * n_points + idx].mean_rate
}

/// Expected orderings: MA-CNOMA ≥ MA-NOMA ≥ F-NOMA and
/// MA-CNOMA ≥ F-CNOMA ≥ F-NOMA at every point; for power sweeps every
/// scheme must also be monotone non-decreasing along the axis.
fn count_ordering_violations(points: &[SweepPoint<f64>], n_points: usize, kind: SweepKind) -> usize {
    let pairs = [
        (Scheme::MaCnoma, Scheme::MaNoma),
        (Scheme::MaCnoma, Scheme::FCnoma),
        (Scheme::MaNoma, Scheme::FNoma),
        (Scheme::FCnoma, Scheme::FNoma),
    ];
    let mut violations = 0;
    for idx in 0..n_points {
        for (hi, lo) in pairs {
            if mean_at(points, n_points, hi, idx) < mean_at(points, n_points, lo, idx) - 1e-12 {
                violations += 1;
            }
        }
    }
    if kind == SweepKind::Power {
        for scheme in Scheme::ALL {
            for idx in 1..n_points {
                if mean_at(points, n_points, scheme, idx)
                    < mean_at(points, n_points, scheme, idx - 1) - 1e-12
                {
                    violations += 1;
                }
            }
        }
    }
    violations
}

/// One row of the accuracy report.
#[derive(Debug, Clone)]
pub struct AccuracyRow {
    pub power_dbm: f64,
    pub ddpg_mean: f64,
    pub reference_mean: f64,
    pub ratio: f64,
}

/// Artifacts of an accuracy run.
#[derive(Debug, Clone)]
pub struct AccuracyArtifacts {
    pub accuracy_csv: PathBuf,
    pub rows: Vec<AccuracyRow>,
    /// Pooled mean-over-powers ratio.
    pub aggregate_ratio: f64,
}

/// Evaluate the deterministic trained policy against the reference optimizer
/// on held-out scenarios at every configured BS power.
pub fn cmd_accuracy(
    config_path: &Path,
    checkpoint_path: &Path,
    overrides: &Overrides,
) -> Result<AccuracyArtifacts> {
    let config = ExperimentConfig::load(config_path, overrides)?;
    let checkpoint = Checkpoint::<f64>::load(checkpoint_path)?;
    let actor: Network<f64> = checkpoint.network("actor")?;

    let mut rows = Vec::new();
    let mut ddpg_total = 0.0;
    let mut reference_total = 0.0;
    for (power_idx, power_dbm) in config.accuracy_power_dbm.iter().enumerate() {
        let mut system = config.system.clone();
        system.p_t = dbm_to_watts(*power_dbm);
        let env = EnvConfig {
            system: system.clone(),
            pen: config.pen,
        };
        let per_scenario: Result<Vec<(f64, f64)>> = (0..config.accuracy_scenarios)
            .into_par_iter()
            .map(|i| {
                // held-out stream, disjoint from the training scenarios
                let mut scen_rng = seed::stream(config.master_seed, "eval-scen", i as u64);
                let scenario = sample_scenario(&system, &mut scen_rng);
                let policy = ddpg::evaluate_policy(
                    &actor,
                    &env,
                    &scenario,
                    config.agent.steps_per_episode,
                )?;
                let mut opt_rng = seed::stream(
                    config.master_seed,
                    "optimizer",
                    seed::compose_index(power_idx, i),
                );
                let report = baselines::reference_optimize(
                    &scenario,
                    &system,
                    Scheme::MaCnoma,
                    config.accuracy_budget,
                    &mut opt_rng,
                    &[],
                )?;
                let reference = if report.feasible { report.best_objective } else { 0.0 };
                Ok((policy.best_objective, reference))
            })
            .collect();
        let per_scenario = per_scenario?;
        let n = per_scenario.len() as f64;
        let ddpg_mean = per_scenario.iter().map(|(d, _)| d).sum::<f64>() / n;
        let reference_mean = per_scenario.iter().map(|(_, r)| r).sum::<f64>() / n;
        ddpg_total += ddpg_mean;
        reference_total += reference_mean;
        rows.push(AccuracyRow {
            power_dbm: *power_dbm,
            ddpg_mean,
            reference_mean,
            ratio: if reference_mean > 0.0 { ddpg_mean / reference_mean } else { 0.0 },
        });
    }
    let aggregate_ratio = if reference_total > 0.0 {
        ddpg_total / reference_total
    } else {
        0.0
    };

    std::fs::create_dir_all(&config.out_dir)?;
    let accuracy_csv = config.out_dir.join("accuracy.csv");
    let mut csv_rows: Vec<String> = rows
        .iter()
        .map(|r| {
            format!(
                "{},{},{},{},{}",
                r.power_dbm, r.ddpg_mean, r.reference_mean, r.ratio, config.accuracy_scenarios
            )
        })
        .collect();
    csv_rows.push(format!(
        "aggregate,{},{},{},{}",
        ddpg_total / rows.len() as f64,
        reference_total / rows.len() as f64,
        aggregate_ratio,
        config.accuracy_scenarios
    ));
    write_csv(
        &accuracy_csv,
        &config.provenance(),
        "power_dbm,ddpg_mean,reference_mean,ratio,n_scenarios",
        &csv_rows,
    )?;

    Ok(AccuracyArtifacts {
        accuracy_csv,
        rows,
        aggregate_ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_config(dir: &Path, body: &str) -> PathBuf {
        let path = dir.join("config.toml");
        std::fs::write(&path, body).unwrap();
        path
    }

    #[test]
    fn defaults_load_from_empty_config() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), "");
        let config = ExperimentConfig::load(&path, &Overrides::default()).unwrap();
        assert_eq!(config.system.n_bs_antennas, 4);
        assert_eq!(config.system.l_b, 6);
        assert!((config.system.wavelength - 0.01).abs() < 1e-15);
        assert!((config.system.region_side - 0.02).abs() < 1e-15);
        assert!((config.system.p_t - dbm_to_watts(15.0)).abs() < 1e-12);
        assert!((config.agent.discount - 0.99).abs() < 1e-15);
        assert!((config.agent.tau - 0.001).abs() < 1e-15);
        assert_eq!(config.sweep_power_dbm, vec![11.0, 13.0, 15.0, 17.0, 18.0]);
    }

    #[test]
    fn unknown_keys_are_rejected_with_field_message() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), "[system]\nn_bs_antennas = 4\nbogus_key = 1\n");
        let err = ExperimentConfig::load(&path, &Overrides::default()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("bogus_key"), "{msg}");
    }

    #[test]
    fn invalid_values_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), "[system]\nalpha = 1.5\n");
        let err = ExperimentConfig::load(&path, &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("alpha"));
    }

    #[test]
    fn overrides_take_precedence() {
        let dir = tempfile::tempdir().unwrap();
        let path = write_config(dir.path(), "master_seed = 3\n");
        let over = Overrides {
            seed: Some(11),
            out_dir: Some(dir.path().join("x")),
            scenarios: Some(2),
        };
        let config = ExperimentConfig::load(&path, &over).unwrap();
        assert_eq!(config.master_seed, 11);
        assert_eq!(config.sweep_scenarios, 2);
        assert!(config.out_dir.ends_with("x"));
    }
}
