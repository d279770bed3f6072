//! Deterministic synthetic benchmark generator.
//!
//! Stands in for real cluster traces: each scenario produces MapReduce-style
//! profiles from a documented closed-form duration model plus seeded noise,
//! and a sidecar metadata record holding the generator formula and constants
//! so tests can use them as oracles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use thiserror::Error;

use crate::dataset::{JobProfile, StageStats};

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("unknown scenario: {0}")]
    UnknownScenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// `T = alpha * (n_map * avg_map_s) / n_cores + base` — exactly linear
    /// in the 1/nCores feature.
    InverseCores,
    /// `T = shuffle_gain * max_shuffle_s + base` with max shuffle time as
    /// the only driving feature.
    ShuffleDominated,
    /// Short durations with heavy multiplicative noise and optional 10x
    /// duration spikes, one per 20-run group.
    NoisyFastQuery,
}

impl Scenario {
    pub fn parse(s: &str) -> Result<Scenario, SynthError> {
        match s {
            "inverse_cores" | "inverse-cores" => Ok(Scenario::InverseCores),
            "shuffle_dominated" | "shuffle-dominated" => Ok(Scenario::ShuffleDominated),
            "noisy_fast_query" | "noisy-fast-query" => Ok(Scenario::NoisyFastQuery),
            other => Err(SynthError::UnknownScenario(other.to_string())),
        }
    }

    pub fn id(&self) -> &'static str {
        match self {
            Scenario::InverseCores => "inverse_cores",
            Scenario::ShuffleDominated => "shuffle_dominated",
            Scenario::NoisyFastQuery => "noisy_fast_query",
        }
    }

    pub fn query_id(&self) -> &'static str {
        match self {
            Scenario::InverseCores => "I1",
            Scenario::ShuffleDominated => "S1",
            Scenario::NoisyFastQuery => "N1",
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthConfig {
    pub scenario: Scenario,
    pub seed: u64,
    /// Multiplicative noise level (standard deviation of the relative
    /// perturbation).
    pub noise: f64,
    pub runs_per_config: usize,
    /// Inject one 10x duration spike per run group (noisy_fast_query only).
    pub spikes: bool,
}

impl SynthConfig {
    pub fn new(scenario: Scenario, seed: u64) -> Self {
        let noise = match scenario {
            Scenario::NoisyFastQuery => 0.2,
            _ => 0.05,
        };
        SynthConfig {
            scenario,
            seed,
            noise,
            runs_per_config: 20,
            spikes: scenario == Scenario::NoisyFastQuery,
        }
    }
}

/// Sidecar metadata written next to the generated CSV: the closed-form
/// duration model and every constant needed to recompute it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SynthMeta {
    pub scenario: String,
    pub seed: u64,
    pub noise: f64,
    pub runs_per_config: usize,
    pub spikes: bool,
    pub formula: String,
    pub constants: BTreeMap<String, f64>,
    pub core_levels: Vec<u32>,
}

pub const CORE_LEVELS: [u32; 5] = [40, 60, 80, 100, 120];

const IC_ALPHA: f64 = 24.0;
const IC_BASE: f64 = 30.0;
const IC_N_MAP: u32 = 100;
const IC_AVG_MAP_S: f64 = 2.0;

const SD_SHUFFLE_GAIN: f64 = 2.0;
const SD_BASE: f64 = 20.0;

const NQ_BASE: f64 = 30.0;
pub const SPIKE_FACTOR: f64 = 10.0;

/// Generates the scenario's profiles and the oracle metadata. Deterministic
/// for a fixed config.
pub fn generate(cfg: &SynthConfig) -> (Vec<JobProfile>, SynthMeta) {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, 1.0).unwrap();
    let query = cfg.scenario.query_id();
    let mut profiles = Vec::new();
    let mut constants = BTreeMap::new();

    let formula = match cfg.scenario {
        Scenario::InverseCores => {
            constants.insert("alpha".into(), IC_ALPHA);
            constants.insert("base".into(), IC_BASE);
            constants.insert("n_map".into(), IC_N_MAP as f64);
            constants.insert("avg_map_s".into(), IC_AVG_MAP_S);
            for &cores in &CORE_LEVELS {
                for run in 0..cfg.runs_per_config {
                    let clean = IC_ALPHA * (IC_N_MAP as f64 * IC_AVG_MAP_S) / cores as f64 + IC_BASE;
                    let duration = (clean * (1.0 + cfg.noise * normal.sample(&mut rng))).max(1.0);
                    let jitter = rng.gen_range(-0.1..0.1);
                    profiles.push(JobProfile {
                        job_id: format!("{query}-c{cores}-r{run}"),
                        query_id: query.to_string(),
                        dag_signature: "mr".to_string(),
                        dataset_size_gb: 250.0,
                        n_cores: cores,
                        stages: vec![StageStats {
                            stage_name: "mr".to_string(),
                            n_map_tasks: IC_N_MAP,
                            n_reduce_tasks: 16,
                            avg_map_s: IC_AVG_MAP_S,
                            max_map_s: 3.0,
                            avg_reduce_s: 4.0 + jitter,
                            max_reduce_s: 6.0 + jitter,
                            avg_shuffle_s: 5.0 + jitter,
                            max_shuffle_s: 8.0 + jitter,
                            avg_shuffle_bytes: 1.0e8 * (1.0 + jitter),
                            max_shuffle_bytes: 1.5e8 * (1.0 + jitter),
                        }],
                        duration_s: duration,
                    });
                }
            }
            "duration_s = alpha * (n_map * avg_map_s) / n_cores + base, times (1 + noise*N(0,1))"
        }
        Scenario::ShuffleDominated => {
            constants.insert("shuffle_gain".into(), SD_SHUFFLE_GAIN);
            constants.insert("base".into(), SD_BASE);
            let sizes = [250.0, 500.0, 750.0, 1000.0];
            for (i, &cores) in CORE_LEVELS.iter().enumerate() {
                for run in 0..cfg.runs_per_config {
                    let size = sizes[(i + run) % sizes.len()];
                    let max_shuffle: f64 = rng.gen_range(50.0..150.0);
                    let avg_shuffle = rng.gen_range(20.0..max_shuffle.min(40.0));
                    let clean = SD_SHUFFLE_GAIN * max_shuffle + SD_BASE;
                    let duration = (clean * (1.0 + cfg.noise * normal.sample(&mut rng))).max(1.0);
                    let avg_reduce = rng.gen_range(3.0..5.0);
                    let avg_map = rng.gen_range(1.5..2.5);
                    profiles.push(JobProfile {
                        job_id: format!("{query}-c{cores}-r{run}"),
                        query_id: query.to_string(),
                        dag_signature: "mr".to_string(),
                        dataset_size_gb: size,
                        n_cores: cores,
                        stages: vec![StageStats {
                            stage_name: "mr".to_string(),
                            n_map_tasks: rng.gen_range(80..120),
                            n_reduce_tasks: rng.gen_range(8..24),
                            avg_map_s: avg_map,
                            max_map_s: avg_map + rng.gen_range(0.5..1.5),
                            avg_reduce_s: avg_reduce,
                            max_reduce_s: avg_reduce + rng.gen_range(1.0..3.0),
                            avg_shuffle_s: avg_shuffle,
                            max_shuffle_s: max_shuffle,
                            avg_shuffle_bytes: rng.gen_range(0.8e8..1.2e8),
                            max_shuffle_bytes: rng.gen_range(1.2e8..2.0e8),
                        }],
                        duration_s: duration,
                    });
                }
            }
            "duration_s = shuffle_gain * max_shuffle_s + base, times (1 + noise*N(0,1))"
        }
        Scenario::NoisyFastQuery => {
            constants.insert("base".into(), NQ_BASE);
            constants.insert("spike_factor".into(), SPIKE_FACTOR);
            for &cores in &CORE_LEVELS {
                for run in 0..cfg.runs_per_config {
                    let mut duration = (NQ_BASE * (1.0 + cfg.noise * normal.sample(&mut rng))).max(1.0);
                    let spiked = cfg.spikes && run == 0;
                    if spiked {
                        duration *= SPIKE_FACTOR;
                    }
                    let jitter = rng.gen_range(-0.2..0.2);
                    profiles.push(JobProfile {
                        job_id: format!("{query}-c{cores}-r{run}{}", if spiked { "-spike" } else { "" }),
                        query_id: query.to_string(),
                        dag_signature: "mr".to_string(),
                        dataset_size_gb: 40.0,
                        n_cores: cores,
                        stages: vec![StageStats {
                            stage_name: "mr".to_string(),
                            n_map_tasks: 12,
                            n_reduce_tasks: 4,
                            avg_map_s: 1.0 + jitter,
                            max_map_s: 2.0 + jitter,
                            avg_reduce_s: 1.5 + jitter,
                            max_reduce_s: 2.5 + jitter,
                            avg_shuffle_s: 1.0 + jitter,
                            max_shuffle_s: 2.0 + jitter,
                            avg_shuffle_bytes: 1.0e7 * (1.0 + jitter),
                            max_shuffle_bytes: 2.0e7 * (1.0 + jitter),
                        }],
                        duration_s: duration,
                    });
                }
            }
            "duration_s = base * (1 + noise*N(0,1)), with one run per group multiplied by spike_factor when spikes are enabled"
        }
    };

    let meta = SynthMeta {
        scenario: cfg.scenario.id().to_string(),
        seed: cfg.seed,
        noise: cfg.noise,
        runs_per_config: cfg.runs_per_config,
        spikes: cfg.spikes,
        formula: formula.to_string(),
        constants,
        core_levels: CORE_LEVELS.to_vec(),
    };
    (profiles, meta)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset;

    #[test]
    fn same_seed_identical_output() {
        let cfg = SynthConfig::new(Scenario::InverseCores, 42);
        let (a, _) = generate(&cfg);
        let (b, _) = generate(&cfg);
        assert_eq!(a, b);
        let csv_a = dataset::write_mr_csv(&a).unwrap();
        let csv_b = dataset::write_mr_csv(&b).unwrap();
        assert_eq!(csv_a, csv_b);
    }

    #[test]
    fn zero_noise_inverse_cores_halves_core_term() {
        let mut cfg = SynthConfig::new(Scenario::InverseCores, 7);
        cfg.noise = 0.0;
        let (profiles, meta) = generate(&cfg);
        let alpha = meta.constants["alpha"];
        let base = meta.constants["base"];
        let at = |cores: u32| -> f64 {
            profiles
                .iter()
                .find(|p| p.n_cores == cores)
                .map(|p| p.duration_s)
                .unwrap()
        };
        // Doubling cores exactly halves the core-dependent term.
        assert!(((at(40) - base) - 2.0 * (at(80) - base)).abs() < 1e-9);
        let expected = alpha * (meta.constants["n_map"] * meta.constants["avg_map_s"]) / 40.0 + base;
        assert!((at(40) - expected).abs() < 1e-9);
    }

    #[test]
    fn spikes_are_discarded_by_filter() {
        let cfg = SynthConfig::new(Scenario::NoisyFastQuery, 3);
        let (profiles, _) = generate(&cfg);
        let (kept, discarded) = dataset::filter_outliers(&profiles);
        assert!(!discarded.is_empty());
        assert!(discarded.iter().all(|p| p.job_id.ends_with("-spike")));
        assert!(kept.iter().all(|p| !p.job_id.ends_with("-spike")));
    }

    #[test]
    fn generated_profiles_are_valid() {
        for scenario in [Scenario::InverseCores, Scenario::ShuffleDominated, Scenario::NoisyFastQuery] {
            let (profiles, _) = generate(&SynthConfig::new(scenario, 1));
            assert_eq!(profiles.len(), 100);
            for p in &profiles {
                p.validate().unwrap();
            }
        }
    }
}
