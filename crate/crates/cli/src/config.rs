//! Experiment configuration schema (JSON).
//!
//! Every run is fully described by one config file: dataset, model and
//! training settings, sampler parameters per engine, and explicit seeds.
//! Wall-clock seeding is never used, so a config reproduces its outputs
//! bit for bit.

use lvbench::error::{Error, Result};
use lvbench::samplers::AnnealSchedule;
use lvbench::training::TrainingConfig;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentId {
    SfSweep,
    ErrorVsEpoch,
    PgsVsSweeps,
    NlvVsSweeps,
    NlvVsEpoch,
    OverlapVsEpoch,
    LmHistograms,
    InferDemo,
}

impl ExperimentId {
    pub fn as_str(&self) -> &'static str {
        match self {
            ExperimentId::SfSweep => "sf_sweep",
            ExperimentId::ErrorVsEpoch => "error_vs_epoch",
            ExperimentId::PgsVsSweeps => "pgs_vs_sweeps",
            ExperimentId::NlvVsSweeps => "nlv_vs_sweeps",
            ExperimentId::NlvVsEpoch => "nlv_vs_epoch",
            ExperimentId::OverlapVsEpoch => "overlap_vs_epoch",
            ExperimentId::LmHistograms => "lm_histograms",
            ExperimentId::InferDemo => "infer_demo",
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct DatasetSpec {
    pub path: PathBuf,
    pub resolution: usize,
    pub n_classes: usize,
    /// Binarization cutoff; `null` means half of the observed gray maximum.
    pub threshold: Option<f64>,
    pub n_train: usize,
    pub n_test: usize,
    pub split_seed: u64,
}

impl Default for DatasetSpec {
    fn default() -> Self {
        DatasetSpec {
            path: PathBuf::from("data/optdigits.csv"),
            resolution: 8,
            n_classes: 10,
            threshold: None,
            n_train: 100,
            n_test: 50,
            split_seed: 1,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub n_hidden: usize,
    pub init_sigma: f64,
    pub init_seed: u64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            n_hidden: 48,
            init_sigma: 0.01,
            init_seed: 7,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainingSpec {
    pub k_g: usize,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub weight_decay: f64,
    pub weight_cap: Option<f64>,
    pub rng_seed: u64,
    pub checkpoint_epochs: Vec<usize>,
}

impl Default for TrainingSpec {
    fn default() -> Self {
        TrainingSpec {
            k_g: 5,
            learning_rate: 0.05,
            epochs: 2000,
            batch_size: 10,
            weight_decay: 1e-3,
            weight_cap: Some(1.0),
            rng_seed: 11,
            checkpoint_epochs: vec![20, 90, 600, 1000, 1400, 2000],
        }
    }
}

impl TrainingSpec {
    pub fn to_config(&self) -> TrainingConfig {
        TrainingConfig {
            k_g: self.k_g,
            learning_rate: self.learning_rate,
            epochs: self.epochs,
            batch_size: self.batch_size,
            weight_decay: self.weight_decay,
            weight_cap: self.weight_cap,
            rng_seed: self.rng_seed,
            checkpoint_epochs: self.checkpoint_epochs.clone(),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GibbsSpec {
    pub k_g_values: Vec<usize>,
    pub t: f64,
    pub n_rpt: usize,
    pub seed: u64,
}

impl Default for GibbsSpec {
    fn default() -> Self {
        GibbsSpec {
            k_g_values: vec![1, 10, 100],
            t: 1.0,
            n_rpt: 10,
            seed: 21,
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct SqaSpec {
    pub sweeps: usize,
    pub t: f64,
    pub gamma_start: f64,
    pub gamma_end: f64,
    pub trotter_slices: usize,
    pub n_reads: usize,
    pub seed: u64,
    /// Run on the embedded physical problem (needs `embedding`) instead of
    /// the logical Ising problem.
    pub embedded: bool,
}

impl Default for SqaSpec {
    fn default() -> Self {
        SqaSpec {
            sweeps: 200,
            t: 0.1,
            gamma_start: 3.0,
            gamma_end: 0.05,
            trotter_slices: 8,
            n_reads: 1000,
            seed: 31,
            embedded: false,
        }
    }
}

impl SqaSpec {
    pub fn schedule(&self, sweeps: usize) -> AnnealSchedule<f64> {
        AnnealSchedule::sqa(
            sweeps,
            self.t,
            self.gamma_start,
            self.gamma_end,
            self.trotter_slices,
        )
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct EmbeddingSpec {
    pub hw_nodes: usize,
    pub degree_cap: usize,
    pub hw_seed: u64,
    pub restarts: usize,
    pub chain_strength: f64,
    pub sf: f64,
    /// `majority_vote` or `discard`.
    pub policy: String,
}

impl Default for EmbeddingSpec {
    fn default() -> Self {
        EmbeddingSpec {
            hw_nodes: 300,
            degree_cap: 15,
            hw_seed: 3,
            restarts: 16,
            chain_strength: -1.0,
            sf: 2.0,
            policy: "majority_vote".into(),
        }
    }
}

impl EmbeddingSpec {
    pub fn policy(&self) -> Result<lvbench::embedding::ChainBreakPolicy> {
        match self.policy.as_str() {
            "majority_vote" => Ok(lvbench::embedding::ChainBreakPolicy::MajorityVote),
            "discard" => Ok(lvbench::embedding::ChainBreakPolicy::Discard),
            other => Err(Error::InvalidData(format!(
                "unknown chain-break policy `{other}`"
            ))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct InferSpec {
    pub burn_in: usize,
    pub votes: usize,
    pub top_k: usize,
    pub clamp_fraction: f64,
    /// How many test patterns the reconstruction demo renders.
    pub n_demo: usize,
    pub seed: u64,
}

impl Default for InferSpec {
    fn default() -> Self {
        InferSpec {
            burn_in: lvbench::inference::DEFAULT_BURN_IN,
            votes: lvbench::inference::DEFAULT_VOTES,
            top_k: 3,
            clamp_fraction: lvbench::inference::DEFAULT_CLAMP_FRACTION,
            n_demo: 3,
            seed: 41,
        }
    }
}

/// One experiment run. Experiment ids map to the study kinds described in
/// the README; unused sections are ignored by each experiment.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub experiment: ExperimentId,
    pub seed: u64,
    pub out_dir: PathBuf,
    #[serde(default)]
    pub dataset: DatasetSpec,
    #[serde(default)]
    pub model: ModelSpec,
    #[serde(default)]
    pub training: TrainingSpec,
    /// Pre-trained checkpoint files (model JSON); when nonempty, training is
    /// skipped and these are used instead.
    #[serde(default)]
    pub checkpoint_files: Vec<PathBuf>,
    #[serde(default)]
    pub gibbs: GibbsSpec,
    #[serde(default)]
    pub sqa: SqaSpec,
    #[serde(default)]
    pub embedding: EmbeddingSpec,
    #[serde(default)]
    pub infer: InferSpec,
    /// Sweep-count grid (annealing-time analog) for the sweeps studies.
    #[serde(default = "default_sweeps_grid")]
    pub sweeps_grid: Vec<usize>,
    /// Scale factors for `sf_sweep`.
    #[serde(default = "default_sf_grid")]
    pub sf_grid: Vec<f64>,
    /// Sample sizes for the overlap and histogram suites.
    #[serde(default = "default_n_smp")]
    pub n_smp_values: Vec<usize>,
    /// Repeated sampler invocations per grid point (the N_DW analog).
    #[serde(default = "default_n_calls")]
    pub n_calls: usize,
    #[serde(default = "default_bins")]
    pub bins: usize,
}

fn default_sweeps_grid() -> Vec<usize> {
    vec![10, 100, 1000, 10_000, 100_000]
}

fn default_sf_grid() -> Vec<f64> {
    vec![0.5, 1.0, 2.0, 4.0, 8.0]
}

fn default_n_smp() -> Vec<usize> {
    vec![1000, 10000]
}

fn default_n_calls() -> usize {
    5
}

fn default_bins() -> usize {
    40
}

impl ExperimentConfig {
    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let config: ExperimentConfig = serde_json::from_str(&text)?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        for file in &self.checkpoint_files {
            if !file.exists() {
                return Err(Error::InvalidData(format!(
                    "referenced checkpoint {} does not exist",
                    file.display()
                )));
            }
        }
        if self.bins < 1 {
            return Err(Error::InvalidData("bins must be >= 1".into()));
        }
        self.embedding.policy()?;
        Ok(())
    }

    /// Canonical JSON used for digests and the manifest echo.
    pub fn canonical_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("config serializes")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let text = r#"{"experiment": "nlv_vs_epoch", "seed": 5, "out_dir": "/tmp/x"}"#;
        let config: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert_eq!(config.experiment, ExperimentId::NlvVsEpoch);
        assert_eq!(config.gibbs.k_g_values, vec![1, 10, 100]);
        assert_eq!(config.sweeps_grid, vec![10, 100, 1000, 10_000, 100_000]);
        config.validate().unwrap();
    }

    #[test]
    fn bad_policy_is_rejected() {
        let text = r#"{"experiment": "sf_sweep", "seed": 5, "out_dir": "/tmp/x",
                       "embedding": {"policy": "coin_flip"}}"#;
        let config: ExperimentConfig = serde_json::from_str(text).unwrap();
        assert!(config.validate().is_err());
    }
}
