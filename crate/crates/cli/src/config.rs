//! Experiment configuration. Every field has a default, so an empty file
//! describes the full-size experiment.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use copaug::bicop::Family;
use copaug::dataset::{LevelGrid, SplitSpec};
use copaug::emulator::{TrainConfig, DEFAULT_HIDDEN};
use copaug::multicop::{CopulaKind, CopulaSpec};
use copaug::radiation::{RadiationConstants, DIFFUSIVITY, GAS_OPTICAL_DEPTH, STEFAN_BOLTZMANN};

use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every run seed is derived from it.
    pub seed: u64,
    pub data: DataConfig,
    pub split: SplitConfig,
    pub copula: CopulaConfig,
    pub training: TrainingConfig,
    pub radiation: RadiationConfig,
    pub evaluation: EvaluationConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    /// Profile file to read; the surrogate generator is used when absent.
    pub input: Option<PathBuf>,
    pub levels: usize,
    /// Surrogate profile count.
    pub profiles: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitConfig {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CopulaConfig {
    pub kinds: Vec<CopulaKind>,
    pub factors: Vec<usize>,
    pub generation_repeats: usize,
    pub truncation: Option<usize>,
    /// Pair-copula catalogue for vines; all families when absent.
    pub families: Option<Vec<Family>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub repeats: usize,
    pub hidden: Vec<usize>,
    pub epochs: usize,
    pub patience: usize,
    pub batch_size: usize,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub huber_delta: f64,
    /// Write every trained network to `models/`.
    pub save_models: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiationConfig {
    pub sigma_sb: f64,
    pub diffusivity: f64,
    pub tau_gas: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub projection_iterations: usize,
    /// Profiles per set used for band depth (the cost is cubic).
    pub depth_curves: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            data: DataConfig::default(),
            split: SplitConfig::default(),
            copula: CopulaConfig::default(),
            training: TrainingConfig::default(),
            radiation: RadiationConfig::default(),
            evaluation: EvaluationConfig::default(),
        }
    }
}

impl Default for DataConfig {
    fn default() -> Self {
        Self {
            input: None,
            levels: 137,
            profiles: 25_000,
        }
    }
}

impl Default for SplitConfig {
    fn default() -> Self {
        Self {
            train: 0.4,
            validation: 0.2,
            test: 0.4,
        }
    }
}

impl Default for CopulaConfig {
    fn default() -> Self {
        Self {
            kinds: vec![CopulaKind::Gaussian, CopulaKind::VineParametric],
            factors: vec![1, 5, 10],
            generation_repeats: 10,
            truncation: None,
            families: None,
        }
    }
}

impl Default for TrainingConfig {
    fn default() -> Self {
        let t = TrainConfig::default();
        Self {
            repeats: 10,
            hidden: DEFAULT_HIDDEN.to_vec(),
            epochs: t.epochs,
            patience: t.patience,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            huber_delta: t.huber_delta,
            save_models: false,
        }
    }
}

impl Default for RadiationConfig {
    fn default() -> Self {
        Self {
            sigma_sb: STEFAN_BOLTZMANN,
            diffusivity: DIFFUSIVITY,
            tau_gas: GAS_OPTICAL_DEPTH,
        }
    }
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        Self {
            projection_iterations: 100,
            depth_curves: 500,
        }
    }
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> CliResult<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> CliResult<()> {
        LevelGrid::new(self.data.levels)?;
        self.split_spec()?;
        self.train_config(0).check()?;
        self.radiation_constants()?;
        let c = &self.copula;
        if c.generation_repeats == 0 || self.training.repeats == 0 {
            return Err(CliError::config("repeat counts must be at least 1"));
        }
        if !c.kinds.is_empty() && c.factors.is_empty() {
            return Err(CliError::config("copula cases need at least one augmentation factor"));
        }
        if c.factors.contains(&0) {
            return Err(CliError::config("augmentation factors must be at least 1"));
        }
        for kind in &c.kinds {
            self.copula_spec(*kind).check()?;
        }
        if self.training.hidden.contains(&0) {
            return Err(CliError::config("hidden layer widths must be at least 1"));
        }
        if self.evaluation.projection_iterations == 0 || self.evaluation.depth_curves < 3 {
            return Err(CliError::config("need at least 1 projection iteration and 3 depth curves"));
        }
        Ok(())
    }

    pub fn grid(&self) -> LevelGrid {
        LevelGrid::new(self.data.levels).expect("validated")
    }

    pub fn split_spec(&self) -> CliResult<SplitSpec> {
        let s = &self.split;
        Ok(SplitSpec::new(s.train, s.validation, s.test, 0)?)
    }

    pub fn copula_spec(&self, kind: CopulaKind) -> CopulaSpec {
        let mut spec = match kind {
            CopulaKind::Gaussian => CopulaSpec::gaussian(),
            CopulaKind::VineParametric => CopulaSpec::vine(),
        };
        if let Some(f) = &self.copula.families {
            spec.catalogue = f.clone();
        }
        spec.truncation = self.copula.truncation;
        spec
    }

    pub fn train_config(&self, seed: u64) -> TrainConfig {
        let t = &self.training;
        TrainConfig {
            epochs: t.epochs,
            patience: t.patience,
            batch_size: t.batch_size,
            learning_rate: t.learning_rate,
            beta1: t.beta1,
            beta2: t.beta2,
            epsilon: t.epsilon,
            huber_delta: t.huber_delta,
            seed,
        }
    }

    pub fn radiation_constants(&self) -> CliResult<RadiationConstants<f64>> {
        let r = &self.radiation;
        Ok(RadiationConstants::new(r.sigma_sb, r.diffusivity, r.tau_gas)?)
    }

    /// SHA-256 of the fully defaulted configuration.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}
