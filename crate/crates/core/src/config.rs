//! Experiment configuration, read from and written to TOML.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::data::DatasetConfig;
use crate::error::{Error, Result};
use crate::eval::StreamScenario;
use crate::models::{ArchConfig, Task};
use crate::train::TrainConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Paths {
    /// Root for every command's outputs.
    pub output_root: PathBuf,
    /// Dataset directory; `<output_root>/dataset` when unset.
    pub dataset_dir: Option<PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            output_root: PathBuf::from("kicksense-out"),
            dataset_dir: None,
        }
    }
}

impl Paths {
    pub fn dataset_dir(&self) -> PathBuf {
        self.dataset_dir.clone().unwrap_or_else(|| self.output_root.join("dataset"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Model and batch-order seeds for multi-seed experiments.
    pub seeds: Vec<u64>,
    pub paths: Paths,
    pub dataset: DatasetConfig,
    pub model: ArchConfig,
    pub classify: TrainConfig,
    pub localize: TrainConfig,
    pub stream: StreamScenario,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            seeds: vec![0, 1, 2],
            paths: Paths::default(),
            dataset: DatasetConfig::default(),
            model: ArchConfig::default(),
            classify: TrainConfig::for_task(Task::Classify),
            localize: TrainConfig::for_task(Task::Localize),
            stream: StreamScenario::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string_pretty(self).expect("configuration is always representable as TOML")
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text).map_err(|e| e.context(format!("loading {}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_toml()).map_err(|e| Error::io(path, e))
    }

    pub fn train_config(&self, task: Task) -> &TrainConfig {
        match task {
            Task::Classify => &self.classify,
            Task::Localize => &self.localize,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.seeds.is_empty() {
            return Err(Error::Config("at least one seed is required".into()));
        }
        self.dataset.validate().map_err(|e| e.context("[dataset]"))?;
        self.model.validate().map_err(|e| e.context("[model]"))?;
        self.classify.validate().map_err(|e| e.context("[classify]"))?;
        self.localize.validate().map_err(|e| e.context("[localize]"))?;
        if self.model.window_len != self.dataset.window_len {
            return Err(Error::Config(format!(
                "model window_len {} differs from dataset window_len {}",
                self.model.window_len, self.dataset.window_len
            )));
        }
        if self.model.sensors != self.dataset.geometry.sensor_count {
            return Err(Error::Config("model sensors differ from the sensor geometry".into()));
        }
        if !(self.stream.segment_s > 0.0) {
            return Err(Error::Config("[stream] segment_s must be positive".into()));
        }
        self.stream.sim.validate().map_err(|e| e.context("[stream.sim]"))?;
        Ok(())
    }
}
