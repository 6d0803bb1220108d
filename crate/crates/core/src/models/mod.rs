//! Fusion network, single-branch ablations and feature baselines behind one
//! [`Model`] type, plus checkpoint persistence.

pub mod attention;
pub mod baseline;
pub mod network;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kinematics::PatternId;
use crate::nn::{argmax, param_count, softmax, Checkpoint, Mode, Param, Tensor};
use crate::signal::PressureWindow;

pub use attention::{AttentionFusion, FusedFeature};
pub use baseline::{fft_features, stats_features, BaselineMlp};
pub use network::{ArchConfig, FusionNet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    /// Kick-pattern recognition.
    Classify,
    /// Leg displacement `(L_x, L_y)` regression.
    Localize,
}

impl Task {
    pub fn outputs(self) -> usize {
        match self {
            Task::Classify => PatternId::ALL.len(),
            Task::Localize => 2,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Task::Classify => "classify",
            Task::Localize => "localize",
        })
    }
}

impl FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "classify" => Ok(Task::Classify),
            "localize" => Ok(Task::Localize),
            _ => Err(Error::InvalidArgument(format!("unknown task {s:?} (classify, localize)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    Fusion,
    Time,
    Freq,
    FftMlp,
    StatsMlp,
}

impl Variant {
    pub const ALL: [Variant; 5] = [
        Variant::Fusion,
        Variant::Time,
        Variant::Freq,
        Variant::FftMlp,
        Variant::StatsMlp,
    ];

    pub fn is_network(self) -> bool {
        matches!(self, Variant::Fusion | Variant::Time | Variant::Freq)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Variant::Fusion => "fusion",
            Variant::Time => "time",
            Variant::Freq => "freq",
            Variant::FftMlp => "fft-mlp",
            Variant::StatsMlp => "stats-mlp",
        })
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.to_string() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown variant {s:?} (fusion, time, freq, fft-mlp, stats-mlp)")))
    }
}

/// Scalings fitted on the training split and stored with the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Normalization {
    pub input_scale: f64,
    pub feature_mean: Vec<f64>,
    pub feature_std: Vec<f64>,
    /// `(L_x, L_y)` mean and standard deviation in mm.
    pub target_mean: [f64; 2],
    pub target_std: [f64; 2],
}

impl Default for Normalization {
    fn default() -> Self {
        Normalization {
            input_scale: 1.0,
            feature_mean: Vec::new(),
            feature_std: Vec::new(),
            target_mean: [0.0; 2],
            target_std: [1.0; 2],
        }
    }
}

/// Everything needed to rebuild a model before loading its weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub variant: Variant,
    pub task: Task,
    pub arch: ArchConfig,
    pub seed: u64,
    #[serde(default)]
    pub norm: Normalization,
}

impl ModelSpec {
    pub fn new(variant: Variant, task: Task, seed: u64) -> Self {
        ModelSpec {
            variant,
            task,
            arch: ArchConfig::default(),
            seed,
            norm: Normalization::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TaskOutput {
    Class { probs: Vec<f64> },
    /// Millimetres.
    Displacement { l_x: f64, l_y: f64 },
}

impl TaskOutput {
    /// Argmax class; ties go to the lower index.
    pub fn class(&self) -> Option<PatternId> {
        match self {
            TaskOutput::Class { probs } => PatternId::from_index(argmax(probs)),
            TaskOutput::Displacement { .. } => None,
        }
    }

    pub fn displacement(&self) -> Option<(f64, f64)> {
        match self {
            TaskOutput::Displacement { l_x, l_y } => Some((*l_x, *l_y)),
            TaskOutput::Class { .. } => None,
        }
    }
}

pub(crate) fn check_windows(windows: &[&PressureWindow], arch: &ArchConfig) -> Result<()> {
    if windows.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    for w in windows {
        if w.len != arch.window_len || w.sensors != arch.sensors {
            return Err(Error::shape(format!(
                "model expects {} x {} windows, got {} x {}",
                arch.window_len, arch.sensors, w.len, w.sensors
            )));
        }
    }
    Ok(())
}

pub enum Model {
    Net(FusionNet),
    Mlp(BaselineMlp),
}

impl Model {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        if spec.variant.is_network() {
            FusionNet::new(spec).map(Model::Net)
        } else {
            BaselineMlp::new(spec).map(Model::Mlp)
        }
    }

    pub fn spec(&self) -> &ModelSpec {
        match self {
            Model::Net(m) => m.spec(),
            Model::Mlp(m) => m.spec(),
        }
    }

    fn spec_mut(&mut self) -> &mut ModelSpec {
        match self {
            Model::Net(m) => m.spec_mut(),
            Model::Mlp(m) => m.spec_mut(),
        }
    }

    pub fn task(&self) -> Task {
        self.spec().task
    }

    /// Raw head outputs: logits, or standardized displacements.
    pub fn forward(&mut self, windows: &[&PressureWindow], mode: Mode) -> Result<Tensor> {
        match self {
            Model::Net(m) => m.forward(windows, mode),
            Model::Mlp(m) => m.forward(windows, mode),
        }
    }

    pub fn backward(&mut self, grad: &Tensor) -> Result<()> {
        match self {
            Model::Net(m) => m.backward(grad),
            Model::Mlp(m) => m.backward(grad),
        }
    }

    pub fn params(&self) -> Vec<&Param> {
        match self {
            Model::Net(m) => m.params(),
            Model::Mlp(m) => m.params(),
        }
    }

    pub fn params_mut(&mut self) -> Vec<&mut Param> {
        match self {
            Model::Net(m) => m.params_mut(),
            Model::Mlp(m) => m.params_mut(),
        }
    }

    pub fn param_count(&self) -> usize {
        param_count(&self.params())
    }

    /// Re-seeds the dropout stream, if any.
    pub fn reseed(&mut self, seed: u64) {
        if let Model::Net(m) = self {
            m.reseed(seed);
        }
    }

    /// Fits input scalings and, for localization, target standardization
    /// from training windows and their `(L_x, L_y)` labels in mm.
    pub fn calibrate(&mut self, windows: &[&PressureWindow], targets: &[[f64; 2]]) -> Result<()> {
        if windows.is_empty() {
            return Err(Error::InvalidArgument("cannot calibrate on an empty set".into()));
        }
        match self {
            Model::Net(m) => m.calibrate(windows)?,
            Model::Mlp(m) => m.calibrate(windows)?,
        }
        if self.task() == Task::Localize && !targets.is_empty() {
            let n = targets.len() as f64;
            let norm = &mut self.spec_mut().norm;
            for j in 0..2 {
                let mean = targets.iter().map(|t| t[j]).sum::<f64>() / n;
                let var = targets.iter().map(|t| (t[j] - mean).powi(2)).sum::<f64>() / n;
                norm.target_mean[j] = mean;
                norm.target_std[j] = if var > 1e-24 { var.sqrt() } else { 1.0 };
            }
        }
        Ok(())
    }

    /// Row-major standardized targets, `[B, 2]`.
    pub fn standardize_targets(&self, targets: &[[f64; 2]]) -> Vec<f64> {
        let norm = &self.spec().norm;
        targets
            .iter()
            .flat_map(|t| (0..2).map(move |j| (t[j] - norm.target_mean[j]) / norm.target_std[j]))
            .collect()
    }

    /// Evaluation-mode predictions.
    pub fn predict(&mut self, windows: &[&PressureWindow]) -> Result<Vec<TaskOutput>> {
        let out = self.forward(windows, Mode::Eval)?;
        let k = out.shape[1];
        let norm = &self.spec().norm;
        Ok(out
            .data
            .chunks(k)
            .map(|row| match self.spec().task {
                Task::Classify => TaskOutput::Class { probs: softmax(row) },
                Task::Localize => TaskOutput::Displacement {
                    l_x: row[0] * norm.target_std[0] + norm.target_mean[0],
                    l_y: row[1] * norm.target_std[1] + norm.target_mean[1],
                },
            })
            .collect())
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let meta = serde_json::to_string(self.spec())?;
        Ok(Checkpoint::from_params(meta, &self.params()))
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        let spec: ModelSpec = serde_json::from_str(&ckpt.metadata)?;
        let mut model = Model::new(spec)?;
        ckpt.restore(&mut model.params_mut())?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<String> {
        let ckpt = self.to_checkpoint()?;
        ckpt.save(path)?;
        Ok(ckpt.digest())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_checkpoint(&Checkpoint::load(path)?)
    }
}
