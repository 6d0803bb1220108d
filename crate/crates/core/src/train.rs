//! Minibatch training of any [`Model`] on dataset records.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::models::{Model, Task};
use crate::nn::{argmax, cross_entropy, mse, LrSchedule, Mode, Optimizer, OptimizerKind};
use crate::signal::PressureWindow;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    /// Random subset drawn afresh each epoch; `None` uses every record.
    pub samples_per_epoch: Option<usize>,
    pub learning_rate: f64,
    pub lr_decay: f64,
    pub lr_decay_epochs: usize,
    pub optimizer: OptimizerKind,
    pub seed: u64,
    /// Training windows used to fit input scalings.
    pub calibration_samples: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 30,
            batch_size: 128,
            samples_per_epoch: None,
            learning_rate: 0.005,
            lr_decay: 0.5,
            lr_decay_epochs: 10,
            optimizer: OptimizerKind::adam(),
            seed: 0,
            calibration_samples: 8192,
        }
    }
}

impl TrainConfig {
    /// Defaults for the localization task: many short epochs.
    pub fn localize() -> Self {
        TrainConfig {
            epochs: 1000,
            samples_per_epoch: Some(1024),
            lr_decay_epochs: 334,
            ..TrainConfig::default()
        }
    }

    pub fn for_task(task: Task) -> Self {
        match task {
            Task::Classify => TrainConfig::default(),
            Task::Localize => TrainConfig::localize(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 || self.batch_size == 0 || self.lr_decay_epochs == 0 {
            return Err(Error::Config("epochs, batch_size and lr_decay_epochs must be positive".into()));
        }
        if self.samples_per_epoch == Some(0) {
            return Err(Error::Config("samples_per_epoch must be positive".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) || !(self.lr_decay > 0.0 && self.lr_decay <= 1.0) {
            return Err(Error::Config("learning rate must be positive and decay in (0, 1]".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub loss: f64,
    /// Training accuracy (classification) or RMSE over both axes in mm.
    pub metric: f64,
    pub lr: f64,
}

fn batch_targets(dataset: &Dataset, idx: &[usize]) -> Vec<[f64; 2]> {
    idx.iter().map(|&i| dataset.records[i].target()).collect()
}

/// Fits the model's scalings on (a spread of) the training records.
pub fn calibrate(model: &mut Model, dataset: &Dataset, train: &[usize], samples: usize) -> Result<()> {
    let step = train.len().div_ceil(samples.max(1)).max(1);
    let subset: Vec<usize> = train.iter().copied().step_by(step).collect();
    let windows = dataset.windows(&subset);
    let refs: Vec<&PressureWindow> = windows.iter().collect();
    model.calibrate(&refs, &batch_targets(dataset, train))
}

/// Trains in place and returns one log entry per epoch.
pub fn train(model: &mut Model, dataset: &Dataset, train: &[usize], config: &TrainConfig) -> Result<Vec<EpochLog>> {
    train_with(model, dataset, train, config, |_| {})
}

/// [`train`] with a callback after every epoch.
pub fn train_with(
    model: &mut Model,
    dataset: &Dataset,
    train: &[usize],
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochLog),
) -> Result<Vec<EpochLog>> {
    config.validate()?;
    if train.is_empty() {
        return Err(Error::InvalidArgument("no training records".into()));
    }
    calibrate(model, dataset, train, config.calibration_samples)?;
    model.reseed(config.seed ^ 0xd50_u64);
    let per_epoch = config.samples_per_epoch.unwrap_or(train.len()).min(train.len());
    let batches = per_epoch.div_ceil(config.batch_size);
    let mut opt = Optimizer::new(
        config.optimizer,
        LrSchedule {
            initial: config.learning_rate,
            gamma: config.lr_decay,
            decay_period: config.lr_decay_epochs * batches,
        },
    );
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order = train.to_vec();
    let mut log = Vec::with_capacity(config.epochs);
    let mut step = 0;
    for epoch in 1..=config.epochs {
        order.shuffle(&mut rng);
        let (mut loss_sum, mut hits, mut sq, mut seen) = (0.0, 0usize, 0.0, 0usize);
        let lr = opt.schedule.lr(step);
        for batch in order[..per_epoch].chunks(config.batch_size) {
            let windows = dataset.windows(batch);
            let refs: Vec<&PressureWindow> = windows.iter().collect();
            for p in model.params_mut() {
                p.zero_grad();
            }
            let out = model.forward(&refs, Mode::Train)?;
            let (loss, grad) = match model.task() {
                Task::Classify => {
                    let labels: Vec<usize> = batch.iter().map(|&i| dataset.records[i].pattern.index()).collect();
                    let k = out.shape[1];
                    hits += out.data.chunks(k).zip(&labels).filter(|(row, &y)| argmax(row) == y).count();
                    cross_entropy(&out, &labels)?
                }
                Task::Localize => {
                    let targets = batch_targets(dataset, batch);
                    let std = model.spec().norm.target_std;
                    for (row, t) in out.data.chunks(2).zip(model.standardize_targets(&targets).chunks(2)) {
                        sq += ((row[0] - t[0]) * std[0]).powi(2) + ((row[1] - t[1]) * std[1]).powi(2);
                    }
                    mse(&out, &model.standardize_targets(&targets))?
                }
            };
            if !loss.is_finite() {
                return Err(Error::Validation(format!("loss diverged at epoch {epoch}")));
            }
            model.backward(&grad)?;
            opt.step(&mut model.params_mut(), step)?;
            step += 1;
            loss_sum += loss * batch.len() as f64;
            seen += batch.len();
        }
        let metric = match model.task() {
            Task::Classify => hits as f64 / seen as f64,
            Task::Localize => (sq / (2 * seen) as f64).sqrt(),
        };
        let entry = EpochLog {
            epoch,
            loss: loss_sum / seen as f64,
            metric,
            lr,
        };
        on_epoch(&entry);
        log.push(entry);
    }
    Ok(log)
}
