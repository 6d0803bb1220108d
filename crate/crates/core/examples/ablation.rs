//! Compares the fusion network with its single-branch variants and the two
//! feature baselines on a reduced budget.

use kicksense::data::{build_dataset, DatasetConfig};
use kicksense::eval::ablation_suite;
use kicksense::models::{Task, Variant};
use kicksense::train::TrainConfig;

fn main() -> kicksense::Result<()> {
    let dataset = build_dataset(&DatasetConfig {
        repetitions: 3,
        ..DatasetConfig::default()
    })?;
    let config = TrainConfig {
        epochs: 10,
        samples_per_epoch: Some(1024),
        lr_decay_epochs: 4,
        ..TrainConfig::default()
    };
    let report = ablation_suite(&dataset, Task::Classify, &Variant::ALL, &[0], &config, |run| {
        println!("{:<10} {:>7} params  {}", run.variant, run.param_count, run.metrics.headline())
    })?;
    print!("\n{}", report.summary());
    Ok(())
}
