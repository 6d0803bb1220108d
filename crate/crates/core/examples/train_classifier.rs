//! Trains the fusion classifier on a reduced dataset and prints the test
//! confusion matrix.

use kicksense::data::{build_dataset, DatasetConfig, Split};
use kicksense::eval::evaluate_classifier;
use kicksense::models::{Model, ModelSpec, Task, Variant};
use kicksense::train::{train_with, TrainConfig};

fn main() -> kicksense::Result<()> {
    let dataset = build_dataset(&DatasetConfig {
        repetitions: 3,
        ..DatasetConfig::default()
    })?;
    let train_idx = dataset.indices(Split::Train);
    println!("{} training windows", train_idx.len());

    let mut model = Model::new(ModelSpec::new(Variant::Fusion, Task::Classify, 0))?;
    println!("{} parameters", model.param_count());
    let config = TrainConfig {
        epochs: 12,
        samples_per_epoch: Some(1024),
        lr_decay_epochs: 4,
        ..TrainConfig::default()
    };
    train_with(&mut model, &dataset, &train_idx, &config, |e| {
        println!("epoch {:>2}  loss {:.4}  train acc {:.3}  lr {:.5}", e.epoch, e.loss, e.metric, e.lr)
    })?;

    let cm = evaluate_classifier(&mut model, &dataset, &dataset.indices(Split::Test))?;
    println!("\ntest accuracy {:.4}\n{}", cm.overall_accuracy(), cm.to_csv());
    Ok(())
}
