//! Trains a classifier, then replays pattern switches sample by sample and
//! reports how long each switch takes to be recognized.

use kicksense::data::{build_dataset, DatasetConfig, Split};
use kicksense::eval::{stream_summary_csv, streaming_recognition, StreamScenario};
use kicksense::models::{Model, ModelSpec, Task, Variant};
use kicksense::train::{train, TrainConfig};

fn main() -> kicksense::Result<()> {
    let dataset = build_dataset(&DatasetConfig {
        repetitions: 3,
        ..DatasetConfig::default()
    })?;
    let mut model = Model::new(ModelSpec::new(Variant::Fusion, Task::Classify, 0))?;
    let config = TrainConfig {
        epochs: 15,
        samples_per_epoch: Some(1024),
        lr_decay_epochs: 5,
        ..TrainConfig::default()
    };
    train(&mut model, &dataset, &dataset.indices(Split::Train), &config)?;

    let traces = streaming_recognition(&mut model, &StreamScenario::default())?;
    for t in &traces {
        let wrong = t.points.iter().filter(|p| p.truth != p.predicted).count();
        match t.transient_s {
            Some(s) => println!("{} -> {}: settled after {s:.2} s ({wrong} wrong predictions)", t.from, t.to),
            None => println!("{} -> {}: never settled", t.from, t.to),
        }
    }
    print!("\n{}", stream_summary_csv(&traces));
    Ok(())
}
