//! Trains the fusion regressor and prints the L_x / L_y RMSE per pattern and
//! distance level.

use kicksense::data::{build_dataset, DatasetConfig, Split};
use kicksense::eval::evaluate_regressor;
use kicksense::models::{Model, ModelSpec, Task, Variant};
use kicksense::train::{train, TrainConfig};

fn main() -> kicksense::Result<()> {
    let dataset = build_dataset(&DatasetConfig {
        repetitions: 3,
        ly_levels_mm: vec![20, 80, 140, 200],
        ..DatasetConfig::default()
    })?;
    let mut model = Model::new(ModelSpec::new(Variant::Fusion, Task::Localize, 0))?;
    let config = TrainConfig {
        epochs: 40,
        samples_per_epoch: Some(1024),
        lr_decay_epochs: 14,
        ..TrainConfig::localize()
    };
    let log = train(&mut model, &dataset, &dataset.indices(Split::Train), &config)?;
    println!("final train RMSE {:.1} mm", log.last().map_or(f64::NAN, |e| e.metric));

    let report = evaluate_regressor(&mut model, &dataset, &dataset.indices(Split::Test))?;
    let pooled = report.pooled();
    println!(
        "test RMSE  L_x {:.1} mm  L_y {:.1} mm  ({:.0}% / {:.0}% within {} mm)",
        pooled.rmse_x(),
        pooled.rmse_y(),
        100.0 * pooled.band_fraction_x(),
        100.0 * pooled.band_fraction_y(),
        report.band_mm
    );
    for l_y in report.levels() {
        println!("  L_y {l_y:>3} mm: mean L_x RMSE {:.1} mm", report.mean_rmse_x_at(l_y));
    }
    for hz in [1.0, 1.5, 2.0] {
        println!("  {hz} Hz patterns: mean L_y RMSE {:.1} mm", report.mean_rmse_y_at_frequency(hz));
    }
    print!("\n{}", report.to_csv());
    Ok(())
}
