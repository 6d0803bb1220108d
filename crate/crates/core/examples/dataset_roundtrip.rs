//! Exports a simulated dataset as CSV files plus a manifest, reads it back
//! and checks that nothing changed.

use kicksense::data::{build_dataset, simulate_to_dir, split_counts, DatasetConfig, Manifest};

fn main() -> kicksense::Result<()> {
    let config = DatasetConfig {
        repetitions: 2,
        ly_levels_mm: vec![20, 100, 200],
        ..DatasetConfig::default()
    };
    let dir = std::env::args().nth(1).unwrap_or_else(|| "kicksense-data".into());
    let manifest = simulate_to_dir(&config, dir.as_ref())?;
    println!("wrote {} runs to {dir}", manifest.files.len());

    let (manifest, root) = Manifest::read(dir.as_ref())?;
    let from_disk = manifest.load_dataset(&root)?;
    let in_memory = build_dataset(&config)?;
    println!("{} windows, identical to the in-memory dataset: {}", from_disk.len(), from_disk == in_memory);
    for ((split, pattern), n) in split_counts(&from_disk) {
        println!("  {split:?} {pattern}: {n}");
    }
    Ok(())
}
