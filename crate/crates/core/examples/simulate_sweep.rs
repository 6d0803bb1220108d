//! Simulates one lateral sweep and writes it as CSV.
//!
//! `cargo run --release --example simulate_sweep -- s4 80 sweep.csv`

use kicksense::flowsim::{sweep_experiment, SensorGeometry, SimConfig};
use kicksense::kinematics::PatternId;

fn main() -> kicksense::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let id: PatternId = args.first().map(String::as_str).unwrap_or("s1").parse()?;
    let l_y: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(60.0);
    let out = args.get(2).cloned().unwrap_or_else(|| "sweep.csv".into());

    let run = sweep_experiment(&id.pattern(), &SensorGeometry::default(), &SimConfig::default(), l_y)?;
    println!("{id} at L_y = {l_y} mm: {} samples ({} at rest)", run.len(), run.rest_samples);
    for s in 0..run.sensors {
        let col: Vec<f64> = (run.rest_samples..run.len()).map(|i| run.row(i)[s]).collect();
        let (lo, hi) = col.iter().fold((f64::MAX, f64::MIN), |(a, b), &v| (a.min(v), b.max(v)));
        println!("  sensor {}: {lo:.0} .. {hi:.0} Pa", s + 1);
    }
    let effective = (0..run.len()).filter(|&i| i >= run.rest_samples && run.in_effective_region(i)).count();
    println!("  {effective} kicking samples inside |L_x| <= 100 mm");
    run.write_csv(out.as_ref())?;
    println!("wrote {out}");
    Ok(())
}
