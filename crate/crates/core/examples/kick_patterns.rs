//! Prints the six kick patterns and samples the leg-tip deflection of each
//! over one period.

use kicksense::kinematics::{leg_deflection, pattern_set, patterns_to_toml, DEFAULT_AMPLITUDE_M};

fn main() -> kicksense::Result<()> {
    for pattern in pattern_set() {
        println!(
            "{} {:?} {:.1} Hz  phases ({:.3}, {:.3})",
            pattern.id, pattern.style, pattern.frequency_hz, pattern.phase_left, pattern.phase_right
        );
        let steps = 8;
        for k in 0..steps {
            let t = pattern.period_s() * k as f64 / steps as f64;
            let s = leg_deflection(&pattern, DEFAULT_AMPLITUDE_M, t)?;
            println!("  t={:.3}s  left {:+.4} m  right {:+.4} m", s.t, s.a_left, s.a_right);
        }
    }
    println!("\n{}", patterns_to_toml(&pattern_set()));
    Ok(())
}
