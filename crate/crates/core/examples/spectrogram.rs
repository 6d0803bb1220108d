//! Cuts one window from a simulated sweep, computes its spectrogram and
//! reports the strongest bin per sensor.

use kicksense::flowsim::{sweep_experiment, SensorGeometry, SimConfig};
use kicksense::kinematics::PatternId;
use kicksense::signal::{spectrogram, subtract_baseline, PressureWindow, StftParams, WINDOW_LEN};

fn main() -> kicksense::Result<()> {
    let config = SimConfig::default();
    for id in [PatternId::S1, PatternId::S6] {
        let raw = sweep_experiment(&id.pattern(), &SensorGeometry::default(), &config, 40.0)?;
        let run = subtract_baseline(&raw)?;
        // window ending where the legs cross the midline
        let end = (run.rest_samples..run.len()).find(|&i| run.l_x[i] >= 0.0).unwrap();
        let window = PressureWindow::from_run(&run, end, WINDOW_LEN)?;
        let spec = spectrogram(&window, StftParams::default())?;
        println!("{id}: {} frames x {} bins per sensor", spec.frames, spec.bins);
        for s in 0..spec.sensors {
            let mut power = vec![0.0; spec.bins];
            for m in 0..spec.frames {
                for (k, p) in power.iter_mut().enumerate() {
                    *p += spec.at(s, m, k);
                }
            }
            let k = (1..spec.bins).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
            let hz = k as f64 * config.sample_rate_hz / spec.fft_size as f64;
            println!("  sensor {}: strongest bin {k} ({hz:.2} Hz)", s + 1);
        }
        let path = format!("spectrogram_{id}.csv");
        spec.write_csv(path.as_ref(), config.sample_rate_hz)?;
        println!("  wrote {path}");
    }
    Ok(())
}
