//! Baseline correction, windowing and short-time Fourier analysis.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flowsim::Run;
use crate::kinematics::PatternId;

/// Samples in one network input window (4 s at 25 Hz).
pub const WINDOW_LEN: usize = 100;

/// `N_d x N_s` block of baseline-corrected pressures ending at `t_end`.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureWindow {
    /// Row-major, one row per time step.
    pub data: Vec<f64>,
    pub len: usize,
    pub sensors: usize,
    pub t_end: f64,
    pub sample_rate_hz: f64,
}

impl PressureWindow {
    pub fn new(data: Vec<f64>, len: usize, sensors: usize, t_end: f64, sample_rate_hz: f64) -> Result<Self> {
        if data.len() != len * sensors {
            return Err(Error::shape(format!(
                "window data has {} values, expected {len} x {sensors}",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("window contains non-finite values".into()));
        }
        Ok(PressureWindow {
            data,
            len,
            sensors,
            t_end,
            sample_rate_hz,
        })
    }

    /// Copies rows `end + 1 - len ..= end` of a run.
    pub fn from_run(run: &Run, end: usize, len: usize) -> Result<Self> {
        if end >= run.len() || end + 1 < len {
            return Err(Error::InvalidArgument(format!(
                "window of {len} ending at {end} does not fit a run of {}",
                run.len()
            )));
        }
        let start = end + 1 - len;
        let data = run.pressure[start * run.sensors..(end + 1) * run.sensors].to_vec();
        PressureWindow::new(data, len, run.sensors, run.time[end], run.sample_rate_hz)
    }

    pub fn channel(&self, sensor: usize) -> Vec<f64> {
        (0..self.len).map(|i| self.data[i * self.sensors + sensor]).collect()
    }
}

/// Subtracts each sensor's at-rest mean from that sensor's whole series.
pub fn subtract_baseline(run: &Run) -> Result<Run> {
    let rest = run.rest_samples;
    if rest == 0 || rest > run.len() {
        return Err(Error::Validation(format!(
            "rest segment of {rest} samples cannot provide a baseline"
        )));
    }
    let n_s = run.sensors;
    let mut means = vec![0.0; n_s];
    for i in 0..rest {
        for (m, p) in means.iter_mut().zip(run.row(i)) {
            *m += p;
        }
    }
    for m in &mut means {
        *m /= rest as f64;
    }
    let mut out = run.clone();
    for row in out.pressure.chunks_mut(n_s) {
        for (p, m) in row.iter_mut().zip(&means) {
            *p -= m;
        }
    }
    Ok(out)
}

/// Label carried by a window: the ground truth at its last sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowLabel {
    pub pattern: PatternId,
    pub l_x: f64,
    pub l_y: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowRef {
    /// Index of the final sample in the run.
    pub end: usize,
    pub label: WindowLabel,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct WindowSet {
    pub windows: Vec<WindowRef>,
    /// Set when the kicking part of the run is shorter than one window.
    pub too_short: bool,
}

/// Window end positions over the kicking part of a run, keeping windows that
/// end inside the effective lateral region.
pub fn sliding_windows(run: &Run, window_len: usize, stride: usize) -> Result<WindowSet> {
    if window_len == 0 || stride == 0 {
        return Err(Error::InvalidArgument(
            "window length and stride must be positive".into(),
        ));
    }
    let first_end = run.rest_samples + window_len - 1;
    if first_end >= run.len() {
        return Ok(WindowSet {
            windows: Vec::new(),
            too_short: true,
        });
    }
    let windows = (first_end..run.len())
        .step_by(stride)
        .filter(|&end| run.in_effective_region(end))
        .map(|end| WindowRef {
            end,
            label: WindowLabel {
                pattern: run.pattern[end],
                l_x: run.l_x[end],
                l_y: run.l_y[end],
            },
        })
        .collect();
    Ok(WindowSet {
        windows,
        too_short: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WindowFunction {
    Rectangular,
    Hamming,
}

impl WindowFunction {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            WindowFunction::Rectangular => vec![1.0; n],
            WindowFunction::Hamming if n == 1 => vec![1.0],
            WindowFunction::Hamming => (0..n)
                .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
                .collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StftParams {
    pub fft_size: usize,
    pub hop: usize,
    pub window: WindowFunction,
}

impl Default for StftParams {
    fn default() -> Self {
        StftParams {
            fft_size: 32,
            hop: 1,
            window: WindowFunction::Hamming,
        }
    }
}

impl StftParams {
    pub fn frames(&self, len: usize) -> usize {
        if self.fft_size > len || self.hop == 0 {
            0
        } else {
            (len - self.fft_size) / self.hop + 1
        }
    }

    /// Non-redundant bins of a real input, `N/2 + 1`.
    pub fn half_bins(&self) -> usize {
        self.fft_size / 2 + 1
    }
}

/// Complex STFT, `frames x fft_size`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct StftMatrix {
    pub frames: usize,
    pub bins: usize,
    pub data: Vec<Complex64>,
}

impl StftMatrix {
    pub fn at(&self, m: usize, k: usize) -> Complex64 {
        self.data[m * self.bins + k]
    }
}

/// Reusable STFT plan for one parameter set.
pub struct StftPlan {
    params: StftParams,
    window: Vec<f64>,
    fft: Arc<dyn Fft<f64>>,
}

impl StftPlan {
    pub fn new(params: StftParams) -> Result<Self> {
        if params.fft_size == 0 || params.hop == 0 {
            return Err(Error::InvalidArgument(
                "fft size and hop must be positive".into(),
            ));
        }
        let fft = FftPlanner::new().plan_fft_forward(params.fft_size);
        Ok(StftPlan {
            window: params.window.coefficients(params.fft_size),
            params,
            fft,
        })
    }

    pub fn params(&self) -> &StftParams {
        &self.params
    }

    pub fn stft(&self, series: &[f64]) -> Result<StftMatrix> {
        let n = self.params.fft_size;
        if n > series.len() {
            return Err(Error::InvalidArgument(format!(
                "fft size {n} exceeds series length {}",
                series.len()
            )));
        }
        let frames = self.params.frames(series.len());
        let mut data = Vec::with_capacity(frames * n);
        for m in 0..frames {
            let start = m * self.params.hop;
            data.extend(
                series[start..start + n]
                    .iter()
                    .zip(&self.window)
                    .map(|(x, w)| Complex64::new(x * w, 0.0)),
            );
        }
        self.fft.process(&mut data);
        Ok(StftMatrix {
            frames,
            bins: n,
            data,
        })
    }

    /// `|X(m, k)|^2` for the first `bins` frequency indices.
    pub fn power(&self, series: &[f64], bins: usize, out: &mut Vec<f64>) -> Result<usize> {
        let x = self.stft(series)?;
        let bins = bins.min(x.bins);
        for m in 0..x.frames {
            out.extend(x.data[m * x.bins..m * x.bins + bins].iter().map(|c| c.norm_sqr()));
        }
        Ok(x.frames)
    }
}

/// `X(m,k) = sum_n w(n) p(n + m r) exp(-j 2 pi n k / N)`.
pub fn stft(series: &[f64], params: StftParams) -> Result<StftMatrix> {
    StftPlan::new(params)?.stft(series)
}

/// Per-sensor power spectrogram, `sensors x frames x bins`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrogram {
    pub values: Vec<f64>,
    pub sensors: usize,
    pub frames: usize,
    pub bins: usize,
    pub hop: usize,
    pub fft_size: usize,
    pub window: WindowFunction,
}

impl Spectrogram {
    pub fn at(&self, sensor: usize, m: usize, k: usize) -> f64 {
        self.values[(sensor * self.frames + m) * self.bins + k]
    }

    /// Long-format CSV `sensor,frame,time_s,bin,freq_hz,power` for plotting.
    pub fn write_csv(&self, path: &Path, sample_rate_hz: f64) -> Result<()> {
        let mut out = String::from("sensor,frame,time_s,bin,freq_hz,power\n");
        for s in 0..self.sensors {
            for m in 0..self.frames {
                for k in 0..self.bins {
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        s + 1,
                        m,
                        (m * self.hop) as f64 / sample_rate_hz,
                        k,
                        k as f64 * sample_rate_hz / self.fft_size as f64,
                        self.at(s, m, k)
                    );
                }
            }
        }
        std::fs::write(path, out).map_err(|e| Error::io(path, e))
    }
}

/// Half-spectrum spectrogram `S_i(m,k) = |X_i(m,k)|^2` of every sensor.
pub fn spectrogram(window: &PressureWindow, params: StftParams) -> Result<Spectrogram> {
    let plan = StftPlan::new(params)?;
    spectrogram_with(&plan, window, params.half_bins())
}

pub fn spectrogram_with(plan: &StftPlan, window: &PressureWindow, bins: usize) -> Result<Spectrogram> {
    let params = *plan.params();
    let mut values = Vec::new();
    let mut frames = 0;
    for s in 0..window.sensors {
        frames = plan.power(&window.channel(s), bins, &mut values)?;
    }
    Ok(Spectrogram {
        values,
        sensors: window.sensors,
        frames,
        bins: bins.min(params.fft_size),
        hop: params.hop,
        fft_size: params.fft_size,
        window: params.window,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kinematics::PatternId;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Direct evaluation of the windowed DFT of every frame.
    fn naive_stft(x: &[f64], n: usize, hop: usize, w: &[f64]) -> Vec<Vec<Complex64>> {
        let frames = (x.len() - n) / hop + 1;
        (0..frames)
            .map(|m| {
                (0..n)
                    .map(|k| {
                        (0..n)
                            .map(|i| {
                                let a = -2.0 * PI * (i * k) as f64 / n as f64;
                                Complex64::new(a.cos(), a.sin()) * (w[i] * x[i + m * hop])
                            })
                            .sum()
                    })
                    .collect()
            })
            .collect()
    }

    fn run_from(rows: &[[f64; 2]], rest: usize) -> Run {
        let n = rows.len();
        Run {
            sample_rate_hz: 25.0,
            sensors: 2,
            rest_samples: rest,
            time: (0..n).map(|i| i as f64 / 25.0).collect(),
            pressure: rows.iter().flatten().copied().collect(),
            l_x: vec![0.0; n],
            l_y: vec![20.0; n],
            pattern: vec![PatternId::S1; n],
        }
    }

    #[test]
    fn baseline_zeroes_constant_series() {
        let run = run_from(&[[5.0, -3.0]; 20], 4);
        let out = subtract_baseline(&run).unwrap();
        assert!(out.pressure.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn baseline_is_per_sensor() {
        let mut rows = vec![[100.0, 2000.0]; 10];
        rows[0] = [102.0, 1990.0];
        rows.push([110.0, 2010.0]);
        let run = run_from(&rows, 3);
        let out = subtract_baseline(&run).unwrap();
        for s in 0..2 {
            let col: Vec<f64> = (0..run.len()).map(|i| run.row(i)[s]).collect();
            let mean = col[..3].iter().sum::<f64>() / 3.0;
            for i in 0..run.len() {
                assert_eq!(out.row(i)[s], col[i] - mean);
            }
            let rest_mean: f64 = (0..3).map(|i| out.row(i)[s]).sum::<f64>() / 3.0;
            assert!(rest_mean.abs() < 1e-9);
        }
    }

    #[test]
    fn baseline_requires_rest() {
        let run = run_from(&[[1.0, 1.0]; 5], 0);
        assert!(subtract_baseline(&run).is_err());
    }

    #[test]
    fn window_counts() {
        let run = run_from(&[[0.0, 0.0]; 100], 0);
        assert_eq!(sliding_windows(&run, 100, 1).unwrap().windows.len(), 1);
        let run = run_from(&[[0.0, 0.0]; 109], 0);
        assert_eq!(sliding_windows(&run, 100, 1).unwrap().windows.len(), 10);
        let run = run_from(&[[0.0, 0.0]; 99], 0);
        let set = sliding_windows(&run, 100, 1).unwrap();
        assert!(set.too_short && set.windows.is_empty());
    }

    #[test]
    fn windows_take_last_label_and_skip_outside_region() {
        let mut run = run_from(&[[0.0, 0.0]; 130], 10);
        for i in 0..run.len() {
            run.l_x[i] = -150.0 + 2.0 * i as f64;
        }
        let set = sliding_windows(&run, 100, 3).unwrap();
        assert!(!set.windows.is_empty());
        for w in &set.windows {
            assert_eq!(w.label.l_x, run.l_x[w.end]);
            assert!(w.label.l_x.abs() <= 100.0);
            assert!(w.end + 1 - 100 >= run.rest_samples);
        }
    }

    #[test]
    fn hamming_coefficients() {
        let w = WindowFunction::Hamming.coefficients(32);
        assert!((w[0] - 0.08).abs() < 1e-12);
        assert!((w[31] - 0.08).abs() < 1e-12);
        for (i, v) in w.iter().enumerate() {
            let expect = 0.54 - 0.46 * (2.0 * PI * i as f64 / 31.0).cos();
            assert!((v - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn stft_matches_naive_dft() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let len = rng.gen_range(32..=100);
            let x: Vec<f64> = (0..len).map(|_| rng.gen_range(-5.0..5.0)).collect();
            let params = StftParams::default();
            let got = stft(&x, params).unwrap();
            let want = naive_stft(&x, 32, 1, &params.window.coefficients(32));
            assert_eq!(got.frames, want.len());
            for (m, row) in want.iter().enumerate() {
                for (k, v) in row.iter().enumerate() {
                    let g = got.at(m, k);
                    assert!((g - v).norm() <= 1e-9 * v.norm().max(1.0));
                }
            }
        }
    }

    #[test]
    fn zero_input_gives_zero_output() {
        let x = vec![0.0; 100];
        let s = stft(&x, StftParams::default()).unwrap();
        assert!(s.data.iter().all(|c| c.norm() == 0.0));
        let w = PressureWindow::new(vec![0.0; 300], 100, 3, 0.0, 25.0).unwrap();
        let sg = spectrogram(&w, StftParams::default()).unwrap();
        assert!(sg.values.iter().all(|&v| v == 0.0));
        assert_eq!((sg.frames, sg.bins), (69, 17));
    }

    #[test]
    fn pure_tone_peaks_at_its_bin() {
        let n = 32;
        let k0 = 5;
        let x: Vec<f64> = (0..n).map(|i| (2.0 * PI * (k0 * i) as f64 / n as f64).cos()).collect();
        let params = StftParams {
            fft_size: n,
            hop: 1,
            window: WindowFunction::Rectangular,
        };
        let s = stft(&x, params).unwrap();
        assert_eq!(s.frames, 1);
        let peak = (0..=n / 2).max_by(|&a, &b| s.at(0, a).norm().total_cmp(&s.at(0, b).norm())).unwrap();
        assert_eq!(peak, k0);
        // closed form: N/2 at +-k0, zero elsewhere
        assert!((s.at(0, k0).norm() - 16.0).abs() < 1e-9);
    }

    #[test]
    fn two_hz_kick_lands_in_bin_three() {
        let x: Vec<f64> = (0..100).map(|i| (2.0 * PI * 2.0 * i as f64 / 25.0).sin()).collect();
        let w = PressureWindow::new(x.clone(), 100, 1, 4.0, 25.0).unwrap();
        let sg = spectrogram(&w, StftParams::default()).unwrap();
        let expected = (2.0f64 * 32.0 / 25.0).round() as usize;
        let want = naive_stft(&x, 32, 1, &WindowFunction::Hamming.coefficients(32));
        for m in 0..sg.frames {
            let peak = (0..sg.bins).max_by(|&a, &b| sg.at(0, m, a).total_cmp(&sg.at(0, m, b))).unwrap();
            let oracle_peak = (0..17).max_by(|&a, &b| want[m][a].norm().total_cmp(&want[m][b].norm())).unwrap();
            assert_eq!(peak, expected);
            assert_eq!(peak, oracle_peak);
        }
    }

    #[test]
    fn fft_size_larger_than_series_is_an_error() {
        assert!(stft(&[1.0; 10], StftParams::default()).is_err());
    }

    mod props {
        use super::*;
        use proptest::collection::vec;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn linearity(x in vec(-10.0f64..10.0, 40), y in vec(-10.0f64..10.0, 40), a in -3.0f64..3.0, b in -3.0f64..3.0) {
                let p = StftParams::default();
                let combo: Vec<f64> = x.iter().zip(&y).map(|(u, v)| a * u + b * v).collect();
                let sx = stft(&x, p).unwrap();
                let sy = stft(&y, p).unwrap();
                let sc = stft(&combo, p).unwrap();
                for i in 0..sc.data.len() {
                    let lin = sx.data[i] * a + sy.data[i] * b;
                    prop_assert!((sc.data[i] - lin).norm() < 1e-9);
                }
            }

            #[test]
            fn parseval_rectangular(x in vec(-10.0f64..10.0, 32..64)) {
                let p = StftParams { fft_size: 16, hop: 3, window: WindowFunction::Rectangular };
                let s = stft(&x, p).unwrap();
                for m in 0..s.frames {
                    let spec: f64 = (0..16).map(|k| s.at(m, k).norm_sqr()).sum();
                    let time: f64 = x[m * 3..m * 3 + 16].iter().map(|v| v * v).sum();
                    prop_assert!((spec - 16.0 * time).abs() <= 1e-6 * (16.0 * time).max(1e-12));
                }
            }

            #[test]
            fn conjugate_symmetry(x in vec(-10.0f64..10.0, 32..50)) {
                let s = stft(&x, StftParams::default()).unwrap();
                for m in 0..s.frames {
                    for k in 1..32 {
                        let a = s.at(m, k).norm_sqr();
                        let b = s.at(m, 32 - k).norm_sqr();
                        prop_assert!(a >= 0.0);
                        prop_assert!((a - b).abs() <= 1e-9 * a.max(1.0));
                    }
                }
            }
        }
    }
}
