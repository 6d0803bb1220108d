//! Hand-crafted feature extractors feeding a small perceptron.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{check_windows, ModelSpec, Variant};
use crate::error::{Error, Result};
use crate::nn::{Dense, Layer, Mode, Param, Relu, Sequential, Tensor};
use crate::signal::{PressureWindow, StftParams, StftPlan, WindowFunction};

pub const FFT_FEATURES_PER_SENSOR: usize = 4;
pub const STATS_FEATURES_PER_SENSOR: usize = 3;

fn full_window_plan(len: usize) -> Result<StftPlan> {
    StftPlan::new(StftParams {
        fft_size: len,
        hop: 1,
        window: WindowFunction::Rectangular,
    })
}

/// Per sensor: frequency (Hz) and single-sided amplitude of the two
/// strongest non-DC bins, `[f1, a1, f2, a2]`. Equal energies go to the
/// lower bin.
pub fn fft_features(window: &PressureWindow) -> Result<Vec<f64>> {
    fft_features_with(&full_window_plan(window.len)?, window)
}

fn fft_features_with(plan: &StftPlan, window: &PressureWindow) -> Result<Vec<f64>> {
    let n = window.len;
    if plan.params().fft_size != n {
        return Err(Error::shape(format!("feature plan is for {} samples, window has {n}", plan.params().fft_size)));
    }
    let half = n / 2 + 1;
    let mut out = Vec::with_capacity(window.sensors * FFT_FEATURES_PER_SENSOR);
    let mut power = Vec::with_capacity(half);
    for s in 0..window.sensors {
        power.clear();
        plan.power(&window.channel(s), half, &mut power)?;
        for k in strongest_bins(&power) {
            let one_sided = if 2 * k == n { 1.0 } else { 2.0 };
            out.push(k as f64 * window.sample_rate_hz / n as f64);
            out.push(one_sided * power[k].sqrt() / n as f64);
        }
    }
    Ok(out)
}

/// The two highest-energy bins above DC, strongest first; equal energies
/// go to the lower index.
fn strongest_bins(power: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (1..power.len()).collect();
    // Stable sort keeps lower indices first among equal energies.
    order.sort_by(|a, b| power[*b].total_cmp(&power[*a]));
    order.truncate(2);
    order
}

/// Per sensor: `[max, min, mean]`.
pub fn stats_features(window: &PressureWindow) -> Vec<f64> {
    let mut out = Vec::with_capacity(window.sensors * STATS_FEATURES_PER_SENSOR);
    for s in 0..window.sensors {
        let ch = window.channel(s);
        let max = ch.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let min = ch.iter().copied().fold(f64::INFINITY, f64::min);
        out.extend([max, min, ch.iter().sum::<f64>() / ch.len() as f64]);
    }
    out
}

/// Two hidden ReLU layers over z-scored features.
pub struct BaselineMlp {
    spec: ModelSpec,
    mlp: Sequential,
    plan: Option<StftPlan>,
}

impl BaselineMlp {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.arch.validate()?;
        let (inputs, plan) = match spec.variant {
            Variant::FftMlp => (
                spec.arch.sensors * FFT_FEATURES_PER_SENSOR,
                Some(full_window_plan(spec.arch.window_len)?),
            ),
            Variant::StatsMlp => (spec.arch.sensors * STATS_FEATURES_PER_SENSOR, None),
            other => return Err(Error::InvalidArgument(format!("{other} is not a baseline variant"))),
        };
        let h = spec.arch.mlp_hidden;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let mlp = Sequential::new()
            .push(Dense::new("mlp.hidden1", inputs, h, &mut rng))
            .push(Relu::new())
            .push(Dense::new("mlp.hidden2", h, h, &mut rng))
            .push(Relu::new())
            .push(Dense::new("mlp.out", h, spec.task.outputs(), &mut rng));
        Ok(BaselineMlp { spec, mlp, plan })
    }

    /// Raw (unscaled) features of each window, `[B, F]`.
    pub fn features(&self, windows: &[&PressureWindow]) -> Result<Tensor> {
        check_windows(windows, &self.spec.arch)?;
        let mut data = Vec::new();
        for w in windows {
            match &self.plan {
                Some(plan) => data.extend(fft_features_with(plan, w)?),
                None => data.extend(stats_features(w)),
            }
        }
        let f = data.len() / windows.len();
        Tensor::new(vec![windows.len(), f], data)
    }

    pub(super) fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub(super) fn spec_mut(&mut self) -> &mut ModelSpec {
        &mut self.spec
    }

    pub(super) fn forward(&mut self, windows: &[&PressureWindow], mode: Mode) -> Result<Tensor> {
        let mut x = self.features(windows)?;
        let norm = &self.spec.norm;
        if norm.feature_mean.len() != x.shape[1] || norm.feature_std.len() != x.shape[1] {
            return Err(Error::State("baseline feature scaling has not been fitted".into()));
        }
        let f = x.shape[1];
        for row in x.data.chunks_mut(f) {
            for ((v, m), s) in row.iter_mut().zip(&norm.feature_mean).zip(&norm.feature_std) {
                *v = (*v - m) / s;
            }
        }
        self.mlp.forward(&x, mode)
    }

    pub(super) fn backward(&mut self, grad: &Tensor) -> Result<()> {
        self.mlp.backward(grad).map(|_| ())
    }

    pub(super) fn params(&self) -> Vec<&Param> {
        self.mlp.params()
    }

    pub(super) fn params_mut(&mut self) -> Vec<&mut Param> {
        self.mlp.params_mut()
    }

    /// Fits the per-feature z-score on training windows.
    pub(super) fn calibrate(&mut self, windows: &[&PressureWindow]) -> Result<()> {
        let x = self.features(windows)?;
        let (rows, f) = (x.shape[0] as f64, x.shape[1]);
        let mut mean = vec![0.0; f];
        for row in x.data.chunks(f) {
            mean.iter_mut().zip(row).for_each(|(m, v)| *m += v / rows);
        }
        let mut var = vec![0.0; f];
        for row in x.data.chunks(f) {
            var.iter_mut().zip(row).zip(&mean).for_each(|((s, v), m)| *s += (v - m) * (v - m) / rows);
        }
        self.spec.norm.feature_mean = mean;
        self.spec.norm.feature_std = var.iter().map(|v| if *v > 1e-24 { v.sqrt() } else { 1.0 }).collect();
        Ok(())
    }
}
