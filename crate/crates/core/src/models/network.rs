//! The dual-branch fusion network and its single-branch ablations.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::attention::{AttentionFusion, FusedFeature};
use super::{check_windows, ModelSpec, Variant};
use crate::error::{Error, Result};
use crate::nn::{
    BiLstm, Conv1d, Conv2d, Dense, Dropout, FeatureMean, Layer, Mode, Param, Relu, Sequential, SwapAxes, Tensor,
    TimeMean,
};
use crate::signal::{PressureWindow, StftParams, StftPlan};

/// Layer sizes of both feature branches.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ArchConfig {
    pub window_len: usize,
    pub sensors: usize,
    pub time_conv1: usize,
    pub time_conv2: usize,
    pub time_kernel: usize,
    /// Stride of the second time-branch convolution.
    pub time_stride: usize,
    pub lstm_hidden: usize,
    pub freq_conv1: usize,
    pub freq_conv2: usize,
    /// Stride of both 2-D convolutions along the frame axis.
    pub freq_stride: usize,
    pub freq_features: usize,
    pub dropout: f64,
    pub stft: StftParams,
    /// Hidden width of the baseline perceptrons.
    pub mlp_hidden: usize,
}

impl Default for ArchConfig {
    fn default() -> Self {
        ArchConfig {
            window_len: crate::signal::WINDOW_LEN,
            sensors: 3,
            time_conv1: 16,
            time_conv2: 32,
            time_kernel: 5,
            time_stride: 2,
            lstm_hidden: 32,
            freq_conv1: 8,
            freq_conv2: 16,
            freq_stride: 2,
            freq_features: 64,
            dropout: 0.3,
            stft: StftParams::default(),
            mlp_hidden: 32,
        }
    }
}

impl ArchConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            self.window_len,
            self.sensors,
            self.time_conv1,
            self.time_conv2,
            self.time_kernel,
            self.time_stride,
            self.lstm_hidden,
            self.freq_conv1,
            self.freq_conv2,
            self.freq_stride,
            self.freq_features,
            self.mlp_hidden,
        ];
        if positive.contains(&0) {
            return Err(Error::Config("layer sizes and strides must be positive".into()));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::Config(format!("dropout {} outside [0, 1)", self.dropout)));
        }
        if self.window_len < self.time_kernel || self.freq_input_dims().0 < 5 || self.freq_input_dims().1 < 5 {
            return Err(Error::Config("window too short for the configured kernels".into()));
        }
        Ok(())
    }

    pub fn time_features(&self) -> usize {
        2 * self.lstm_hidden
    }

    /// `(frames, bins)` of the spectrogram fed to the frequency branch.
    pub fn freq_input_dims(&self) -> (usize, usize) {
        (self.stft.frames(self.window_len), self.stft.half_bins())
    }

    fn freq_output_width(&self) -> usize {
        self.freq_input_dims().1 - 4
    }
}

/// 1-D convolutions over the sensor channels, then a BiLSTM whose outputs
/// are averaged over time: `[B, S, L] -> [B, 2H]`.
fn time_branch(arch: &ArchConfig, rng: &mut ChaCha8Rng) -> Sequential {
    let k = arch.time_kernel;
    Sequential::new()
        .push(Conv1d::new("time.conv1", arch.sensors, arch.time_conv1, k, 1, k / 2, rng))
        .push(Relu::new())
        .push(Conv1d::new("time.conv2", arch.time_conv1, arch.time_conv2, k, arch.time_stride, 0, rng))
        .push(Relu::new())
        .push(SwapAxes::new())
        .push(BiLstm::new("time.lstm", arch.time_conv2, arch.lstm_hidden, rng))
        .push(TimeMean::new())
}

/// 2-D convolutions over per-sensor log spectrograms, averaged over frames
/// and projected: `[B, S, M, K] -> [B, freq_features]`.
fn freq_branch(arch: &ArchConfig, rng: &mut ChaCha8Rng) -> Sequential {
    let s = (arch.freq_stride, 1);
    Sequential::new()
        .push(Conv2d::new("freq.conv1", arch.sensors, arch.freq_conv1, (3, 3), s, (0, 0), rng))
        .push(Relu::new())
        .push(Conv2d::new("freq.conv2", arch.freq_conv1, arch.freq_conv2, (3, 3), s, (0, 0), rng))
        .push(Relu::new())
        .push(FeatureMean::new())
        .push(Dense::new(
            "freq.proj",
            arch.freq_conv2 * arch.freq_output_width(),
            arch.freq_features,
            rng,
        ))
        .push(Relu::new())
}

/// Network inputs for a batch: `[B, S, L]` mean-removed, scaled series.
pub fn time_input(windows: &[&PressureWindow], scale: f64) -> Result<Tensor> {
    let (len, sensors) = (windows[0].len, windows[0].sensors);
    let mut data = Vec::with_capacity(windows.len() * len * sensors);
    for w in windows {
        for s in 0..sensors {
            let ch = w.channel(s);
            let mean = ch.iter().sum::<f64>() / len as f64;
            data.extend(ch.iter().map(|v| (v - mean) / scale));
        }
    }
    Tensor::new(vec![windows.len(), sensors, len], data)
}

/// `ln(1 + S)` of the spectrogram of each prepared channel, `[B, S, M, K]`.
pub fn freq_input(series: &Tensor, plan: &StftPlan) -> Result<Tensor> {
    let (b, s, len) = (series.shape[0], series.shape[1], series.shape[2]);
    let params = plan.params();
    let (frames, bins) = (params.frames(len), params.half_bins());
    let mut data = Vec::with_capacity(b * s * frames * bins);
    for ch in series.data.chunks(len) {
        plan.power(ch, bins, &mut data)?;
    }
    data.iter_mut().for_each(|v| *v = v.ln_1p());
    Tensor::new(vec![b, s, frames, bins], data)
}

pub struct FusionNet {
    spec: ModelSpec,
    time: Option<Sequential>,
    freq: Option<Sequential>,
    attention: Option<AttentionFusion>,
    dropout: Dropout,
    head: Dense,
    /// Fixed factor in front of the head; `N` for the fused variant so that
    /// uniform attention hands the head the plain concatenation.
    head_scale: f64,
    plan: StftPlan,
    split: Option<usize>,
}

impl FusionNet {
    pub fn new(spec: ModelSpec) -> Result<Self> {
        spec.arch.validate()?;
        let arch = spec.arch;
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        let (time, freq) = match spec.variant {
            Variant::Fusion => (Some(time_branch(&arch, &mut rng)), Some(freq_branch(&arch, &mut rng))),
            Variant::Time => (Some(time_branch(&arch, &mut rng)), None),
            Variant::Freq => {
                // Draw (and discard) the time branch so the frequency weights
                // match the fused model's for the same seed.
                time_branch(&arch, &mut rng);
                (None, Some(freq_branch(&arch, &mut rng)))
            }
            other => return Err(Error::InvalidArgument(format!("{other} is not a network variant"))),
        };
        let features = time.as_ref().map_or(0, |_| arch.time_features())
            + freq.as_ref().map_or(0, |_| arch.freq_features);
        let (attention, head_scale) = if spec.variant == Variant::Fusion {
            (Some(AttentionFusion::new("fusion.attention", features)), features as f64)
        } else {
            (None, 1.0)
        };
        let head = Dense::new("head", features, spec.task.outputs(), &mut rng);
        Ok(FusionNet {
            dropout: Dropout::new(arch.dropout, spec.seed ^ 0x5eed),
            plan: StftPlan::new(arch.stft)?,
            spec,
            time,
            freq,
            attention,
            head,
            head_scale,
            split: None,
        })
    }

    pub fn attention(&self) -> Option<&AttentionFusion> {
        self.attention.as_ref()
    }

    /// Branch features `(F_T, F_TF)` of each window in evaluation mode; a
    /// branch absent from this variant yields empty vectors.
    pub fn branch_features(&mut self, windows: &[&PressureWindow]) -> Result<(Tensor, Tensor)> {
        check_windows(windows, &self.spec.arch)?;
        let x = time_input(windows, self.spec.norm.input_scale)?;
        let b = windows.len();
        let f_t = match &mut self.time {
            Some(t) => t.forward(&x, Mode::Eval)?,
            None => Tensor::zeros(&[b, 0]),
        };
        let f_tf = match &mut self.freq {
            Some(f) => f.forward(&freq_input(&x, &self.plan)?, Mode::Eval)?,
            None => Tensor::zeros(&[b, 0]),
        };
        Ok((f_t, f_tf))
    }

    /// Per-window fused features; only defined for the fused variant.
    pub fn fused_features(&mut self, windows: &[&PressureWindow]) -> Result<Vec<FusedFeature>> {
        let (f_t, f_tf) = self.branch_features(windows)?;
        let attention = self
            .attention
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("single-branch models have no fusion stage".into()))?;
        let (nt, nf) = (f_t.shape[1], f_tf.shape[1]);
        (0..windows.len())
            .map(|i| attention.fuse(&f_t.data[i * nt..(i + 1) * nt], &f_tf.data[i * nf..(i + 1) * nf]))
            .collect()
    }

    pub(super) fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub(super) fn spec_mut(&mut self) -> &mut ModelSpec {
        &mut self.spec
    }

    pub(super) fn reseed(&mut self, seed: u64) {
        self.dropout.reseed(seed);
    }

    pub(super) fn forward(&mut self, windows: &[&PressureWindow], mode: Mode) -> Result<Tensor> {
        check_windows(windows, &self.spec.arch)?;
        let x = time_input(windows, self.spec.norm.input_scale)?;
        let f_t = match &mut self.time {
            Some(t) => Some(t.forward(&x, mode)?),
            None => None,
        };
        let f_tf = match &mut self.freq {
            Some(f) => Some(f.forward(&freq_input(&x, &self.plan)?, mode)?),
            None => None,
        };
        let (features, split) = match (f_t, f_tf) {
            (Some(a), Some(b)) => {
                let split = a.shape[1];
                (concat(&a, &b)?, Some(split))
            }
            (Some(a), None) | (None, Some(a)) => (a, None),
            (None, None) => unreachable!("every variant has a branch"),
        };
        self.split = split;
        let mut h = match &mut self.attention {
            Some(att) => att.forward(&features, mode)?,
            None => features,
        };
        h.data.iter_mut().for_each(|v| *v *= self.head_scale);
        let h = self.dropout.forward(&h, mode)?;
        self.head.forward(&h, mode)
    }

    pub(super) fn backward(&mut self, grad: &Tensor) -> Result<()> {
        let mut g = self.dropout.backward(&self.head.backward(grad)?)?;
        g.data.iter_mut().for_each(|v| *v *= self.head_scale);
        if let Some(att) = &mut self.attention {
            g = att.backward(&g)?;
        }
        match (&mut self.time, &mut self.freq) {
            (Some(t), Some(f)) => {
                let split = self.split.ok_or_else(|| Error::State("fusion backward before forward".into()))?;
                let (gt, gf) = split_columns(&g, split)?;
                t.backward(&gt)?;
                f.backward(&gf)?;
            }
            (Some(t), None) => {
                t.backward(&g)?;
            }
            (None, Some(f)) => {
                f.backward(&g)?;
            }
            (None, None) => unreachable!("every variant has a branch"),
        }
        Ok(())
    }

    pub(super) fn params(&self) -> Vec<&Param> {
        let mut ps = Vec::new();
        if let Some(t) = &self.time {
            ps.extend(t.params());
        }
        if let Some(f) = &self.freq {
            ps.extend(f.params());
        }
        if let Some(a) = &self.attention {
            ps.extend(a.params());
        }
        ps.extend(self.head.params());
        ps
    }

    pub(super) fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut ps = Vec::new();
        if let Some(t) = &mut self.time {
            ps.extend(t.params_mut());
        }
        if let Some(f) = &mut self.freq {
            ps.extend(f.params_mut());
        }
        if let Some(a) = &mut self.attention {
            ps.extend(a.params_mut());
        }
        ps.extend(self.head.params_mut());
        ps
    }

    /// Sets the input scale to the RMS of the mean-removed training windows.
    pub(super) fn calibrate(&mut self, windows: &[&PressureWindow]) -> Result<()> {
        let x = time_input(windows, 1.0)?;
        let rms = (x.data.iter().map(|v| v * v).sum::<f64>() / x.len().max(1) as f64).sqrt();
        self.spec.norm.input_scale = if rms > 1e-12 { rms } else { 1.0 };
        Ok(())
    }
}

fn concat(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    let (rows, na, nb) = (a.shape[0], a.shape[1], b.shape[1]);
    let mut data = Vec::with_capacity(rows * (na + nb));
    for r in 0..rows {
        data.extend_from_slice(&a.data[r * na..(r + 1) * na]);
        data.extend_from_slice(&b.data[r * nb..(r + 1) * nb]);
    }
    Tensor::new(vec![rows, na + nb], data)
}

fn split_columns(x: &Tensor, split: usize) -> Result<(Tensor, Tensor)> {
    let (rows, n) = (x.shape[0], x.shape[1]);
    let mut a = Vec::with_capacity(rows * split);
    let mut b = Vec::with_capacity(rows * (n - split));
    for row in x.data.chunks(n) {
        a.extend_from_slice(&row[..split]);
        b.extend_from_slice(&row[split..]);
    }
    Ok((Tensor::new(vec![rows, split], a)?, Tensor::new(vec![rows, n - split], b)?))
}
