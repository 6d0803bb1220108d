//! Parameter-free layers: ReLU, dropout, pooling and axis shuffles.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{check_grad_shape, missing_forward, Layer, Mode, Tensor};
use crate::error::{Error, Result};

#[derive(Default)]
pub struct Relu {
    mask: Option<(Vec<usize>, Vec<bool>)>,
}

impl Relu {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for Relu {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        let mask: Vec<bool> = x.data.iter().map(|&v| v > 0.0).collect();
        let data = x.data.iter().map(|&v| v.max(0.0)).collect();
        self.mask = Some((x.shape.clone(), mask));
        Tensor::new(x.shape.clone(), data)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (shape, mask) = self.mask.as_ref().ok_or_else(|| missing_forward("relu"))?;
        check_grad_shape(grad, shape, "relu")?;
        let data = grad
            .data
            .iter()
            .zip(mask)
            .map(|(&g, &on)| if on { g } else { 0.0 })
            .collect();
        Tensor::new(shape.clone(), data)
    }
}

/// Inverted dropout: in training, zero each unit with probability `rate` and
/// scale survivors by `1 / (1 - rate)`; identity in evaluation.
pub struct Dropout {
    pub rate: f64,
    rng: ChaCha8Rng,
    scale_mask: Option<(Vec<usize>, Vec<f64>)>,
}

impl Dropout {
    pub fn new(rate: f64, seed: u64) -> Self {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
        Dropout {
            rate,
            rng: ChaCha8Rng::seed_from_u64(seed),
            scale_mask: None,
        }
    }

    pub fn reseed(&mut self, seed: u64) {
        self.rng = ChaCha8Rng::seed_from_u64(seed);
    }
}

impl Layer for Dropout {
    fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let scales: Vec<f64> = if mode == Mode::Eval || self.rate == 0.0 {
            vec![1.0; x.len()]
        } else {
            let keep = 1.0 / (1.0 - self.rate);
            (0..x.len())
                .map(|_| if self.rng.gen::<f64>() < self.rate { 0.0 } else { keep })
                .collect()
        };
        let data = x.data.iter().zip(&scales).map(|(v, s)| v * s).collect();
        self.scale_mask = Some((x.shape.clone(), scales));
        Tensor::new(x.shape.clone(), data)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let (shape, scales) = self.scale_mask.as_ref().ok_or_else(|| missing_forward("dropout"))?;
        check_grad_shape(grad, shape, "dropout")?;
        let data = grad.data.iter().zip(scales).map(|(g, s)| g * s).collect();
        Tensor::new(shape.clone(), data)
    }
}

/// Global average over the time axis: `[B, T, C] -> [B, C]`.
#[derive(Default)]
pub struct TimeMean {
    in_shape: Option<Vec<usize>>,
}

impl TimeMean {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for TimeMean {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        x.expect_rank(3, "time mean")?;
        let (b, t, c) = (x.shape[0], x.shape[1], x.shape[2]);
        if t == 0 {
            return Err(Error::shape("time mean over an empty sequence"));
        }
        let mut out = vec![0.0; b * c];
        for bi in 0..b {
            let dst = &mut out[bi * c..(bi + 1) * c];
            for row in x.data[bi * t * c..(bi + 1) * t * c].chunks(c) {
                for (d, v) in dst.iter_mut().zip(row) {
                    *d += v;
                }
            }
            dst.iter_mut().for_each(|d| *d /= t as f64);
        }
        self.in_shape = Some(x.shape.clone());
        Tensor::new(vec![b, c], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let shape = self.in_shape.as_ref().ok_or_else(|| missing_forward("time mean"))?;
        let (b, t, c) = (shape[0], shape[1], shape[2]);
        check_grad_shape(grad, &[b, c], "time mean")?;
        let mut dx = Vec::with_capacity(b * t * c);
        for bi in 0..b {
            let g = &grad.data[bi * c..(bi + 1) * c];
            for _ in 0..t {
                dx.extend(g.iter().map(|v| v / t as f64));
            }
        }
        Tensor::new(shape.clone(), dx)
    }
}

/// Average over the frame axis of a spectrogram feature map, then flatten:
/// `[B, C, H, W] -> [B, C * W]`. Keeps the frequency axis intact.
#[derive(Default)]
pub struct FeatureMean {
    in_shape: Option<Vec<usize>>,
}

impl FeatureMean {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Layer for FeatureMean {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        x.expect_rank(4, "feature mean")?;
        let (b, c, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        let mut out = vec![0.0; b * c * w];
        for (plane, dst) in x.data.chunks(h * w).zip(out.chunks_mut(w)) {
            for row in plane.chunks(w) {
                for (d, v) in dst.iter_mut().zip(row) {
                    *d += v;
                }
            }
            dst.iter_mut().for_each(|d| *d /= h as f64);
        }
        self.in_shape = Some(x.shape.clone());
        Tensor::new(vec![b, c * w], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let shape = self.in_shape.as_ref().ok_or_else(|| missing_forward("feature mean"))?;
        let (b, c, h, w) = (shape[0], shape[1], shape[2], shape[3]);
        check_grad_shape(grad, &[b, c * w], "feature mean")?;
        let mut dx = Vec::with_capacity(b * c * h * w);
        for g in grad.data.chunks(w) {
            for _ in 0..h {
                dx.extend(g.iter().map(|v| v / h as f64));
            }
        }
        Tensor::new(shape.clone(), dx)
    }
}

/// Swaps the last two axes of a rank-3 tensor: `[B, X, Y] -> [B, Y, X]`.
#[derive(Default)]
pub struct SwapAxes {
    in_shape: Option<Vec<usize>>,
}

impl SwapAxes {
    pub fn new() -> Self {
        Self::default()
    }
}

pub(crate) fn swap_last_two(x: &[f64], b: usize, rows: usize, cols: usize) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    for bi in 0..b {
        let src = &x[bi * rows * cols..(bi + 1) * rows * cols];
        let dst = &mut out[bi * rows * cols..(bi + 1) * rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                dst[c * rows + r] = src[r * cols + c];
            }
        }
    }
    out
}

impl Layer for SwapAxes {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        x.expect_rank(3, "swap axes")?;
        let (b, r, c) = (x.shape[0], x.shape[1], x.shape[2]);
        self.in_shape = Some(x.shape.clone());
        Tensor::new(vec![b, c, r], swap_last_two(&x.data, b, r, c))
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let shape = self.in_shape.as_ref().ok_or_else(|| missing_forward("swap axes"))?;
        let (b, r, c) = (shape[0], shape[1], shape[2]);
        check_grad_shape(grad, &[b, c, r], "swap axes")?;
        Tensor::new(shape.clone(), swap_last_two(&grad.data, b, c, r))
    }
}
