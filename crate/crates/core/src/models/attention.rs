//! Softmax self-weighting of the concatenated branch features:
//! `w = softmax(F W + beta)`, `F_w = F * w` (elementwise).

use crate::error::{Error, Result};
use crate::nn::linalg::{gemm, Op};
use crate::nn::{check_grad_shape, missing_forward, softmax, Layer, Mode, Param, Tensor};

/// One fused feature vector and the quantities it was computed from.
#[derive(Debug, Clone, PartialEq)]
pub struct FusedFeature {
    pub f_t: Vec<f64>,
    pub f_tf: Vec<f64>,
    pub f_concat: Vec<f64>,
    pub weights: Vec<f64>,
    pub f_weighted: Vec<f64>,
}

struct AttentionCache {
    input: Tensor,
    weights: Vec<f64>,
}

pub struct AttentionFusion {
    /// `[N, N]`, applied as `F W`.
    pub weight: Param,
    pub bias: Param,
    cache: Option<AttentionCache>,
}

impl AttentionFusion {
    /// Zero-initialized, so the initial weighting is uniform.
    pub fn new(name: &str, features: usize) -> Self {
        Self::from_weights(name, Tensor::zeros(&[features, features]), Tensor::zeros(&[features]))
    }

    pub fn from_weights(name: &str, weight: Tensor, bias: Tensor) -> Self {
        let n = bias.len();
        assert_eq!(weight.shape, vec![n, n], "attention weight is [N, N]");
        AttentionFusion {
            weight: Param::new(format!("{name}.weight"), weight),
            bias: Param::new(format!("{name}.bias"), bias),
            cache: None,
        }
    }

    pub fn features(&self) -> usize {
        self.bias.len()
    }

    /// Attention weights `w` for each row of `x`, `[B, N]`.
    pub fn weights(&self, x: &Tensor) -> Result<Tensor> {
        x.expect_rank(2, "attention")?;
        let (b, n) = (x.shape[0], x.shape[1]);
        if n != self.features() {
            return Err(Error::shape(format!(
                "attention expects {} features, got {n}",
                self.features()
            )));
        }
        if x.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::Validation("attention input contains non-finite values".into()));
        }
        let mut z: Vec<f64> = self.bias.value.data.iter().copied().cycle().take(b * n).collect();
        gemm(b, n, n, 1.0, &x.data, Op::N, &self.weight.value.data, Op::N, 1.0, &mut z);
        let w = z.chunks(n).flat_map(softmax).collect();
        Tensor::new(vec![b, n], w)
    }

    /// Fuses a single pair of branch feature vectors.
    pub fn fuse(&self, f_t: &[f64], f_tf: &[f64]) -> Result<FusedFeature> {
        let f_concat: Vec<f64> = f_t.iter().chain(f_tf).copied().collect();
        let x = Tensor::new(vec![1, f_concat.len()], f_concat.clone())?;
        let weights = self.weights(&x)?.data;
        let f_weighted = f_concat.iter().zip(&weights).map(|(f, w)| f * w).collect();
        Ok(FusedFeature {
            f_t: f_t.to_vec(),
            f_tf: f_tf.to_vec(),
            f_concat,
            weights,
            f_weighted,
        })
    }
}

impl Layer for AttentionFusion {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        let w = self.weights(x)?;
        let y = x.data.iter().zip(&w.data).map(|(f, w)| f * w).collect();
        self.cache = Some(AttentionCache {
            input: x.clone(),
            weights: w.data,
        });
        Tensor::new(x.shape.clone(), y)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self.cache.as_ref().ok_or_else(|| missing_forward("attention"))?;
        let x = &cache.input;
        check_grad_shape(grad, &x.shape, "attention")?;
        let (b, n) = (x.shape[0], x.shape[1]);
        let mut dx: Vec<f64> = grad.data.iter().zip(&cache.weights).map(|(g, w)| g * w).collect();
        // Softmax Jacobian: dz = w * (dw - <dw, w>) with dw = g * F.
        let mut dz = vec![0.0; b * n];
        for r in 0..b {
            let span = r * n..(r + 1) * n;
            let (g, f, w) = (&grad.data[span.clone()], &x.data[span.clone()], &cache.weights[span.clone()]);
            let dot: f64 = (0..n).map(|i| g[i] * f[i] * w[i]).sum();
            for i in 0..n {
                dz[r * n + i] = w[i] * (g[i] * f[i] - dot);
            }
        }
        for (db, d) in self.bias.grad.iter_mut().zip(bias_grad(&dz, n)) {
            *db += d;
        }
        gemm(n, b, n, 1.0, &x.data, Op::T, &dz, Op::N, 1.0, &mut self.weight.grad);
        gemm(b, n, n, 1.0, &dz, Op::N, &self.weight.value.data, Op::T, 1.0, &mut dx);
        Tensor::new(x.shape.clone(), dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

fn bias_grad(dz: &[f64], n: usize) -> Vec<f64> {
    let mut out = vec![0.0; n];
    for row in dz.chunks(n) {
        for (o, v) in out.iter_mut().zip(row) {
            *o += v;
        }
    }
    out
}
