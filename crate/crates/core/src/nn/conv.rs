//! 1-D and 2-D cross-correlation layers via im2col + GEMM.

use rand_chacha::ChaCha8Rng;

use super::linalg::{gemm, Op};
use super::{check_grad_shape, glorot_uniform, missing_forward, Layer, Mode, Param, Tensor};
use crate::error::{Error, Result};

struct ConvCache {
    cols: Vec<f64>,
    in_shape: Vec<usize>,
    out_shape: Vec<usize>,
}

/// `[B, C_in, L] -> [B, C_out, L']` with weight `[C_out, C_in, K]`.
pub struct Conv1d {
    pub weight: Param,
    pub bias: Param,
    pub stride: usize,
    pub padding: usize,
    cache: Option<ConvCache>,
}

impl Conv1d {
    pub fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let w = glorot_uniform(
            &[out_channels, in_channels, kernel],
            in_channels * kernel,
            out_channels * kernel,
            rng,
        );
        Self::from_weights(name, w, Tensor::zeros(&[out_channels]), stride, padding)
    }

    pub fn from_weights(name: &str, weight: Tensor, bias: Tensor, stride: usize, padding: usize) -> Self {
        assert_eq!(weight.shape.len(), 3, "conv1d weight is [C_out, C_in, K]");
        assert_eq!(bias.shape, vec![weight.shape[0]], "conv1d bias is [C_out]");
        assert!(stride > 0, "stride must be positive");
        Conv1d {
            weight: Param::new(format!("{name}.weight"), weight),
            bias: Param::new(format!("{name}.bias"), bias),
            stride,
            padding,
            cache: None,
        }
    }

    fn dims(&self) -> (usize, usize, usize) {
        let s = &self.weight.value.shape;
        (s[0], s[1], s[2])
    }

    pub fn output_len(&self, len: usize) -> Option<usize> {
        let (_, _, k) = self.dims();
        let padded = len + 2 * self.padding;
        (padded >= k).then(|| (padded - k) / self.stride + 1)
    }
}

impl Layer for Conv1d {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        x.expect_rank(3, "conv1d")?;
        let (c_out, c_in, k) = self.dims();
        let (b, ci, len) = (x.shape[0], x.shape[1], x.shape[2]);
        if ci != c_in {
            return Err(Error::shape(format!("conv1d expects {c_in} input channels, got {ci}")));
        }
        let l_out = self
            .output_len(len)
            .ok_or_else(|| Error::shape(format!("conv1d kernel {k} longer than padded input {len}")))?;
        let rows = c_in * k;
        let ncols = b * l_out;
        let mut cols = vec![0.0; rows * ncols];
        for bi in 0..b {
            for c in 0..c_in {
                let src = &x.data[(bi * c_in + c) * len..(bi * c_in + c + 1) * len];
                for kk in 0..k {
                    let row = &mut cols[(c * k + kk) * ncols + bi * l_out..(c * k + kk) * ncols + (bi + 1) * l_out];
                    for (l, dst) in row.iter_mut().enumerate() {
                        let pos = (l * self.stride + kk) as isize - self.padding as isize;
                        if pos >= 0 && (pos as usize) < len {
                            *dst = src[pos as usize];
                        }
                    }
                }
            }
        }
        let mut y = vec![0.0; c_out * ncols];
        gemm(c_out, rows, ncols, 1.0, &self.weight.value.data, Op::N, &cols, Op::N, 0.0, &mut y);
        let mut out = vec![0.0; b * c_out * l_out];
        for co in 0..c_out {
            let bias = self.bias.value.data[co];
            for bi in 0..b {
                let src = &y[co * ncols + bi * l_out..co * ncols + (bi + 1) * l_out];
                let dst = &mut out[(bi * c_out + co) * l_out..(bi * c_out + co + 1) * l_out];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = s + bias;
                }
            }
        }
        let out_shape = vec![b, c_out, l_out];
        self.cache = Some(ConvCache {
            cols,
            in_shape: x.shape.clone(),
            out_shape: out_shape.clone(),
        });
        Tensor::new(out_shape, out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self.cache.as_ref().ok_or_else(|| missing_forward("conv1d"))?;
        check_grad_shape(grad, &cache.out_shape, "conv1d")?;
        let (c_out, c_in, k) = self.dims();
        let (b, len) = (cache.in_shape[0], cache.in_shape[2]);
        let l_out = cache.out_shape[2];
        let rows = c_in * k;
        let ncols = b * l_out;

        // regroup upstream gradient as [C_out, B * L']
        let mut dy = vec![0.0; c_out * ncols];
        for bi in 0..b {
            for co in 0..c_out {
                let src = &grad.data[(bi * c_out + co) * l_out..(bi * c_out + co + 1) * l_out];
                dy[co * ncols + bi * l_out..co * ncols + (bi + 1) * l_out].copy_from_slice(src);
            }
        }
        for co in 0..c_out {
            self.bias.grad[co] += dy[co * ncols..(co + 1) * ncols].iter().sum::<f64>();
        }
        gemm(c_out, ncols, rows, 1.0, &dy, Op::N, &cache.cols, Op::T, 1.0, &mut self.weight.grad);
        let mut dcols = vec![0.0; rows * ncols];
        gemm(rows, c_out, ncols, 1.0, &self.weight.value.data, Op::T, &dy, Op::N, 0.0, &mut dcols);

        let mut dx = vec![0.0; b * c_in * len];
        for bi in 0..b {
            for c in 0..c_in {
                let dst = &mut dx[(bi * c_in + c) * len..(bi * c_in + c + 1) * len];
                for kk in 0..k {
                    let row = &dcols[(c * k + kk) * ncols + bi * l_out..(c * k + kk) * ncols + (bi + 1) * l_out];
                    for (l, g) in row.iter().enumerate() {
                        let pos = (l * self.stride + kk) as isize - self.padding as isize;
                        if pos >= 0 && (pos as usize) < len {
                            dst[pos as usize] += g;
                        }
                    }
                }
            }
        }
        Tensor::new(cache.in_shape.clone(), dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}

/// `[B, C_in, H, W] -> [B, C_out, H', W']` with weight `[C_out, C_in, KH, KW]`.
pub struct Conv2d {
    pub weight: Param,
    pub bias: Param,
    pub stride: (usize, usize),
    pub padding: (usize, usize),
    cache: Option<ConvCache>,
}

impl Conv2d {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        name: &str,
        in_channels: usize,
        out_channels: usize,
        kernel: (usize, usize),
        stride: (usize, usize),
        padding: (usize, usize),
        rng: &mut ChaCha8Rng,
    ) -> Self {
        let area = kernel.0 * kernel.1;
        let w = glorot_uniform(
            &[out_channels, in_channels, kernel.0, kernel.1],
            in_channels * area,
            out_channels * area,
            rng,
        );
        Self::from_weights(name, w, Tensor::zeros(&[out_channels]), stride, padding)
    }

    pub fn from_weights(
        name: &str,
        weight: Tensor,
        bias: Tensor,
        stride: (usize, usize),
        padding: (usize, usize),
    ) -> Self {
        assert_eq!(weight.shape.len(), 4, "conv2d weight is [C_out, C_in, KH, KW]");
        assert_eq!(bias.shape, vec![weight.shape[0]], "conv2d bias is [C_out]");
        assert!(stride.0 > 0 && stride.1 > 0, "stride must be positive");
        Conv2d {
            weight: Param::new(format!("{name}.weight"), weight),
            bias: Param::new(format!("{name}.bias"), bias),
            stride,
            padding,
            cache: None,
        }
    }

    fn dims(&self) -> (usize, usize, usize, usize) {
        let s = &self.weight.value.shape;
        (s[0], s[1], s[2], s[3])
    }

    pub fn output_dims(&self, h: usize, w: usize) -> Option<(usize, usize)> {
        let (_, _, kh, kw) = self.dims();
        let ph = h + 2 * self.padding.0;
        let pw = w + 2 * self.padding.1;
        (ph >= kh && pw >= kw).then(|| ((ph - kh) / self.stride.0 + 1, (pw - kw) / self.stride.1 + 1))
    }

    fn source_index(&self, o: usize, k: usize, stride: usize, pad: usize, extent: usize) -> Option<usize> {
        let pos = (o * stride + k) as isize - pad as isize;
        (pos >= 0 && (pos as usize) < extent).then_some(pos as usize)
    }
}

impl Layer for Conv2d {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        x.expect_rank(4, "conv2d")?;
        let (c_out, c_in, kh, kw) = self.dims();
        let (b, ci, h, w) = (x.shape[0], x.shape[1], x.shape[2], x.shape[3]);
        if ci != c_in {
            return Err(Error::shape(format!("conv2d expects {c_in} input channels, got {ci}")));
        }
        let (ho, wo) = self
            .output_dims(h, w)
            .ok_or_else(|| Error::shape(format!("conv2d kernel larger than padded input {h}x{w}")))?;
        let rows = c_in * kh * kw;
        let plane = ho * wo;
        let ncols = b * plane;
        let mut cols = vec![0.0; rows * ncols];
        for c in 0..c_in {
            for ki in 0..kh {
                for kj in 0..kw {
                    let r = (c * kh + ki) * kw + kj;
                    for bi in 0..b {
                        let src = &x.data[(bi * c_in + c) * h * w..(bi * c_in + c + 1) * h * w];
                        let base = r * ncols + bi * plane;
                        for oi in 0..ho {
                            let Some(si) = self.source_index(oi, ki, self.stride.0, self.padding.0, h) else {
                                continue;
                            };
                            for oj in 0..wo {
                                if let Some(sj) = self.source_index(oj, kj, self.stride.1, self.padding.1, w) {
                                    cols[base + oi * wo + oj] = src[si * w + sj];
                                }
                            }
                        }
                    }
                }
            }
        }
        let mut y = vec![0.0; c_out * ncols];
        gemm(c_out, rows, ncols, 1.0, &self.weight.value.data, Op::N, &cols, Op::N, 0.0, &mut y);
        let mut out = vec![0.0; b * c_out * plane];
        for co in 0..c_out {
            let bias = self.bias.value.data[co];
            for bi in 0..b {
                let src = &y[co * ncols + bi * plane..co * ncols + (bi + 1) * plane];
                let dst = &mut out[(bi * c_out + co) * plane..(bi * c_out + co + 1) * plane];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d = s + bias;
                }
            }
        }
        let out_shape = vec![b, c_out, ho, wo];
        self.cache = Some(ConvCache {
            cols,
            in_shape: x.shape.clone(),
            out_shape: out_shape.clone(),
        });
        Tensor::new(out_shape, out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self.cache.as_ref().ok_or_else(|| missing_forward("conv2d"))?;
        check_grad_shape(grad, &cache.out_shape, "conv2d")?;
        let (c_out, c_in, kh, kw) = self.dims();
        let (b, h, w) = (cache.in_shape[0], cache.in_shape[2], cache.in_shape[3]);
        let (ho, wo) = (cache.out_shape[2], cache.out_shape[3]);
        let rows = c_in * kh * kw;
        let plane = ho * wo;
        let ncols = b * plane;

        let mut dy = vec![0.0; c_out * ncols];
        for bi in 0..b {
            for co in 0..c_out {
                let src = &grad.data[(bi * c_out + co) * plane..(bi * c_out + co + 1) * plane];
                dy[co * ncols + bi * plane..co * ncols + (bi + 1) * plane].copy_from_slice(src);
            }
        }
        for co in 0..c_out {
            self.bias.grad[co] += dy[co * ncols..(co + 1) * ncols].iter().sum::<f64>();
        }
        gemm(c_out, ncols, rows, 1.0, &dy, Op::N, &cache.cols, Op::T, 1.0, &mut self.weight.grad);
        let mut dcols = vec![0.0; rows * ncols];
        gemm(rows, c_out, ncols, 1.0, &self.weight.value.data, Op::T, &dy, Op::N, 0.0, &mut dcols);

        let mut dx = vec![0.0; b * c_in * h * w];
        for c in 0..c_in {
            for ki in 0..kh {
                for kj in 0..kw {
                    let r = (c * kh + ki) * kw + kj;
                    for bi in 0..b {
                        let dst = &mut dx[(bi * c_in + c) * h * w..(bi * c_in + c + 1) * h * w];
                        let base = r * ncols + bi * plane;
                        for oi in 0..ho {
                            let Some(si) = self.source_index(oi, ki, self.stride.0, self.padding.0, h) else {
                                continue;
                            };
                            for oj in 0..wo {
                                if let Some(sj) = self.source_index(oj, kj, self.stride.1, self.padding.1, w) {
                                    dst[si * w + sj] += dcols[base + oi * wo + oj];
                                }
                            }
                        }
                    }
                }
            }
        }
        Tensor::new(cache.in_shape.clone(), dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}
