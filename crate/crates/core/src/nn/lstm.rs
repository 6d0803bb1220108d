//! Unidirectional and bidirectional LSTM layers over `[B, T, D]` sequences.
//!
//! Gate layout inside the `4H` axis is `[input, forget, cell, output]`:
//!
//! ```text
//! z_t = x_t W_ih + h_{t-1} W_hh + b
//! i = sigmoid(z_i)   f = sigmoid(z_f)   g = tanh(z_g)   o = sigmoid(z_o)
//! c_t = f * c_{t-1} + i * g
//! h_t = o * tanh(c_t)
//! ```
//!
//! Initial hidden and cell states are zero.

use rand_chacha::ChaCha8Rng;

use super::linalg::{gemm, Op};
use super::{check_grad_shape, missing_forward, uniform, Layer, Mode, Param, Tensor};
use crate::error::{Error, Result};

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

struct LstmCache {
    x: Tensor,
    /// Activated gates per processing step, `[T][B][4H]`.
    gates: Vec<f64>,
    /// Cell states per step, `[T][B][H]`.
    cells: Vec<f64>,
    tanh_cells: Vec<f64>,
    hidden: Vec<f64>,
}

pub struct Lstm {
    pub w_ih: Param,
    pub w_hh: Param,
    pub bias: Param,
    /// Processes the sequence from the last step to the first.
    pub reverse: bool,
    cache: Option<LstmCache>,
}

impl Lstm {
    pub fn new(name: &str, input: usize, hidden: usize, reverse: bool, rng: &mut ChaCha8Rng) -> Self {
        let limit = 1.0 / (hidden as f64).sqrt();
        let w_ih = uniform(&[input, 4 * hidden], limit, rng);
        let w_hh = uniform(&[hidden, 4 * hidden], limit, rng);
        let mut bias = uniform(&[4 * hidden], limit, rng);
        bias.data[hidden..2 * hidden].iter_mut().for_each(|b| *b = 1.0);
        Self::from_weights(name, w_ih, w_hh, bias, reverse)
    }

    pub fn from_weights(name: &str, w_ih: Tensor, w_hh: Tensor, bias: Tensor, reverse: bool) -> Self {
        let h = w_hh.shape[0];
        assert_eq!(w_hh.shape, vec![h, 4 * h], "w_hh is [H, 4H]");
        assert_eq!(w_ih.shape.len(), 2, "w_ih is [D, 4H]");
        assert_eq!(w_ih.shape[1], 4 * h, "w_ih is [D, 4H]");
        assert_eq!(bias.shape, vec![4 * h], "bias is [4H]");
        Lstm {
            w_ih: Param::new(format!("{name}.w_ih"), w_ih),
            w_hh: Param::new(format!("{name}.w_hh"), w_hh),
            bias: Param::new(format!("{name}.bias"), bias),
            reverse,
            cache: None,
        }
    }

    pub fn hidden(&self) -> usize {
        self.w_hh.value.shape[0]
    }

    pub fn input_size(&self) -> usize {
        self.w_ih.value.shape[0]
    }

    fn time_index(&self, step: usize, steps: usize) -> usize {
        if self.reverse {
            steps - 1 - step
        } else {
            step
        }
    }
}

impl Layer for Lstm {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        x.expect_rank(3, "lstm")?;
        let (b, t_len, d) = (x.shape[0], x.shape[1], x.shape[2]);
        if d != self.input_size() {
            return Err(Error::shape(format!(
                "lstm expects {} input features, got {d}",
                self.input_size()
            )));
        }
        if t_len == 0 {
            return Err(Error::shape("lstm over an empty sequence"));
        }
        let h = self.hidden();
        let g4 = 4 * h;

        let mut xw = vec![0.0; b * t_len * g4];
        gemm(b * t_len, d, g4, 1.0, &x.data, Op::N, &self.w_ih.value.data, Op::N, 0.0, &mut xw);

        let mut gates = vec![0.0; t_len * b * g4];
        let mut cells = vec![0.0; t_len * b * h];
        let mut tanh_cells = vec![0.0; t_len * b * h];
        let mut hidden = vec![0.0; t_len * b * h];
        let mut out = vec![0.0; b * t_len * h];
        let zeros = vec![0.0; b * h];

        for s in 0..t_len {
            let t = self.time_index(s, t_len);
            let z = &mut gates[s * b * g4..(s + 1) * b * g4];
            for bi in 0..b {
                let src = &xw[(bi * t_len + t) * g4..(bi * t_len + t + 1) * g4];
                for ((zv, xv), bv) in z[bi * g4..(bi + 1) * g4].iter_mut().zip(src).zip(&self.bias.value.data) {
                    *zv = xv + bv;
                }
            }
            if s > 0 {
                let h_prev = &hidden[(s - 1) * b * h..s * b * h];
                gemm(b, h, g4, 1.0, h_prev, Op::N, &self.w_hh.value.data, Op::N, 1.0, z);
            }
            let (done, rest) = cells.split_at_mut(s * b * h);
            let c_prev: &[f64] = if s > 0 { &done[(s - 1) * b * h..] } else { &zeros };
            let c_now = &mut rest[..b * h];
            let tc_now = &mut tanh_cells[s * b * h..(s + 1) * b * h];
            let h_now = &mut hidden[s * b * h..(s + 1) * b * h];
            for bi in 0..b {
                let zg = &mut z[bi * g4..(bi + 1) * g4];
                for j in 0..h {
                    let i_g = sigmoid(zg[j]);
                    let f_g = sigmoid(zg[h + j]);
                    let g_g = zg[2 * h + j].tanh();
                    let o_g = sigmoid(zg[3 * h + j]);
                    zg[j] = i_g;
                    zg[h + j] = f_g;
                    zg[2 * h + j] = g_g;
                    zg[3 * h + j] = o_g;
                    let c = f_g * c_prev[bi * h + j] + i_g * g_g;
                    let tc = c.tanh();
                    c_now[bi * h + j] = c;
                    tc_now[bi * h + j] = tc;
                    h_now[bi * h + j] = o_g * tc;
                }
                out[(bi * t_len + t) * h..(bi * t_len + t + 1) * h].copy_from_slice(&h_now[bi * h..(bi + 1) * h]);
            }
        }
        self.cache = Some(LstmCache {
            x: x.clone(),
            gates,
            cells,
            tanh_cells,
            hidden,
        });
        Tensor::new(vec![b, t_len, h], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let cache = self.cache.as_ref().ok_or_else(|| missing_forward("lstm"))?;
        let (b, t_len, d) = (cache.x.shape[0], cache.x.shape[1], cache.x.shape[2]);
        let h = self.hidden();
        let g4 = 4 * h;
        check_grad_shape(grad, &[b, t_len, h], "lstm")?;

        let mut dz_all = vec![0.0; b * t_len * g4];
        let mut dz = vec![0.0; b * g4];
        let mut dh_next = vec![0.0; b * h];
        let mut dc_next = vec![0.0; b * h];

        for s in (0..t_len).rev() {
            let t = self.time_index(s, t_len);
            let gates = &cache.gates[s * b * g4..(s + 1) * b * g4];
            let tc = &cache.tanh_cells[s * b * h..(s + 1) * b * h];
            for bi in 0..b {
                let gg = &gates[bi * g4..(bi + 1) * g4];
                let dzb = &mut dz[bi * g4..(bi + 1) * g4];
                for j in 0..h {
                    let k = bi * h + j;
                    let c_prev = if s > 0 { cache.cells[(s - 1) * b * h + k] } else { 0.0 };
                    let (i_g, f_g, g_g, o_g) = (gg[j], gg[h + j], gg[2 * h + j], gg[3 * h + j]);
                    let dh = grad.data[(bi * t_len + t) * h + j] + dh_next[k];
                    let d_o = dh * tc[k];
                    let dc = dh * o_g * (1.0 - tc[k] * tc[k]) + dc_next[k];
                    dzb[j] = dc * g_g * i_g * (1.0 - i_g);
                    dzb[h + j] = dc * c_prev * f_g * (1.0 - f_g);
                    dzb[2 * h + j] = dc * i_g * (1.0 - g_g * g_g);
                    dzb[3 * h + j] = d_o * o_g * (1.0 - o_g);
                    dc_next[k] = dc * f_g;
                }
                dz_all[(bi * t_len + t) * g4..(bi * t_len + t + 1) * g4].copy_from_slice(dzb);
            }
            if s > 0 {
                let h_prev = &cache.hidden[(s - 1) * b * h..s * b * h];
                gemm(h, b, g4, 1.0, h_prev, Op::T, &dz, Op::N, 1.0, &mut self.w_hh.grad);
                gemm(b, g4, h, 1.0, &dz, Op::N, &self.w_hh.value.data, Op::T, 0.0, &mut dh_next);
            }
        }

        gemm(d, b * t_len, g4, 1.0, &cache.x.data, Op::T, &dz_all, Op::N, 1.0, &mut self.w_ih.grad);
        for row in dz_all.chunks(g4) {
            for (g, v) in self.bias.grad.iter_mut().zip(row) {
                *g += v;
            }
        }
        let mut dx = vec![0.0; b * t_len * d];
        gemm(b * t_len, g4, d, 1.0, &dz_all, Op::N, &self.w_ih.value.data, Op::T, 0.0, &mut dx);
        Tensor::new(cache.x.shape.clone(), dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.w_ih, &self.w_hh, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.w_ih, &mut self.w_hh, &mut self.bias]
    }
}

/// Forward and backward LSTM passes concatenated: `[B, T, D] -> [B, T, 2H]`,
/// forward direction in the first `H` features.
pub struct BiLstm {
    pub forward_dir: Lstm,
    pub backward_dir: Lstm,
}

impl BiLstm {
    pub fn new(name: &str, input: usize, hidden: usize, rng: &mut ChaCha8Rng) -> Self {
        BiLstm {
            forward_dir: Lstm::new(&format!("{name}.fwd"), input, hidden, false, rng),
            backward_dir: Lstm::new(&format!("{name}.bwd"), input, hidden, true, rng),
        }
    }

    pub fn hidden(&self) -> usize {
        self.forward_dir.hidden()
    }
}

impl Layer for BiLstm {
    fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let f = self.forward_dir.forward(x, mode)?;
        let r = self.backward_dir.forward(x, mode)?;
        let h = self.hidden();
        let (b, t) = (x.shape[0], x.shape[1]);
        let mut out = Vec::with_capacity(b * t * 2 * h);
        for (fr, rr) in f.data.chunks(h).zip(r.data.chunks(h)) {
            out.extend_from_slice(fr);
            out.extend_from_slice(rr);
        }
        Tensor::new(vec![b, t, 2 * h], out)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let h = self.hidden();
        grad.expect_rank(3, "bilstm gradient")?;
        if grad.shape[2] != 2 * h {
            return Err(Error::shape(format!(
                "bilstm gradient has {} features, expected {}",
                grad.shape[2],
                2 * h
            )));
        }
        let (b, t) = (grad.shape[0], grad.shape[1]);
        let mut gf = Vec::with_capacity(b * t * h);
        let mut gr = Vec::with_capacity(b * t * h);
        for row in grad.data.chunks(2 * h) {
            gf.extend_from_slice(&row[..h]);
            gr.extend_from_slice(&row[h..]);
        }
        let mut dx = self.forward_dir.backward(&Tensor::new(vec![b, t, h], gf)?)?;
        let dr = self.backward_dir.backward(&Tensor::new(vec![b, t, h], gr)?)?;
        dx.data.iter_mut().zip(&dr.data).for_each(|(a, v)| *a += v);
        Ok(dx)
    }

    fn params(&self) -> Vec<&Param> {
        let mut p = self.forward_dir.params();
        p.extend(self.backward_dir.params());
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut p = self.forward_dir.params_mut();
        p.extend(self.backward_dir.params_mut());
        p
    }
}
