use rand_chacha::ChaCha8Rng;

use super::linalg::{gemm, Op};
use super::{check_grad_shape, glorot_uniform, missing_forward, Layer, Mode, Param, Tensor};
use crate::error::{Error, Result};

/// Affine map `[B, in] -> [B, out]`, `y = x W + b` with `W: [in, out]`.
pub struct Dense {
    pub weight: Param,
    pub bias: Param,
    input: Option<Tensor>,
}

impl Dense {
    pub fn new(name: &str, inputs: usize, outputs: usize, rng: &mut ChaCha8Rng) -> Self {
        let w = glorot_uniform(&[inputs, outputs], inputs, outputs, rng);
        Self::from_weights(name, w, Tensor::zeros(&[outputs]))
    }

    pub fn from_weights(name: &str, weight: Tensor, bias: Tensor) -> Self {
        assert_eq!(weight.shape.len(), 2, "dense weight is [in, out]");
        assert_eq!(bias.shape, vec![weight.shape[1]], "dense bias is [out]");
        Dense {
            weight: Param::new(format!("{name}.weight"), weight),
            bias: Param::new(format!("{name}.bias"), bias),
            input: None,
        }
    }

    pub fn inputs(&self) -> usize {
        self.weight.value.shape[0]
    }

    pub fn outputs(&self) -> usize {
        self.weight.value.shape[1]
    }
}

impl Layer for Dense {
    fn forward(&mut self, x: &Tensor, _mode: Mode) -> Result<Tensor> {
        x.expect_rank(2, "dense")?;
        let (b, n_in) = (x.shape[0], x.shape[1]);
        if n_in != self.inputs() {
            return Err(Error::shape(format!(
                "dense expects {} features, got {n_in}",
                self.inputs()
            )));
        }
        let n_out = self.outputs();
        let mut y: Vec<f64> = self.bias.value.data.iter().copied().cycle().take(b * n_out).collect();
        gemm(b, n_in, n_out, 1.0, &x.data, Op::N, &self.weight.value.data, Op::N, 1.0, &mut y);
        self.input = Some(x.clone());
        Tensor::new(vec![b, n_out], y)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let x = self.input.as_ref().ok_or_else(|| missing_forward("dense"))?;
        let (b, n_in, n_out) = (x.shape[0], self.inputs(), self.outputs());
        check_grad_shape(grad, &[b, n_out], "dense")?;
        gemm(n_in, b, n_out, 1.0, &x.data, Op::T, &grad.data, Op::N, 1.0, &mut self.weight.grad);
        for row in grad.data.chunks(n_out) {
            for (g, d) in self.bias.grad.iter_mut().zip(row) {
                *g += d;
            }
        }
        let mut dx = vec![0.0; b * n_in];
        gemm(b, n_out, n_in, 1.0, &grad.data, Op::N, &self.weight.value.data, Op::T, 0.0, &mut dx);
        Tensor::new(vec![b, n_in], dx)
    }

    fn params(&self) -> Vec<&Param> {
        vec![&self.weight, &self.bias]
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        vec![&mut self.weight, &mut self.bias]
    }
}
