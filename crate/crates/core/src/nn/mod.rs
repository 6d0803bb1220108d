//! Minimal neural network engine with hand-written backward passes.
//!
//! Activations are batch-major, row-major `f64` tensors. Every layer caches
//! what it needs during `forward` and accumulates parameter gradients during
//! `backward`; calling `backward` without a preceding `forward` is an error.

pub mod activation;
pub mod checkpoint;
pub mod conv;
pub mod dense;
pub mod gradcheck;
pub mod linalg;
pub mod loss;
pub mod lstm;
pub mod optim;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use activation::{Dropout, FeatureMean, Relu, SwapAxes, TimeMean};
pub use conv::{Conv1d, Conv2d};
pub use dense::Dense;
pub use lstm::{BiLstm, Lstm};
pub use optim::{LrSchedule, Optimizer, OptimizerKind};
pub use loss::{argmax, cross_entropy, mse, softmax};
pub use checkpoint::Checkpoint;

#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl Tensor {
    pub fn new(shape: Vec<usize>, data: Vec<f64>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != data.len() {
            return Err(Error::shape(format!(
                "shape {shape:?} needs {n} values, got {}",
                data.len()
            )));
        }
        Ok(Tensor { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor {
            shape: shape.to_vec(),
            data: vec![0.0; shape.iter().product()],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn reshape(mut self, shape: Vec<usize>) -> Result<Self> {
        let n: usize = shape.iter().product();
        if n != self.data.len() {
            return Err(Error::shape(format!(
                "cannot reshape {:?} into {shape:?}",
                self.shape
            )));
        }
        self.shape = shape;
        Ok(self)
    }

    pub fn expect_rank(&self, rank: usize, what: &str) -> Result<()> {
        if self.shape.len() != rank {
            return Err(Error::shape(format!(
                "{what} expects a rank-{rank} input, got shape {:?}",
                self.shape
            )));
        }
        Ok(())
    }
}

/// A named trainable tensor together with its accumulated gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct Param {
    pub name: String,
    pub value: Tensor,
    pub grad: Vec<f64>,
}

impl Param {
    pub fn new(name: impl Into<String>, value: Tensor) -> Self {
        let grad = vec![0.0; value.len()];
        Param {
            name: name.into(),
            value,
            grad,
        }
    }

    pub fn zero_grad(&mut self) {
        self.grad.iter_mut().for_each(|g| *g = 0.0);
    }

    pub fn len(&self) -> usize {
        self.value.len()
    }

    pub fn is_empty(&self) -> bool {
        self.value.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Train,
    Eval,
}

pub trait Layer {
    fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor>;

    /// Propagates `grad` (same shape as the last output) back to the input,
    /// adding parameter gradients into each [`Param::grad`].
    fn backward(&mut self, grad: &Tensor) -> Result<Tensor>;

    fn params(&self) -> Vec<&Param> {
        Vec::new()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        Vec::new()
    }
}

pub(crate) fn missing_forward(layer: &str) -> Error {
    Error::State(format!("{layer}: backward called before forward"))
}

pub(crate) fn check_grad_shape(grad: &Tensor, expected: &[usize], layer: &str) -> Result<()> {
    if grad.shape != expected {
        return Err(Error::shape(format!(
            "{layer}: upstream gradient has shape {:?}, expected {expected:?}",
            grad.shape
        )));
    }
    Ok(())
}

/// Glorot-uniform initialization: `U(-l, l)`, `l = sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform(shape: &[usize], fan_in: usize, fan_out: usize, rng: &mut ChaCha8Rng) -> Tensor {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    uniform(shape, limit, rng)
}

pub fn uniform(shape: &[usize], limit: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let n = shape.iter().product();
    Tensor {
        shape: shape.to_vec(),
        data: (0..n).map(|_| rng.gen_range(-limit..=limit)).collect(),
    }
}

/// Total number of scalar weights.
pub fn param_count(params: &[&Param]) -> usize {
    params.iter().map(|p| p.len()).sum()
}

/// Layers applied in order.
#[derive(Default)]
pub struct Sequential {
    pub layers: Vec<Box<dyn Layer + Send>>,
}

impl Sequential {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(mut self, layer: impl Layer + Send + 'static) -> Self {
        self.layers.push(Box::new(layer));
        self
    }
}

impl Layer for Sequential {
    fn forward(&mut self, x: &Tensor, mode: Mode) -> Result<Tensor> {
        let mut y = x.clone();
        for layer in &mut self.layers {
            y = layer.forward(&y, mode)?;
        }
        Ok(y)
    }

    fn backward(&mut self, grad: &Tensor) -> Result<Tensor> {
        let mut g = grad.clone();
        for layer in self.layers.iter_mut().rev() {
            g = layer.backward(&g)?;
        }
        Ok(g)
    }

    fn params(&self) -> Vec<&Param> {
        self.layers.iter().flat_map(|l| l.params()).collect()
    }

    fn params_mut(&mut self) -> Vec<&mut Param> {
        self.layers.iter_mut().flat_map(|l| l.params_mut()).collect()
    }
}
