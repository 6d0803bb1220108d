//! Central finite-difference gradient checking.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{Layer, Mode, Param, Tensor};
use crate::error::Result;

pub const DEFAULT_EPSILON: f64 = 1e-5;
pub const REL_ERROR_FLOOR: f64 = 1e-6;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR)
}

/// A scalar function of a set of parameters with an analytic gradient.
pub trait Objective {
    fn params_mut(&mut self) -> Vec<&mut Param>;

    fn loss(&mut self) -> Result<f64>;

    /// Evaluates the loss and writes the gradient into every `Param::grad`
    /// (which the caller has zeroed).
    fn loss_and_grad(&mut self) -> Result<f64>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mismatch {
    pub param: String,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, Default)]
pub struct GradCheckReport {
    pub checked: usize,
    pub max_rel_error: f64,
    pub worst: Option<Mismatch>,
}

/// Compares analytic gradients with `(L(w+e) - L(w-e)) / 2e` on up to
/// `coords_per_param` randomly chosen coordinates of every parameter.
pub fn check(obj: &mut impl Objective, coords_per_param: usize, eps: f64, seed: u64) -> Result<GradCheckReport> {
    for p in obj.params_mut() {
        p.zero_grad();
    }
    obj.loss_and_grad()?;
    let analytic: Vec<Vec<f64>> = obj.params_mut().iter().map(|p| p.grad.clone()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut report = GradCheckReport::default();
    for (pi, grads) in analytic.iter().enumerate() {
        let n = grads.len();
        let coords = sample(&mut rng, n, coords_per_param.min(n)).into_vec();
        for i in coords {
            let original = obj.params_mut()[pi].value.data[i];
            obj.params_mut()[pi].value.data[i] = original + eps;
            let plus = obj.loss()?;
            obj.params_mut()[pi].value.data[i] = original - eps;
            let minus = obj.loss()?;
            obj.params_mut()[pi].value.data[i] = original;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(grads[i], numeric);
            report.checked += 1;
            if err > report.max_rel_error || report.worst.is_none() {
                report.max_rel_error = report.max_rel_error.max(err);
                report.worst = Some(Mismatch {
                    param: obj.params_mut()[pi].name.clone(),
                    index: i,
                    analytic: grads[i],
                    numeric,
                });
            }
        }
    }
    Ok(report)
}

/// `L = sum(layer(x) * r)` for a fixed random `r`; the input is treated as
/// an extra parameter so the input gradient is checked too.
pub struct LayerProbe<L: Layer> {
    pub layer: L,
    pub input: Param,
    pub upstream: Vec<f64>,
}

impl<L: Layer> LayerProbe<L> {
    pub fn new(mut layer: L, input: Tensor, seed: u64) -> Result<Self> {
        use rand::Rng;
        let out = layer.forward(&input, Mode::Eval)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let upstream = (0..out.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
        Ok(LayerProbe {
            layer,
            input: Param::new("input", input),
            upstream,
        })
    }
}

impl<L: Layer> Objective for LayerProbe<L> {
    fn params_mut(&mut self) -> Vec<&mut Param> {
        let mut ps = self.layer.params_mut();
        ps.push(&mut self.input);
        ps
    }

    fn loss(&mut self) -> Result<f64> {
        let y = self.layer.forward(&self.input.value, Mode::Eval)?;
        Ok(y.data.iter().zip(&self.upstream).map(|(a, b)| a * b).sum())
    }

    fn loss_and_grad(&mut self) -> Result<f64> {
        let y = self.layer.forward(&self.input.value, Mode::Eval)?;
        let loss = y.data.iter().zip(&self.upstream).map(|(a, b)| a * b).sum();
        let dx = self.layer.backward(&Tensor::new(y.shape.clone(), self.upstream.clone())?)?;
        for (g, d) in self.input.grad.iter_mut().zip(&dx.data) {
            *g += d;
        }
        Ok(loss)
    }
}
