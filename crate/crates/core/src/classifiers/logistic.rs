use super::{dot, LabeledSet, LinearModel};
use crate::error::{Error, Result};

const MAX_ITERATIONS: usize = 10_000;
const GRADIENT_TOL: f64 = 1e-6;
const ARMIJO: f64 = 0.5;

/// L2-regularized logistic loss
/// `(1/n) Σ log(1 + exp(-y (w·x + b))) + ‖w‖² / (2 C n)`.
///
/// Parameters are packed as `[w_0, …, w_{d-1}, b]`.
pub struct LogisticObjective<'a> {
    data: &'a LabeledSet,
    c: f64,
}

/// `log(1 + exp(-m))` without overflow.
fn softplus_neg(m: f64) -> f64 {
    if m > 0.0 {
        (-m).exp().ln_1p()
    } else {
        -m + m.exp().ln_1p()
    }
}

/// `1 / (1 + exp(m))`.
fn sigmoid_neg(m: f64) -> f64 {
    if m > 0.0 {
        let e = (-m).exp();
        e / (1.0 + e)
    } else {
        1.0 / (1.0 + m.exp())
    }
}

impl<'a> LogisticObjective<'a> {
    pub fn new(data: &'a LabeledSet, c: f64) -> Self {
        Self { data, c }
    }

    pub fn n_params(&self) -> usize {
        self.data.dim() + 1
    }

    fn penalty_scale(&self) -> f64 {
        1.0 / (self.c * self.data.len() as f64)
    }

    pub fn value(&self, params: &[f64]) -> f64 {
        let d = self.data.dim();
        let (w, b) = (&params[..d], params[d]);
        let n = self.data.len() as f64;
        let loss: f64 = self
            .data
            .rows()
            .iter()
            .zip(self.data.labels())
            .map(|(x, y)| softplus_neg(y.sign() * (dot(w, x) + b)))
            .sum();
        loss / n + 0.5 * self.penalty_scale() * dot(w, w)
    }

    pub fn gradient(&self, params: &[f64]) -> Vec<f64> {
        let d = self.data.dim();
        let (w, b) = (&params[..d], params[d]);
        let n = self.data.len() as f64;
        let mut grad = vec![0.0; d + 1];
        for (x, y) in self.data.rows().iter().zip(self.data.labels()) {
            let ys = y.sign();
            let coef = -ys * sigmoid_neg(ys * (dot(w, x) + b)) / n;
            for (g, xi) in grad[..d].iter_mut().zip(x) {
                *g += coef * xi;
            }
            grad[d] += coef;
        }
        let lambda = self.penalty_scale();
        for (g, wi) in grad[..d].iter_mut().zip(w) {
            *g += lambda * wi;
        }
        grad
    }
}

/// Full-batch gradient descent with Armijo backtracking, from zero, until
/// the gradient sup-norm drops below 1e-6 or 10 000 iterations.
pub fn fit_logistic(data: &LabeledSet, c: f64) -> Result<LinearModel> {
    if c.is_nan() || c <= 0.0 {
        return Err(Error::invalid(format!("C must be positive, got {c}")));
    }
    let obj = LogisticObjective::new(data, c);
    let mut params = vec![0.0; obj.n_params()];
    let mut value = obj.value(&params);
    let mut step = 1.0;
    let mut trial = vec![0.0; params.len()];

    for _ in 0..MAX_ITERATIONS {
        let grad = obj.gradient(&params);
        let sup = grad.iter().fold(0.0f64, |m, g| m.max(g.abs()));
        if sup < GRADIENT_TOL {
            break;
        }
        let g2 = dot(&grad, &grad);
        loop {
            for ((t, p), g) in trial.iter_mut().zip(&params).zip(&grad) {
                *t = p - step * g;
            }
            let next = obj.value(&trial);
            if !next.is_finite() {
                return Err(Error::NonFinite(
                    "logistic loss overflowed; are the features standardized?".into(),
                ));
            }
            if next <= value - ARMIJO * step * g2 {
                std::mem::swap(&mut params, &mut trial);
                value = next;
                break;
            }
            step *= 0.5;
            if step < 1e-20 {
                // No representable decrease left.
                return Ok(split(params));
            }
        }
        step *= 2.0;
    }
    Ok(split(params))
}

fn split(mut params: Vec<f64>) -> LinearModel {
    let bias = params.pop().unwrap_or(0.0);
    LinearModel {
        weights: params,
        bias,
    }
}
