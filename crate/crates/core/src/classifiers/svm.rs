use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{dot, LabeledSet, LinearModel};
use crate::error::{Error, Result};

pub const SVM_EPOCHS: usize = 2000;

/// Primal soft-margin objective `½‖w‖² + C Σ max(0, 1 − y (w·x + b))`.
pub fn svm_objective(data: &LabeledSet, c: f64, model: &LinearModel) -> f64 {
    let hinge: f64 = data
        .rows()
        .iter()
        .zip(data.labels())
        .map(|(x, y)| (1.0 - y.sign() * model.score(x)).max(0.0))
        .sum();
    0.5 * dot(&model.weights, &model.weights) + c * hinge
}

/// Objective of the averaged iterate at the end of every epoch.
#[derive(Debug, Clone, Default)]
pub struct SvmTrace {
    pub epoch_objectives: Vec<f64>,
}

pub fn fit_linear_svm(data: &LabeledSet, c: f64, seed: u64) -> Result<LinearModel> {
    run(data, c, seed, SVM_EPOCHS, None)
}

pub fn fit_linear_svm_traced(
    data: &LabeledSet,
    c: f64,
    seed: u64,
    epochs: usize,
) -> Result<(LinearModel, SvmTrace)> {
    let mut trace = SvmTrace::default();
    let model = run(data, c, seed, epochs, Some(&mut trace))?;
    Ok((model, trace))
}

/// Pegasos stochastic subgradient descent on the equivalent objective
/// `λ/2 ‖w‖² + (1/n) Σ hinge` with `λ = 1/(C n)`, step `1/(λ t)`, projection
/// onto the ball of radius `1/√λ`, and iterate averaging. The sample order
/// is reshuffled every epoch from `seed`. The unregularized bias takes the
/// same steps, and the averaged bias is finally replaced by an exact
/// minimizer of the hinge sum for the averaged weights.
fn run(
    data: &LabeledSet,
    c: f64,
    seed: u64,
    epochs: usize,
    mut trace: Option<&mut SvmTrace>,
) -> Result<LinearModel> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::invalid(format!("C must be positive, got {c}")));
    }
    let n = data.len();
    let d = data.dim();
    let lambda = 1.0 / (c * n as f64);
    let radius = 1.0 / lambda.sqrt();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();

    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut w_sum = vec![0.0; d];
    let mut b_sum = 0.0;
    let mut t = 0usize;

    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = &data.rows()[i];
            let y = data.labels()[i].sign();
            let margin = y * (dot(&w, x) + b);
            let shrink = 1.0 - eta * lambda;
            w.iter_mut().for_each(|wi| *wi *= shrink);
            if margin < 1.0 {
                for (wi, xi) in w.iter_mut().zip(x) {
                    *wi += eta * y * xi;
                }
                b += eta * y;
            }
            let norm = dot(&w, &w).sqrt();
            if norm > radius {
                let s = radius / norm;
                w.iter_mut().for_each(|wi| *wi *= s);
            }
            for (acc, wi) in w_sum.iter_mut().zip(&w) {
                *acc += wi;
            }
            b_sum += b;
        }
        if let Some(tr) = trace.as_deref_mut() {
            tr.epoch_objectives
                .push(svm_objective(data, c, &averaged(&w_sum, b_sum, t)));
        }
    }
    let mut model = averaged(&w_sum, b_sum, t.max(1));
    model.bias = best_bias(data, &model.weights);
    if model.weights.iter().any(|v| !v.is_finite()) || !model.bias.is_finite() {
        return Err(Error::NonFinite("linear SVM diverged".into()));
    }
    Ok(model)
}

fn averaged(w_sum: &[f64], b_sum: f64, t: usize) -> LinearModel {
    let t = t as f64;
    LinearModel {
        weights: w_sum.iter().map(|v| v / t).collect(),
        bias: b_sum / t,
    }
}

/// Minimizes `Σ max(0, 1 − y (s + b))` over `b`. The optimum set is an
/// interval between breakpoints `y − s`; its midpoint is returned.
fn best_bias(data: &LabeledSet, w: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = data
        .rows()
        .iter()
        .zip(data.labels())
        .map(|(x, y)| (dot(w, x), y.sign()))
        .collect();
    let hinge = |b: f64| {
        pts.iter()
            .map(|&(s, y)| (1.0 - y * (s + b)).max(0.0))
            .sum::<f64>()
    };
    let mut breaks: Vec<f64> = pts.iter().map(|&(s, y)| y - s).collect();
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    let values: Vec<f64> = breaks.iter().map(|&b| hinge(b)).collect();
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = 1e-12 * min.abs().max(1.0);
    let lo = values
        .iter()
        .position(|&v| v <= min + tol)
        .expect("non-empty");
    let hi = values
        .iter()
        .rposition(|&v| v <= min + tol)
        .expect("non-empty");
    breaks[lo] + (breaks[hi] - breaks[lo]) / 2.0
}
