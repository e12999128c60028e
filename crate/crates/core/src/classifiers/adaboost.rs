use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{fit_decision_tree, Tree, TreeParams};
use super::{label_for, LabeledSet};
use crate::error::{Error, Result};

pub const DEFAULT_ROUNDS: usize = 100;
const EPS_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoostRound {
    pub alpha: f64,
    pub tree: Tree,
}

/// Discrete AdaBoost ensemble; the score is `Σ α_t h_t(x)` with
/// `h_t(x) ∈ {−1, +1}`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AdaBoostModel {
    pub rounds: Vec<BoostRound>,
}

impl AdaBoostModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        self.rounds
            .iter()
            .map(|r| r.alpha * r.tree.predict(x).sign())
            .sum()
    }
}

/// Diagnostics of one boosting round.
#[derive(Debug, Clone, PartialEq)]
pub struct RoundRecord {
    /// Weighted error of the round's tree under the weights it was fit on.
    pub weighted_error: f64,
    pub alpha: f64,
    /// Weighted error of the same tree under the updated weights.
    pub post_update_error: f64,
    /// Sum of the updated weights.
    pub weight_sum: f64,
    /// Fraction of training rows misclassified by the ensemble so far
    /// (thresholded at zero).
    pub training_error: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct AdaBoostTrace {
    pub rounds: Vec<RoundRecord>,
}

impl AdaBoostTrace {
    /// `Π_t 2√(ε_t (1 − ε_t))` over the first `upto` rounds.
    pub fn error_bound(&self, upto: usize) -> f64 {
        self.rounds[..upto]
            .iter()
            .map(|r| 2.0 * (r.weighted_error * (1.0 - r.weighted_error)).sqrt())
            .product()
    }
}

/// Discrete AdaBoost with depth-`depth` trees for up to `rounds` rounds.
///
/// Stops early when a tree is no better than chance (`ε ≥ ½`, round
/// discarded) or perfect (`ε = 0`, round kept).
pub fn fit_adaboost(
    data: &LabeledSet,
    depth: usize,
    rounds: usize,
) -> Result<(AdaBoostModel, AdaBoostTrace)> {
    if depth == 0 || rounds == 0 {
        return Err(Error::invalid("AdaBoost needs depth >= 1 and rounds >= 1"));
    }
    let n = data.len();
    let y: Vec<f64> = data.labels().iter().map(|l| l.sign()).collect();
    let mut weights = vec![1.0 / n as f64; n];
    let mut ensemble = vec![0.0; n];
    let mut model = AdaBoostModel { rounds: Vec::new() };
    let mut trace = AdaBoostTrace::default();
    // Trees use every feature, so the generator is never consumed.
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let params = TreeParams {
        max_depth: depth,
        max_features: None,
    };

    for _ in 0..rounds {
        let tree = fit_decision_tree(data, &weights, params, &mut rng)?;
        let h: Vec<f64> = data.rows().iter().map(|x| tree.predict(x).sign()).collect();
        let err = weighted_error(&weights, &h, &y);
        if err >= 0.5 {
            break;
        }
        let clamped = err.clamp(EPS_CLAMP, 1.0 - EPS_CLAMP);
        let alpha = 0.5 * ((1.0 - clamped) / clamped).ln();

        for ((w, hi), yi) in weights.iter_mut().zip(&h).zip(&y) {
            *w *= (-alpha * yi * hi).exp();
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);

        for (f, hi) in ensemble.iter_mut().zip(&h) {
            *f += alpha * hi;
        }
        let wrong = ensemble
            .iter()
            .zip(data.labels())
            .filter(|(f, l)| label_for(**f, 0.0) != **l)
            .count();
        trace.rounds.push(RoundRecord {
            weighted_error: err,
            alpha,
            post_update_error: weighted_error(&weights, &h, &y),
            weight_sum: weights.iter().sum(),
            training_error: wrong as f64 / n as f64,
        });
        model.rounds.push(BoostRound { alpha, tree });
        if err == 0.0 {
            break;
        }
    }
    Ok((model, trace))
}

fn weighted_error(weights: &[f64], h: &[f64], y: &[f64]) -> f64 {
    weights
        .iter()
        .zip(h.iter().zip(y))
        .filter(|(_, (a, b))| a != b)
        .map(|(w, _)| w)
        .sum()
}
