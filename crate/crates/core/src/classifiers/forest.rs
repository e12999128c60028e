use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::tree::{fit_decision_tree, Tree, TreeParams};
use super::LabeledSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ForestParams {
    pub trees: usize,
    pub depth: usize,
    /// Per-split feature sample size; `None` means `ceil(√d)`.
    pub max_features: Option<usize>,
    /// Draw a size-`n` bootstrap sample per tree. Disabling it trains every
    /// tree on the full set.
    pub bootstrap: bool,
}

impl ForestParams {
    pub fn new(trees: usize, depth: usize) -> Self {
        Self {
            trees,
            depth,
            max_features: None,
            bootstrap: true,
        }
    }
}

/// Score is the mean leaf malignant fraction across trees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<Tree>,
}

impl ForestModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        let sum: f64 = self.trees.iter().map(|t| t.positive_fraction(x)).sum();
        sum / self.trees.len() as f64
    }
}

/// Generator for tree `index`: one ChaCha stream per tree under `seed`.
pub(crate) fn tree_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn fit_random_forest(
    data: &LabeledSet,
    params: &ForestParams,
    seed: u64,
) -> Result<ForestModel> {
    if params.trees == 0 || params.depth == 0 {
        return Err(Error::invalid(
            "random forest needs at least one tree of depth >= 1",
        ));
    }
    let n = data.len();
    let max_features = params
        .max_features
        .unwrap_or_else(|| (data.dim() as f64).sqrt().ceil() as usize);
    let tree_params = TreeParams {
        max_depth: params.depth,
        max_features: Some(max_features),
    };
    let mut trees = Vec::with_capacity(params.trees);
    for t in 0..params.trees {
        let mut rng = tree_rng(seed, t);
        let weights = if params.bootstrap {
            let mut counts = vec![0.0; n];
            for _ in 0..n {
                counts[rng.random_range(0..n)] += 1.0;
            }
            counts
        } else {
            vec![1.0; n]
        };
        trees.push(fit_decision_tree(data, &weights, tree_params, &mut rng)?);
    }
    Ok(ForestModel { trees })
}
