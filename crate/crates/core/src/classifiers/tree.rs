//! Weighted-Gini CART tree, the base learner of both ensembles.

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Label, LabeledSet};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        /// Weighted fraction of malignant samples that reached the leaf.
        positive_fraction: f64,
        label: Label,
    },
    /// Rows with `x[feature] <= threshold` go left.
    Split {
        feature: usize,
        threshold: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tree {
    pub root: Node,
}

impl Tree {
    fn leaf(&self, x: &[f64]) -> (f64, Label) {
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf {
                    positive_fraction,
                    label,
                } => return (*positive_fraction, *label),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if x[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        self.leaf(x).1
    }

    pub fn positive_fraction(&self, x: &[f64]) -> f64 {
        self.leaf(x).0
    }

    pub fn depth(&self) -> usize {
        fn depth(n: &Node) -> usize {
            match n {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + depth(left).max(depth(right)),
            }
        }
        depth(&self.root)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TreeParams {
    pub max_depth: usize,
    /// Features drawn without replacement at every split; `None` uses all.
    pub max_features: Option<usize>,
}

/// Gains smaller than this fraction of the node weight count as no gain.
const GAIN_TOL: f64 = 1e-12;

/// Greedy tree on axis-aligned midpoint thresholds minimizing weighted Gini
/// impurity. Samples with zero weight are ignored. Equal gains keep the
/// lowest feature index, then the lowest threshold.
pub fn fit_decision_tree<R: Rng + ?Sized>(
    data: &LabeledSet,
    weights: &[f64],
    params: TreeParams,
    rng: &mut R,
) -> Result<Tree> {
    if weights.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} weights", data.len()),
            actual: format!("{} weights", weights.len()),
        });
    }
    if weights
        .iter()
        .any(|w| w.is_nan() || *w < 0.0 || w.is_infinite())
    {
        return Err(Error::invalid(
            "sample weights must be finite and non-negative",
        ));
    }
    let indices: Vec<usize> = (0..data.len()).filter(|&i| weights[i] > 0.0).collect();
    if indices.is_empty() {
        return Err(Error::invalid("all sample weights are zero"));
    }
    let mut builder = Builder {
        data,
        weights,
        params,
        rng,
    };
    Ok(Tree {
        root: builder.build(indices, 0),
    })
}

struct Builder<'a, R: ?Sized> {
    data: &'a LabeledSet,
    weights: &'a [f64],
    params: TreeParams,
    rng: &'a mut R,
}

#[derive(Clone, Copy)]
struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

/// `W · gini` for class weights `(p, n)`, i.e. `2pn / (p + n)`.
#[inline]
fn weighted_gini(pos: f64, neg: f64) -> f64 {
    let total = pos + neg;
    if total > 0.0 {
        2.0 * pos * neg / total
    } else {
        0.0
    }
}

impl<R: Rng + ?Sized> Builder<'_, R> {
    fn class_weights(&self, indices: &[usize]) -> (f64, f64) {
        indices.iter().fold((0.0, 0.0), |(p, n), &i| {
            if self.data.labels()[i].is_positive() {
                (p + self.weights[i], n)
            } else {
                (p, n + self.weights[i])
            }
        })
    }

    fn build(&mut self, indices: Vec<usize>, depth: usize) -> Node {
        let (pos, neg) = self.class_weights(&indices);
        if depth >= self.params.max_depth || pos == 0.0 || neg == 0.0 {
            return leaf(pos, neg);
        }
        let Some(split) = self.best_split(&indices, pos, neg) else {
            return leaf(pos, neg);
        };
        let (left, right): (Vec<usize>, Vec<usize>) = indices
            .into_iter()
            .partition(|&i| self.data.rows()[i][split.feature] <= split.threshold);
        Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left: Box::new(self.build(left, depth + 1)),
            right: Box::new(self.build(right, depth + 1)),
        }
    }

    fn candidate_features(&mut self) -> Vec<usize> {
        let d = self.data.dim();
        match self.params.max_features {
            Some(m) if m < d => {
                let mut f = index::sample(self.rng, d, m.max(1)).into_vec();
                f.sort_unstable();
                f
            }
            _ => (0..d).collect(),
        }
    }

    fn best_split(&mut self, indices: &[usize], pos: f64, neg: f64) -> Option<Split> {
        let parent = weighted_gini(pos, neg);
        let tol = GAIN_TOL * (pos + neg);
        let rows = self.data.rows();
        let labels = self.data.labels();
        let mut best: Option<Split> = None;
        let mut order = indices.to_vec();

        for feature in self.candidate_features() {
            order.sort_by(|&a, &b| {
                rows[a][feature]
                    .total_cmp(&rows[b][feature])
                    .then(a.cmp(&b))
            });
            let (mut lp, mut ln) = (0.0, 0.0);
            for k in 0..order.len() - 1 {
                let i = order[k];
                if labels[i].is_positive() {
                    lp += self.weights[i];
                } else {
                    ln += self.weights[i];
                }
                let (v, next) = (rows[i][feature], rows[order[k + 1]][feature]);
                if v == next {
                    continue;
                }
                let gain = parent - weighted_gini(lp, ln) - weighted_gini(pos - lp, neg - ln);
                let better = match best {
                    None => gain > tol,
                    Some(b) => gain > b.gain + tol,
                };
                if better {
                    best = Some(Split {
                        feature,
                        threshold: v + (next - v) / 2.0,
                        gain,
                    });
                }
            }
        }
        best
    }
}

fn leaf(pos: f64, neg: f64) -> Node {
    let total = pos + neg;
    Node::Leaf {
        positive_fraction: if total > 0.0 { pos / total } else { 0.5 },
        label: if pos >= neg {
            Label::Malignant
        } else {
            Label::Benign
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn set(rows: Vec<Vec<f64>>, labels: &[i64]) -> LabeledSet {
        LabeledSet::new(
            rows,
            labels
                .iter()
                .map(|&l| Label::from_sign(l).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn all(depth: usize) -> TreeParams {
        TreeParams {
            max_depth: depth,
            max_features: None,
        }
    }

    #[test]
    fn pure_data_is_a_leaf() {
        let data = set(vec![vec![1.0], vec![2.0], vec![3.0]], &[1, 1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = fit_decision_tree(&data, &[1.0; 3], all(5), &mut rng).unwrap();
        assert_eq!(tree.depth(), 0);
        assert_eq!(tree.predict(&[0.0]), Label::Malignant);
        assert_eq!(tree.positive_fraction(&[0.0]), 1.0);
    }

    #[test]
    fn balanced_xor_has_no_impurity_reducing_split() {
        let data = set(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
            ],
            &[-1, -1, 1, 1],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = fit_decision_tree(&data, &[1.0; 4], all(2), &mut rng).unwrap();
        assert_eq!(tree.depth(), 0);
    }

    #[test]
    fn depth_two_shatters_weighted_xor() {
        let data = set(
            vec![
                vec![0.0, 0.0],
                vec![1.0, 1.0],
                vec![0.0, 1.0],
                vec![1.0, 0.0],
            ],
            &[-1, -1, 1, 1],
        );
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let tree = fit_decision_tree(&data, &[1.0, 1.0, 1.0, 2.0], all(2), &mut rng).unwrap();
        assert_eq!(tree.depth(), 2);
        for (x, y) in data.rows().iter().zip(data.labels()) {
            assert_eq!(tree.predict(x), *y);
        }
    }

    #[test]
    fn zero_weights_rejected() {
        let data = set(vec![vec![0.0], vec![1.0]], &[-1, 1]);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(fit_decision_tree(&data, &[0.0, 0.0], all(1), &mut rng).is_err());
        assert!(fit_decision_tree(&data, &[1.0], all(1), &mut rng).is_err());
    }

    /// Exhaustive stump search written independently of the sweep.
    fn stump_oracle(data: &LabeledSet, w: &[f64]) -> Option<(usize, f64)> {
        let gini = |idx: &[usize]| {
            let p: f64 = idx
                .iter()
                .filter(|&&i| data.labels()[i].is_positive())
                .map(|&i| w[i])
                .sum();
            let t: f64 = idx.iter().map(|&i| w[i]).sum();
            if t == 0.0 {
                0.0
            } else {
                t * (1.0 - (p / t).powi(2) - ((t - p) / t).powi(2))
            }
        };
        let all: Vec<usize> = (0..data.len()).collect();
        let parent = gini(&all);
        let total: f64 = w.iter().sum();
        let mut best: Option<(usize, f64, f64)> = None;
        for f in 0..data.dim() {
            let mut vals: Vec<f64> = data.rows().iter().map(|r| r[f]).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            for pair in vals.windows(2) {
                let thr = pair[0] + (pair[1] - pair[0]) / 2.0;
                let (l, r): (Vec<usize>, Vec<usize>) =
                    all.iter().partition(|&&i| data.rows()[i][f] <= thr);
                let gain = parent - gini(&l) - gini(&r);
                let better = match best {
                    None => gain > 1e-12 * total,
                    Some((_, _, g)) => gain > g + 1e-12 * total,
                };
                if better {
                    best = Some((f, thr, gain));
                }
            }
        }
        best.map(|(f, t, _)| (f, t))
    }

    #[test]
    fn stump_matches_exhaustive_search() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for trial in 0..200 {
            let n = rng.random_range(3..14);
            let d = rng.random_range(1..4);
            // Coarse integer grid so duplicate values and gain ties occur.
            let rows: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..d).map(|_| rng.random_range(0..5) as f64).collect())
                .collect();
            let labels: Vec<i64> = (0..n)
                .map(|_| if rng.random_bool(0.5) { 1 } else { -1 })
                .collect();
            if labels.iter().all(|&l| l == labels[0]) {
                continue;
            }
            let w: Vec<f64> = if trial % 2 == 0 {
                vec![1.0; n]
            } else {
                (0..n).map(|_| rng.random_range(0.1..2.0)).collect()
            };
            let data = set(rows, &labels);
            let tree = fit_decision_tree(&data, &w, all(1), &mut rng).unwrap();
            let got = match tree.root {
                Node::Split {
                    feature, threshold, ..
                } => Some((feature, threshold)),
                Node::Leaf { .. } => None,
            };
            assert_eq!(got, stump_oracle(&data, &w), "trial {trial}");
        }
    }

    #[test]
    fn feature_subsampling_is_seeded() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let rows: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..10).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let labels: Vec<i64> = rows
            .iter()
            .map(|r| if r[3] + r[7] > 0.0 { 1 } else { -1 })
            .collect();
        let data = set(rows, &labels);
        let params = TreeParams {
            max_depth: 6,
            max_features: Some(3),
        };
        let a = fit_decision_tree(&data, &[1.0; 40], params, &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        let b = fit_decision_tree(&data, &[1.0; 40], params, &mut ChaCha8Rng::seed_from_u64(9))
            .unwrap();
        assert_eq!(a, b);
        assert!(a.depth() <= 6);
    }
}
