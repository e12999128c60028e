use serde::{Deserialize, Serialize};

use super::{Label, LabeledSet};
use crate::error::{Error, Result};

/// Stores the (standardized) training set; the score is the fraction of
/// malignant labels among the `k` nearest rows by Euclidean distance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<Label>,
}

pub fn fit_knn(data: &LabeledSet, k: usize) -> Result<KnnModel> {
    if k == 0 || k > data.len() {
        return Err(Error::invalid(format!(
            "K must be in 1..={}, got {k}",
            data.len()
        )));
    }
    Ok(KnnModel {
        k,
        rows: data.rows().to_vec(),
        labels: data.labels().to_vec(),
    })
}

impl KnnModel {
    /// Indices of the `k` nearest rows; equal distances go to the lower index.
    pub fn neighbors(&self, x: &[f64]) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum(), i))
            .collect();
        let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, by_dist);
            dist.truncate(self.k);
        }
        dist.sort_by(by_dist);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    pub fn score(&self, x: &[f64]) -> f64 {
        let pos = self
            .neighbors(x)
            .into_iter()
            .filter(|&i| self.labels[i].is_positive())
            .count();
        pos as f64 / self.k as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn points() -> LabeledSet {
        let pts = [
            (0.0, 0.0, -1),
            (1.0, 0.0, -1),
            (0.0, 1.0, -1),
            (1.0, 1.0, 1),
            (2.0, 2.0, 1),
            (3.0, 0.5, 1),
            (-1.0, 2.0, -1),
            (2.5, 2.5, 1),
            (0.5, 3.0, 1),
            (-2.0, -1.0, -1),
        ];
        LabeledSet::new(
            pts.iter().map(|&(x, y, _)| vec![x, y]).collect(),
            pts.iter()
                .map(|&(_, _, l)| Label::from_sign(l).unwrap())
                .collect(),
        )
        .unwrap()
    }

    fn oracle(data: &LabeledSet, k: usize, q: &[f64]) -> f64 {
        let mut all: Vec<(f64, usize)> = data
            .rows()
            .iter()
            .enumerate()
            .map(|(i, r)| (((r[0] - q[0]).powi(2) + (r[1] - q[1]).powi(2)).sqrt(), i))
            .collect();
        all.sort_by(|a, b| a.partial_cmp(b).unwrap());
        all[..k]
            .iter()
            .filter(|(_, i)| data.labels()[*i].is_positive())
            .count() as f64
            / k as f64
    }

    #[test]
    fn k1_recovers_training_labels() {
        let data = points();
        let m = fit_knn(&data, 1).unwrap();
        for (x, y) in data.rows().iter().zip(data.labels()) {
            let s = m.score(x);
            assert!(s == 0.0 || s == 1.0);
            assert_eq!(s == 1.0, y.is_positive());
        }
    }

    #[test]
    fn k5_matches_exhaustive_sort() {
        let data = points();
        let m = fit_knn(&data, 5).unwrap();
        for i in -4..=8 {
            for j in -4..=8 {
                let q = [i as f64 * 0.5, j as f64 * 0.5];
                assert_eq!(m.score(&q), oracle(&data, 5, &q), "query {q:?}");
            }
        }
    }

    #[test]
    fn k_equals_n_gives_prior() {
        let data = points();
        let m = fit_knn(&data, data.len()).unwrap();
        assert_eq!(m.score(&[100.0, -3.0]), 0.5);
        assert!(fit_knn(&data, data.len() + 1).is_err());
    }

    #[test]
    fn ties_prefer_lower_index() {
        let data = LabeledSet::new(
            vec![vec![1.0], vec![-1.0], vec![1.0]],
            vec![Label::Malignant, Label::Benign, Label::Benign],
        )
        .unwrap();
        let m = fit_knn(&data, 1).unwrap();
        assert_eq!(m.neighbors(&[0.0]), vec![0]);
        assert_eq!(m.score(&[0.0]), 1.0);
    }
}
