//! Stratified k-fold cross-validation, grid search, threshold tuning and
//! final retraining.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifiers::{
    label_for, ClassifierConfig, Family, Hyperparams, Label, LabeledSet, TrainedClassifier,
    ADABOOST_ROUNDS,
};
use crate::error::{Error, Result, ResultExt};
use crate::eval::{auc, confusion, f_measure, metrics, roc_curve};
use crate::features::{fit_standardizer, Standardizer};

pub const DEFAULT_FOLDS: usize = 5;

/// Fold membership of every sample.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub k: usize,
    pub assignments: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
}

impl FoldPlan {
    pub fn validation(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] == fold)
            .collect()
    }

    pub fn training(&self, fold: usize) -> Vec<usize> {
        (0..self.assignments.len())
            .filter(|&i| self.assignments[i] != fold)
            .collect()
    }
}

/// Stratified split: each class is shuffled with `seed` and dealt round-robin
/// into the folds, the second class continuing where the first stopped so
/// that fold sizes also differ by at most one.
pub fn kfold_split(labels: &[Label], k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {k}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignments = vec![0; labels.len()];
    let mut offset = 0;
    for class in [Label::Malignant, Label::Benign] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if members.len() < k {
            return Err(Error::invalid(format!(
                "class {class} has {} samples, fewer than {k} folds",
                members.len()
            )));
        }
        members.shuffle(&mut rng);
        for (j, &i) in members.iter().enumerate() {
            assignments[i] = (offset + j) % k;
        }
        offset = (offset + members.len()) % k;
    }
    Ok(FoldPlan {
        k,
        assignments,
        seed,
        stratified: true,
    })
}

/// Candidate thresholds in ascending order: `-inf`, the midpoints between
/// consecutive distinct scores, `+inf`.
pub fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut distinct = scores.to_vec();
    distinct.sort_by(f64::total_cmp);
    distinct.dedup();
    let mut out = Vec::with_capacity(distinct.len() + 1);
    out.push(f64::NEG_INFINITY);
    for w in distinct.windows(2) {
        let mid = w[0] + (w[1] - w[0]) / 2.0;
        // Adjacent floats: the midpoint may round onto the lower score.
        out.push(if mid > w[0] { mid } else { w[1] });
    }
    out.push(f64::INFINITY);
    out
}

/// Threshold maximizing the Se/Sp F-measure of `score >= θ` over
/// [`threshold_candidates`]; ties go to the smallest θ.
pub fn tune_threshold(scores: &[f64], truth: &[Label]) -> Result<f64> {
    // Validates lengths, finiteness and class presence.
    roc_curve(scores, truth)?;
    let pos = truth.iter().filter(|l| l.is_positive()).count() as f64;
    let neg = truth.len() as f64 - pos;

    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let candidates = threshold_candidates(scores);

    // Walk candidates upward; `below` counts samples already predicted benign.
    let (mut fn_, mut tn) = (0.0, 0.0);
    let mut k = 0;
    let mut best = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for &theta in &candidates {
        while k < order.len() && scores[order[k]] < theta {
            if truth[order[k]].is_positive() {
                fn_ += 1.0;
            } else {
                tn += 1.0;
            }
            k += 1;
        }
        let f = f_measure((pos - fn_) / pos, tn / neg);
        if f > best.1 {
            best = (theta, f);
        }
    }
    Ok(best.0)
}

/// Out-of-fold evaluation of one candidate.
#[derive(Debug, Clone)]
pub struct CvOutcome {
    /// Validation score of every training sample, in sample order.
    pub pooled_scores: Vec<f64>,
    /// Standardizer fitted on each fold's training part.
    pub fold_standardizers: Vec<Standardizer>,
    /// Threshold tuned on the pooled scores.
    pub threshold: f64,
    /// F-measure of each validation fold at the pooled threshold.
    pub fold_f: Vec<f64>,
    pub pooled_f: f64,
    pub pooled_auc: f64,
}

impl CvOutcome {
    pub fn mean_f(&self) -> f64 {
        self.fold_f.iter().sum::<f64>() / self.fold_f.len() as f64
    }

    /// Population standard deviation of the per-fold F-measures.
    pub fn std_f(&self) -> f64 {
        let m = self.mean_f();
        (self.fold_f.iter().map(|f| (f - m) * (f - m)).sum::<f64>() / self.fold_f.len() as f64)
            .sqrt()
    }
}

fn fold_scores(
    config: &ClassifierConfig,
    data: &LabeledSet,
    plan: &FoldPlan,
    fold: usize,
) -> Result<(Standardizer, Vec<(usize, f64)>)> {
    let train_idx = plan.training(fold);
    let valid_idx = plan.validation(fold);
    let train = data.subset(&train_idx);
    let standardizer = fit_standardizer(train.rows())?;
    let model = config.fit(&train.standardized(&standardizer))?;
    let scores = valid_idx
        .iter()
        .map(|&i| (i, model.score(&standardizer.apply(&data.rows()[i]))))
        .collect();
    Ok((standardizer, scores))
}

pub fn cross_validate(
    config: &ClassifierConfig,
    data: &LabeledSet,
    plan: &FoldPlan,
) -> Result<CvOutcome> {
    if plan.assignments.len() != data.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("fold plan over {} samples", data.len()),
            actual: format!("{} assignments", plan.assignments.len()),
        });
    }
    let mut pooled = vec![f64::NAN; data.len()];
    let mut fold_standardizers = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let (s, scores) = fold_scores(config, data, plan, fold)
            .context_with(|| format!("{} fold {fold}", config.describe()))?;
        fold_standardizers.push(s);
        for (i, v) in scores {
            pooled[i] = v;
        }
    }
    let threshold = tune_threshold(&pooled, data.labels())
        .context_with(|| format!("{} threshold tuning", config.describe()))?;

    let mut fold_f = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let idx = plan.validation(fold);
        let truth: Vec<Label> = idx.iter().map(|&i| data.labels()[i]).collect();
        let pred: Vec<Label> = idx
            .iter()
            .map(|&i| label_for(pooled[i], threshold))
            .collect();
        let m = confusion(&truth, &pred)
            .and_then(|c| metrics(&c))
            .context_with(|| format!("{} fold {fold}", config.describe()))?;
        fold_f.push(m.f_measure);
    }
    let pred: Vec<Label> = pooled.iter().map(|&s| label_for(s, threshold)).collect();
    let pooled_f = metrics(&confusion(data.labels(), &pred)?)?.f_measure;
    let pooled_auc = auc(&roc_curve(&pooled, data.labels())?);
    Ok(CvOutcome {
        pooled_scores: pooled,
        fold_standardizers,
        threshold,
        fold_f,
        pooled_f,
        pooled_auc,
    })
}

/// One line of the cross-validation table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvRow {
    pub config: ClassifierConfig,
    pub mean_f: f64,
    pub std_f: f64,
    pub pooled_f: f64,
    pub pooled_auc: f64,
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchResult {
    pub best: ClassifierConfig,
    pub threshold: f64,
    pub table: Vec<CvRow>,
}

impl SearchResult {
    pub fn best_row(&self) -> &CvRow {
        self.table
            .iter()
            .find(|r| r.config == self.best)
            .expect("best candidate is in the table")
    }
}

/// Cross-validates every candidate on the same stratified folds and keeps
/// the one with the highest mean fold F-measure (first wins on ties).
/// Candidates run in parallel; the table keeps grid order.
pub fn grid_search(
    grid: &[ClassifierConfig],
    train: &LabeledSet,
    k: usize,
    seed: u64,
) -> Result<SearchResult> {
    if grid.is_empty() {
        return Err(Error::invalid("empty hyperparameter grid"));
    }
    for c in grid {
        c.validate()?;
    }
    let plan = kfold_split(train.labels(), k, seed)?;
    let outcomes: Vec<CvOutcome> = grid
        .par_iter()
        .map(|c| cross_validate(c, train, &plan))
        .collect::<Result<_>>()?;

    let table: Vec<CvRow> = grid
        .iter()
        .zip(&outcomes)
        .map(|(c, o)| CvRow {
            config: c.clone(),
            mean_f: o.mean_f(),
            std_f: o.std_f(),
            pooled_f: o.pooled_f,
            pooled_auc: o.pooled_auc,
            threshold: o.threshold,
        })
        .collect();
    let mut best = 0;
    for (i, row) in table.iter().enumerate().skip(1) {
        if row.mean_f > table[best].mean_f {
            best = i;
        }
    }
    Ok(SearchResult {
        best: table[best].config.clone(),
        threshold: table[best].threshold,
        table,
    })
}

/// Refits standardizer and model on the whole training set and attaches the
/// cross-validated threshold.
pub fn train_final(
    config: &ClassifierConfig,
    threshold: f64,
    train: &LabeledSet,
) -> Result<TrainedClassifier> {
    if threshold.is_nan() {
        return Err(Error::invalid("decision threshold is NaN"));
    }
    let standardizer = fit_standardizer(train.rows())?;
    let model = config.fit(&train.standardized(&standardizer))?;
    Ok(TrainedClassifier {
        config: config.clone(),
        standardizer,
        threshold,
        model,
    })
}

/// Search grid per family. It includes the settings that work well on
/// the LIDC-IDRI diagnostic subset (C=2 / C=0.25 / K=5 / D=5 / D=25,N=40).
pub fn default_grid(family: Family, seed: u64) -> Vec<ClassifierConfig> {
    let params: Vec<Hyperparams> = match family {
        Family::Logreg => [0.25, 0.5, 1.0, 2.0, 4.0]
            .map(|c| Hyperparams::Logreg { c })
            .to_vec(),
        Family::Linsvm => [0.0625, 0.125, 0.25, 0.5, 1.0, 2.0]
            .map(|c| Hyperparams::Linsvm { c })
            .to_vec(),
        Family::Knn => [1, 3, 5, 7, 9].map(|k| Hyperparams::Knn { k }).to_vec(),
        Family::Adaboost => [1, 2, 3, 5, 7]
            .map(|depth| Hyperparams::Adaboost {
                depth,
                rounds: ADABOOST_ROUNDS,
            })
            .to_vec(),
        Family::Rforest => [5, 10, 25, 40]
            .into_iter()
            .flat_map(|depth| [10, 20, 40, 80].map(|trees| Hyperparams::Rforest { trees, depth }))
            .collect(),
    };
    params
        .into_iter()
        .map(|p| ClassifierConfig::new(p).with_seed(seed))
        .collect()
}
