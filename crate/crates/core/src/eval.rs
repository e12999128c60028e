//! Operating-point metrics and ROC analysis.

use serde::{Deserialize, Serialize};

use crate::classifiers::Label;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub fp: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fn_ + self.tn + self.fp
    }

    pub fn positives(&self) -> u64 {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> u64 {
        self.tn + self.fp
    }
}

pub fn confusion(truth: &[Label], predicted: &[Label]) -> Result<ConfusionCounts> {
    if truth.len() != predicted.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} predictions", truth.len()),
            actual: format!("{} predictions", predicted.len()),
        });
    }
    if truth.is_empty() {
        return Err(Error::invalid("confusion counts of an empty label set"));
    }
    let mut c = ConfusionCounts::default();
    for (t, p) in truth.iter().zip(predicted) {
        match (t, p) {
            (Label::Malignant, Label::Malignant) => c.tp += 1,
            (Label::Malignant, Label::Benign) => c.fn_ += 1,
            (Label::Benign, Label::Benign) => c.tn += 1,
            (Label::Benign, Label::Malignant) => c.fp += 1,
        }
    }
    Ok(c)
}

/// Confusion counts for integer labels, which must be -1 or +1.
pub fn confusion_from_signs(truth: &[i64], predicted: &[i64]) -> Result<ConfusionCounts> {
    let t = truth
        .iter()
        .map(|&v| Label::from_sign(v))
        .collect::<Result<Vec<_>>>()?;
    let p = predicted
        .iter()
        .map(|&v| Label::from_sign(v))
        .collect::<Result<Vec<_>>>()?;
    confusion(&t, &p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    /// Harmonic mean of sensitivity and specificity.
    pub f_measure: f64,
}

/// Sensitivity, specificity, accuracy and the Se/Sp harmonic mean.
pub fn metrics(c: &ConfusionCounts) -> Result<Metrics> {
    if c.positives() == 0 || c.negatives() == 0 {
        return Err(Error::UndefinedMetric(format!(
            "need both classes, got {} malignant and {} benign",
            c.positives(),
            c.negatives()
        )));
    }
    let se = c.tp as f64 / c.positives() as f64;
    let sp = c.tn as f64 / c.negatives() as f64;
    let accuracy = (c.tn + c.tp) as f64 / c.total() as f64;
    Ok(Metrics {
        sensitivity: se,
        specificity: sp,
        accuracy,
        f_measure: f_measure(se, sp),
    })
}

pub(crate) fn f_measure(se: f64, sp: f64) -> f64 {
    if se + sp == 0.0 {
        0.0
    } else {
        2.0 * (se * sp / (se + sp))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC points from `(0,0)` to `(1,1)`; `thresholds[i]` produced `points[i]`
/// under the rule `score >= threshold`. The first threshold is `+inf`.
#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub thresholds: Vec<f64>,
}

fn check_scored(scores: &[f64], truth: &[Label]) -> Result<(usize, usize)> {
    if scores.len() != truth.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} scores", truth.len()),
            actual: format!("{} scores", scores.len()),
        });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::NonFinite("classifier score".into()));
    }
    let pos = truth.iter().filter(|l| l.is_positive()).count();
    let neg = truth.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!(
            "ROC needs both classes, got {pos} malignant and {neg} benign"
        )));
    }
    Ok((pos, neg))
}

/// Sweeps the threshold down through the distinct scores; tied scores
/// enter together as one point.
pub fn roc_curve(scores: &[f64], truth: &[Label]) -> Result<RocCurve> {
    let (pos, neg) = check_scored(scores, truth)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint { fpr: 0.0, tpr: 0.0 }];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut k = 0;
    while k < order.len() {
        let s = scores[order[k]];
        while k < order.len() && scores[order[k]] == s {
            if truth[order[k]].is_positive() {
                tp += 1;
            } else {
                fp += 1;
            }
            k += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
        thresholds.push(s);
    }
    Ok(RocCurve { points, thresholds })
}

/// Trapezoidal area under the curve.
pub fn auc(roc: &RocCurve) -> f64 {
    roc.points
        .windows(2)
        .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
        .sum()
}
