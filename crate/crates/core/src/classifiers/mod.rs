//! Five binary classifiers behind one score/threshold contract.
//!
//! Every family produces a continuous score `h(x)`; the label is malignant
//! iff `h(x) >= theta` where `theta` is tuned during model selection.
//! Models operate on standardized features; [`TrainedClassifier`] bundles
//! the standardizer so callers pass raw feature vectors.

mod adaboost;
mod forest;
mod knn;
mod logistic;
mod svm;
mod tree;

pub use adaboost::{
    fit_adaboost, AdaBoostModel, AdaBoostTrace, BoostRound, RoundRecord,
    DEFAULT_ROUNDS as ADABOOST_ROUNDS,
};
pub use forest::{fit_random_forest, ForestModel, ForestParams};
pub use knn::{fit_knn, KnnModel};
pub use logistic::{fit_logistic, LogisticObjective};
pub use svm::{fit_linear_svm, fit_linear_svm_traced, svm_objective, SvmTrace, SVM_EPOCHS};
pub use tree::{fit_decision_tree, Node, Tree, TreeParams};

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::Standardizer;

/// Ground-truth or predicted class. Benign is the negative class (-1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Benign,
    Malignant,
}

impl Label {
    pub fn sign(self) -> f64 {
        match self {
            Label::Benign => -1.0,
            Label::Malignant => 1.0,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Malignant
    }

    pub fn from_sign(v: i64) -> Result<Self> {
        match v {
            -1 => Ok(Label::Benign),
            1 => Ok(Label::Malignant),
            other => Err(Error::invalid(format!(
                "label must be -1 or +1, got {other}"
            ))),
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Label::Benign => Label::Malignant,
            Label::Malignant => Label::Benign,
        }
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Benign => -1,
            Label::Malignant => 1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = Error;

    fn try_from(v: i8) -> Result<Self> {
        Label::from_sign(i64::from(v))
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if self.is_positive() { "1" } else { "-1" })
    }
}

/// Feature rows with their labels.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSet {
    rows: Vec<Vec<f64>>,
    labels: Vec<Label>,
}

impl LabeledSet {
    pub fn new(rows: Vec<Vec<f64>>, labels: Vec<Label>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} labels", rows.len()),
                actual: format!("{} labels", labels.len()),
            });
        }
        if rows.is_empty() {
            return Err(Error::invalid("empty labeled set"));
        }
        let d = rows[0].len();
        if d == 0 {
            return Err(Error::invalid("feature rows must be non-empty"));
        }
        for (i, r) in rows.iter().enumerate() {
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: format!("{d} features"),
                    actual: format!("{} features in row {i}", r.len()),
                });
            }
            if r.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("feature row {i}")));
            }
        }
        Ok(Self { rows, labels })
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.rows
    }

    pub fn labels(&self) -> &[Label] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.rows[0].len()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|l| l.is_positive()).count()
    }

    pub fn subset(&self, indices: &[usize]) -> LabeledSet {
        LabeledSet {
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
        }
    }

    pub fn standardized(&self, s: &Standardizer) -> LabeledSet {
        LabeledSet {
            rows: self.rows.iter().map(|r| s.apply(r)).collect(),
            labels: self.labels.clone(),
        }
    }

    pub fn with_flipped_labels(&self) -> LabeledSet {
        LabeledSet {
            rows: self.rows.clone(),
            labels: self.labels.iter().map(|l| l.flipped()).collect(),
        }
    }

    pub(crate) fn require_both_classes(&self) -> Result<()> {
        let pos = self.positives();
        if pos == 0 || pos == self.len() {
            return Err(Error::invalid("training data must contain both classes"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Logreg,
    Linsvm,
    Knn,
    Adaboost,
    Rforest,
}

impl Family {
    pub const ALL: [Family; 5] = [
        Family::Logreg,
        Family::Linsvm,
        Family::Knn,
        Family::Adaboost,
        Family::Rforest,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Family::Logreg => "logreg",
            Family::Linsvm => "linsvm",
            Family::Knn => "knn",
            Family::Adaboost => "adaboost",
            Family::Rforest => "rforest",
        }
    }

    pub fn is_linear(self) -> bool {
        matches!(self, Family::Logreg | Family::Linsvm)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Family {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Family::ALL
            .into_iter()
            .find(|f| f.as_str() == s)
            .ok_or_else(|| Error::invalid(format!("unknown classifier family {s:?}")))
    }
}

fn default_rounds() -> usize {
    adaboost::DEFAULT_ROUNDS
}

/// Family and its hyperparameters. `C` is the inverse regularization
/// strength, `K` the neighbor count, `depth` the tree depth `D` and `trees`
/// the forest size `N`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "lowercase")]
pub enum Hyperparams {
    Logreg {
        c: f64,
    },
    Linsvm {
        c: f64,
    },
    Knn {
        k: usize,
    },
    Adaboost {
        depth: usize,
        #[serde(default = "default_rounds")]
        rounds: usize,
    },
    Rforest {
        trees: usize,
        depth: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassifierConfig {
    #[serde(flatten)]
    pub params: Hyperparams,
    #[serde(default)]
    pub seed: u64,
}

impl ClassifierConfig {
    pub fn new(params: Hyperparams) -> Self {
        Self { params, seed: 0 }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn family(&self) -> Family {
        match self.params {
            Hyperparams::Logreg { .. } => Family::Logreg,
            Hyperparams::Linsvm { .. } => Family::Linsvm,
            Hyperparams::Knn { .. } => Family::Knn,
            Hyperparams::Adaboost { .. } => Family::Adaboost,
            Hyperparams::Rforest { .. } => Family::Rforest,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self.params {
            Hyperparams::Logreg { c } | Hyperparams::Linsvm { c } => c > 0.0 && c.is_finite(),
            Hyperparams::Knn { k } => k >= 1,
            Hyperparams::Adaboost { depth, rounds } => depth >= 1 && rounds >= 1,
            Hyperparams::Rforest { trees, depth } => trees >= 1 && depth >= 1,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "invalid hyperparameters {}",
                self.describe()
            )))
        }
    }

    /// Compact `key=value` rendering used in tables and messages.
    pub fn describe(&self) -> String {
        match self.params {
            Hyperparams::Logreg { c } => format!("logreg C={c}"),
            Hyperparams::Linsvm { c } => format!("linsvm C={c}"),
            Hyperparams::Knn { k } => format!("knn K={k}"),
            Hyperparams::Adaboost { depth, rounds } => format!("adaboost D={depth} T={rounds}"),
            Hyperparams::Rforest { trees, depth } => format!("rforest D={depth} N={trees}"),
        }
    }

    /// Fits the family model on already standardized data.
    pub fn fit(&self, data: &LabeledSet) -> Result<Model> {
        self.validate()?;
        data.require_both_classes()?;
        Ok(match self.params {
            Hyperparams::Logreg { c } => Model::Linear(fit_logistic(data, c)?),
            Hyperparams::Linsvm { c } => Model::Linear(fit_linear_svm(data, c, self.seed)?),
            Hyperparams::Knn { k } => Model::Knn(fit_knn(data, k)?),
            Hyperparams::Adaboost { depth, rounds } => {
                Model::AdaBoost(fit_adaboost(data, depth, rounds)?.0)
            }
            Hyperparams::Rforest { trees, depth } => Model::Forest(fit_random_forest(
                data,
                &ForestParams::new(trees, depth),
                self.seed,
            )?),
        })
    }
}

/// Affine score `w·x + b`, shared by logistic regression and the linear SVM.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl LinearModel {
    pub fn score(&self, x: &[f64]) -> f64 {
        dot(&self.weights, x) + self.bias
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fitted family parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Linear(LinearModel),
    Knn(KnnModel),
    #[serde(rename = "adaboost")]
    AdaBoost(AdaBoostModel),
    Forest(ForestModel),
}

impl Model {
    /// Continuous malignancy score of a standardized feature vector.
    pub fn score(&self, x: &[f64]) -> f64 {
        match self {
            Model::Linear(m) => m.score(x),
            Model::Knn(m) => m.score(x),
            Model::AdaBoost(m) => m.score(x),
            Model::Forest(m) => m.score(x),
        }
    }
}

pub const MODEL_SCHEMA: u64 = 1;

/// A fitted model with its standardizer and decision threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedClassifier {
    pub config: ClassifierConfig,
    pub standardizer: Standardizer,
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub threshold: f64,
    pub model: Model,
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    schema: u64,
    family: Family,
    #[serde(flatten)]
    classifier: TrainedClassifier,
}

impl TrainedClassifier {
    pub fn family(&self) -> Family {
        self.config.family()
    }

    /// Score of a raw (unstandardized) feature vector.
    pub fn score(&self, x: &[f64]) -> f64 {
        self.model.score(&self.standardizer.apply(x))
    }

    /// Score of a vector already passed through this model's standardizer.
    pub fn score_standardized(&self, z: &[f64]) -> f64 {
        self.model.score(z)
    }

    pub fn predict(&self, x: &[f64]) -> Label {
        label_for(self.score(x), self.threshold)
    }

    pub fn check_dim(&self, d: usize) -> Result<()> {
        if d != self.standardizer.dim() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} features", self.standardizer.dim()),
                actual: format!("{d} features"),
            });
        }
        Ok(())
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            schema: MODEL_SCHEMA,
            family: self.family(),
            classifier: self.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let origin = Path::new("<model>");
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
        let schema = value
            .get("schema")
            .and_then(serde_json::Value::as_u64)
            .ok_or_else(|| Error::parse(origin, "missing model schema version"))?;
        if schema != MODEL_SCHEMA {
            return Err(Error::SchemaVersion {
                what: "model".into(),
                found: schema,
                expected: MODEL_SCHEMA,
            });
        }
        if value
            .get("threshold")
            .is_none_or(serde_json::Value::is_null)
        {
            return Err(Error::parse(origin, "model has no decision threshold"));
        }
        // Reparse the text; the Value round trip loses float bits.
        let doc: ModelDocument =
            serde_json::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
        if doc.family != doc.classifier.family() {
            return Err(Error::parse(
                origin,
                "family does not match hyperparameters",
            ));
        }
        Ok(doc.classifier)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text).map_err(|e| match e {
            Error::Parse { message, .. } => Error::parse(path, message),
            other => other.context(path.display().to_string()),
        })
    }
}

/// The thresholding rule: malignant iff `score >= threshold`.
#[inline]
pub fn label_for(score: f64, threshold: f64) -> Label {
    if score >= threshold {
        Label::Malignant
    } else {
        Label::Benign
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_signs() {
        assert_eq!(Label::from_sign(-1).unwrap(), Label::Benign);
        assert_eq!(Label::from_sign(1).unwrap(), Label::Malignant);
        assert!(Label::from_sign(0).is_err());
        assert_eq!(serde_json::to_string(&Label::Benign).unwrap(), "-1");
        assert_eq!(
            serde_json::from_str::<Label>("1").unwrap(),
            Label::Malignant
        );
    }

    #[test]
    fn config_json_shape() {
        let cfg = ClassifierConfig::new(Hyperparams::Rforest {
            trees: 40,
            depth: 25,
        })
        .with_seed(7);
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(
            text,
            r#"{"family":"rforest","trees":40,"depth":25,"seed":7}"#
        );
        let ada: ClassifierConfig =
            serde_json::from_str(r#"{"family":"adaboost","depth":5}"#).unwrap();
        assert_eq!(
            ada.params,
            Hyperparams::Adaboost {
                depth: 5,
                rounds: 100
            }
        );
        assert_eq!(ada.seed, 0);
    }

    #[test]
    fn invalid_hyperparameters() {
        assert!(ClassifierConfig::new(Hyperparams::Logreg { c: 0.0 })
            .validate()
            .is_err());
        assert!(ClassifierConfig::new(Hyperparams::Knn { k: 0 })
            .validate()
            .is_err());
        assert!(
            ClassifierConfig::new(Hyperparams::Rforest { trees: 0, depth: 3 })
                .validate()
                .is_err()
        );
    }

    #[test]
    fn threshold_rule() {
        assert_eq!(label_for(0.5, 0.5), Label::Malignant);
        assert_eq!(label_for(0.49, 0.5), Label::Benign);
        assert_eq!(label_for(1e300, f64::INFINITY), Label::Benign);
        assert_eq!(label_for(-1e300, f64::NEG_INFINITY), Label::Malignant);
    }

    #[test]
    fn labeled_set_validation() {
        assert!(LabeledSet::new(vec![vec![1.0]], vec![]).is_err());
        assert!(LabeledSet::new(vec![vec![1.0], vec![1.0, 2.0]], vec![Label::Benign; 2]).is_err());
        assert!(LabeledSet::new(vec![vec![f64::NAN]], vec![Label::Benign]).is_err());
        let one_class =
            LabeledSet::new(vec![vec![1.0], vec![2.0]], vec![Label::Benign; 2]).unwrap();
        assert!(ClassifierConfig::new(Hyperparams::Knn { k: 1 })
            .fit(&one_class)
            .is_err());
    }
}
