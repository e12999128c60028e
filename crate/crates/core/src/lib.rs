//! Benign/malignant lung nodule classification from annotated CT slices.
//!
//! The pipeline has three stages:
//!
//! 1. [`imaging`]: normalize a slice to `[0, 256)`, rasterize the radiologist
//!    contours into a nodule mask (union over annotators) and crop a
//!    rectangular ROI with a small background margin.
//! 2. [`features`]: a 29-dimensional heterogeneous vector made of four
//!    geometric measurements (diameter, aspect ratio, area, perimeter), a
//!    16-bin gray-level histogram and a 9-bin contrast-insensitive oriented
//!    gradient histogram.
//! 3. [`classifiers`]: logistic regression, linear SVM, K-NN, discrete
//!    AdaBoost and random forest, all sharing a score-then-threshold contract.
//!
//! [`modelsel`] runs stratified k-fold grid search and threshold tuning,
//! [`eval`] computes sensitivity/specificity/accuracy/F-measure and ROC/AUC,
//! and [`data`] loads JSON manifests and generates synthetic nodule datasets.
//! The [`cli`] module backs the `lungcad` binary.

pub mod classifiers;
pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod features;
pub mod imaging;
pub mod modelsel;
pub(crate) mod serde_ext;

pub use classifiers::{ClassifierConfig, Hyperparams, Label, LabeledSet, TrainedClassifier};
pub use error::{Error, Result};
pub use eval::{ConfusionCounts, Metrics, RocCurve};
pub use features::{FeatureLayout, FeatureVector, GeometricFeatures, Histogram, Standardizer};
pub use imaging::{GrayImage, Mask, Polygon};
