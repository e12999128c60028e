use std::collections::BTreeMap;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::classifiers::Label;
use crate::error::{Error, Result};

const MAX_ATTEMPTS: u64 = 100;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SplitLevel {
    /// Stratified per class, individual slices.
    #[default]
    Slice,
    /// Whole subjects go to one side.
    Subject,
}

impl FromStr for SplitLevel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "slice" => Ok(SplitLevel::Slice),
            "subject" => Ok(SplitLevel::Subject),
            other => Err(Error::invalid(format!("unknown split level {other:?}"))),
        }
    }
}

/// Returns ascending `(train, test)` index lists. Each side must end up with
/// both classes; the split is retried with `seed + 1, seed + 2, …` up to 100
/// times before giving up.
pub fn split_train_test(
    labels: &[Label],
    subjects: &[String],
    train_fraction: f64,
    seed: u64,
    level: SplitLevel,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    if subjects.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} subject ids", labels.len()),
            actual: format!("{} subject ids", subjects.len()),
        });
    }
    for attempt in 0..MAX_ATTEMPTS {
        let s = seed.wrapping_add(attempt);
        let train = match level {
            SplitLevel::Slice => slice_split(labels, train_fraction, s),
            SplitLevel::Subject => subject_split(labels, subjects, train_fraction, s),
        };
        let mut in_train = vec![false; labels.len()];
        train.iter().for_each(|&i| in_train[i] = true);
        let (mut tr, mut te): (Vec<usize>, Vec<usize>) =
            (0..labels.len()).partition(|&i| in_train[i]);
        tr.sort_unstable();
        te.sort_unstable();
        if both_classes(labels, &tr) && both_classes(labels, &te) {
            return Ok((tr, te));
        }
    }
    Err(Error::invalid(format!(
        "could not split with both classes on each side after {MAX_ATTEMPTS} attempts"
    )))
}

fn both_classes(labels: &[Label], idx: &[usize]) -> bool {
    let pos = idx.iter().filter(|&&i| labels[i].is_positive()).count();
    pos > 0 && pos < idx.len()
}

/// `floor(fraction * n_c)` samples of each class go to training.
fn slice_split(labels: &[Label], fraction: f64, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut train = Vec::new();
    for class in [Label::Malignant, Label::Benign] {
        let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        members.shuffle(&mut rng);
        let take = (fraction * members.len() as f64 + 1e-9).floor() as usize;
        train.extend_from_slice(&members[..take]);
    }
    train
}

/// Visits subjects in seeded order and sends each to training when that
/// moves the per-class training counts closer to their targets.
fn subject_split(labels: &[Label], subjects: &[String], fraction: f64, seed: u64) -> Vec<usize> {
    let mut groups: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, s) in subjects.iter().enumerate() {
        groups.entry(s.as_str()).or_default().push(i);
    }
    let mut order: Vec<&Vec<usize>> = groups.values().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);

    let total_pos = labels.iter().filter(|l| l.is_positive()).count() as f64;
    let target = [
        fraction * total_pos,
        fraction * (labels.len() as f64 - total_pos),
    ];
    let mut have = [0.0, 0.0];
    let mut train = Vec::new();
    for members in order {
        let pos = members.iter().filter(|&&i| labels[i].is_positive()).count() as f64;
        let add = [pos, members.len() as f64 - pos];
        let before: f64 = (0..2).map(|c| (have[c] - target[c]).abs()).sum();
        let after: f64 = (0..2).map(|c| (have[c] + add[c] - target[c]).abs()).sum();
        if after < before {
            have[0] += add[0];
            have[1] += add[1];
            train.extend_from_slice(members);
        }
    }
    train
}
