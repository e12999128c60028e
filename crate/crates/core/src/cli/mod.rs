//! Subcommand implementations behind the `lungcad` binary. Each command
//! reads its inputs from disk and writes its artifacts atomically.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::{ClassifierConfig, Family, Label, TrainedClassifier};
use crate::data::{
    generate_synthetic, load_manifest, split_train_test, write_synthetic, FeatureTable, SplitLevel,
};
use crate::error::{Error, Result, ResultExt};
use crate::eval::{auc, confusion, metrics, roc_curve, ConfusionCounts, Metrics, RocCurve};
use crate::features::FeatureLayout;
use crate::modelsel::{default_grid, grid_search, train_final, SearchResult};
use crate::serde_ext::fmt_f64;

pub const REPORT_SCHEMA: u64 = 1;
pub const BEST_SCHEMA: u64 = 1;
pub const DEFAULT_SEED: u64 = 42;
pub const DEFAULT_MARGIN: f64 = 0.05;
pub const DEFAULT_TRAIN_FRACTION: f64 = 0.65;
pub const DEFAULT_IMAGE_SIZE: usize = 64;

/// Per-stage seeds derived from the single user seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StageSeeds {
    pub synth: u64,
    pub split: u64,
    pub folds: u64,
    pub model: u64,
}

impl StageSeeds {
    pub fn from_seed(seed: u64) -> Self {
        Self {
            synth: seed,
            split: seed.wrapping_add(1),
            folds: seed.wrapping_add(2),
            model: seed.wrapping_add(3),
        }
    }
}

/// Writes through a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let name = path
        .file_name()
        .ok_or_else(|| Error::invalid("output path has no file name"))?;
    let tmp = dir.join(format!(
        ".{}.tmp{}",
        name.to_string_lossy(),
        std::process::id()
    ));
    let write = || -> std::io::Result<()> {
        let mut f = std::fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        std::fs::rename(&tmp, path)
    };
    write().map_err(|e| {
        let _ = std::fs::remove_file(&tmp);
        Error::io(path, e)
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text =
        serde_json::to_string_pretty(value).map_err(|e| Error::invalid(e.to_string()))?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

pub fn cmd_synth(
    out_dir: &Path,
    n_benign: usize,
    n_malignant: usize,
    image_size: usize,
    seed: u64,
) -> Result<PathBuf> {
    let ds = generate_synthetic(
        n_benign,
        n_malignant,
        image_size,
        StageSeeds::from_seed(seed).synth,
    )?;
    write_synthetic(&ds, out_dir)
}

/// One CSV row per labeled nodule, in manifest order.
pub fn cmd_extract(
    manifest: &Path,
    out: &Path,
    margin: f64,
    layout: FeatureLayout,
) -> Result<FeatureTable> {
    if layout.gray_bins == 0 || layout.gradient_bins == 0 {
        return Err(Error::invalid("bin counts must be positive"));
    }
    let ds = load_manifest(manifest)?;
    let mut table = FeatureTable::new(layout);
    for s in &ds.samples {
        table.push(s.nodule_id.clone(), s.extract(margin, layout)?)?;
    }
    write_atomic(out, table.to_csv().as_bytes())?;
    Ok(table)
}

/// Splits a feature table into `train.csv` and `test.csv`. Subject ids come
/// from the manifest; without one every row is its own subject.
pub fn cmd_split(
    features: &Path,
    manifest: Option<&Path>,
    out_dir: &Path,
    train_fraction: f64,
    level: SplitLevel,
    seed: u64,
) -> Result<(FeatureTable, FeatureTable)> {
    let table = FeatureTable::read(features)?;
    let labels = table
        .to_labeled_set()
        .context_with(|| features.display().to_string())?
        .labels()
        .to_vec();
    let subjects: Vec<String> = match manifest {
        Some(m) => {
            let ds = load_manifest(m)?;
            let by_id: std::collections::HashMap<&str, &str> = ds
                .samples
                .iter()
                .map(|s| (s.nodule_id.as_str(), s.subject_id.as_str()))
                .collect();
            table
                .ids
                .iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|s| s.to_string())
                        .ok_or_else(|| {
                            Error::invalid(format!("nodule {id} is not in the manifest"))
                        })
                })
                .collect::<Result<_>>()?
        }
        None => {
            if level == SplitLevel::Subject {
                return Err(Error::invalid("subject-level splits need --manifest"));
            }
            table.ids.clone()
        }
    };
    let (tr, te) = split_train_test(
        &labels,
        &subjects,
        train_fraction,
        StageSeeds::from_seed(seed).split,
        level,
    )?;
    let (train, test) = (table.subset(&tr), table.subset(&te));
    write_atomic(&out_dir.join("train.csv"), train.to_csv().as_bytes())?;
    write_atomic(&out_dir.join("test.csv"), test.to_csv().as_bytes())?;
    Ok((train, test))
}

/// Contents of `best.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BestChoice {
    pub schema: u64,
    pub config: ClassifierConfig,
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub threshold: f64,
    pub mean_f: f64,
    pub pooled_auc: f64,
    pub folds: usize,
}

impl BestChoice {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))?;
        match value.get("schema").and_then(serde_json::Value::as_u64) {
            Some(BEST_SCHEMA) => {}
            Some(found) => {
                return Err(Error::SchemaVersion {
                    what: "best.json".into(),
                    found,
                    expected: BEST_SCHEMA,
                })
            }
            None => return Err(Error::parse(path, "missing schema version")),
        }
        if value
            .get("threshold")
            .is_none_or(serde_json::Value::is_null)
        {
            return Err(Error::parse(path, "no decision threshold"));
        }
        serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
    }
}

/// Reads a JSON array of classifier configurations.
pub fn load_grid(path: &Path) -> Result<Vec<ClassifierConfig>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(path, e.to_string()))
}

pub fn cv_table_csv(result: &SearchResult) -> String {
    let mut out =
        String::from("family,config,seed,mean_f,std_f,pooled_f,pooled_auc,threshold,selected\n");
    for row in &result.table {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            row.config.family(),
            row.config.describe(),
            row.config.seed,
            fmt_f64(row.mean_f),
            fmt_f64(row.std_f),
            fmt_f64(row.pooled_f),
            fmt_f64(row.pooled_auc),
            fmt_f64(row.threshold),
            u8::from(row.config == result.best),
        );
    }
    out
}

/// Grid search on the training table; writes `cv_table.csv` and `best.json`.
/// Every candidate's seed is replaced by the derived model seed.
pub fn cmd_tune(
    train: &Path,
    family: Option<Family>,
    grid: Option<&Path>,
    folds: usize,
    seed: u64,
    out_dir: &Path,
) -> Result<SearchResult> {
    let seeds = StageSeeds::from_seed(seed);
    let candidates: Vec<ClassifierConfig> = match (grid, family) {
        (Some(g), fam) => {
            let all = load_grid(g)?;
            let kept: Vec<_> = all
                .into_iter()
                .filter(|c| fam.is_none_or(|f| c.family() == f))
                .map(|c| c.with_seed(seeds.model))
                .collect();
            if kept.is_empty() {
                return Err(Error::invalid(
                    "grid has no candidates for the requested family",
                ));
            }
            kept
        }
        (None, Some(f)) => default_grid(f, seeds.model),
        (None, None) => return Err(Error::invalid("tune needs --family or --grid")),
    };
    let data = FeatureTable::read(train)?.to_labeled_set()?;
    let result = grid_search(&candidates, &data, folds, seeds.folds)?;
    let row = result.best_row();
    let best = BestChoice {
        schema: BEST_SCHEMA,
        config: result.best.clone(),
        threshold: result.threshold,
        mean_f: row.mean_f,
        pooled_auc: row.pooled_auc,
        folds,
    };
    write_atomic(
        &out_dir.join("cv_table.csv"),
        cv_table_csv(&result).as_bytes(),
    )?;
    write_json(&out_dir.join("best.json"), &best)?;
    Ok(result)
}

/// Refits the selected configuration on the full training table.
pub fn cmd_train(train: &Path, best: &Path, out: &Path) -> Result<TrainedClassifier> {
    let choice = BestChoice::load(best)?;
    let data = FeatureTable::read(train)?.to_labeled_set()?;
    let model = train_final(&choice.config, choice.threshold, &data)?;
    let mut text = model.to_json()?;
    text.push('\n');
    write_atomic(out, text.as_bytes())?;
    Ok(model)
}

/// Contents of `report.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub schema: u64,
    pub family: Family,
    pub config: ClassifierConfig,
    #[serde(with = "crate::serde_ext::extended_f64")]
    pub threshold: f64,
    pub n_test: usize,
    pub confusion: ConfusionCounts,
    pub metrics: Metrics,
    pub auc: f64,
}

fn scored(model: &Path, features: &Path) -> Result<(TrainedClassifier, FeatureTable, Vec<f64>)> {
    let clf = TrainedClassifier::load(model)?;
    let table = FeatureTable::read(features)?;
    clf.check_dim(table.layout.len())?;
    let scores = table.rows.iter().map(|r| clf.score(r)).collect();
    Ok((clf, table, scores))
}

fn truth_of(table: &FeatureTable) -> Result<Vec<Label>> {
    Ok(table.to_labeled_set()?.labels().to_vec())
}

pub fn cmd_eval(model: &Path, test: &Path, out: &Path) -> Result<Report> {
    let (clf, table, scores) = scored(model, test)?;
    let truth = truth_of(&table)?;
    let predicted: Vec<Label> = scores
        .iter()
        .map(|&s| crate::classifiers::label_for(s, clf.threshold))
        .collect();
    let counts = confusion(&truth, &predicted)?;
    let report = Report {
        schema: REPORT_SCHEMA,
        family: clf.family(),
        config: clf.config.clone(),
        threshold: clf.threshold,
        n_test: truth.len(),
        confusion: counts,
        metrics: metrics(&counts)?,
        auc: auc(&roc_curve(&scores, &truth)?),
    };
    write_json(out, &report)?;
    Ok(report)
}

pub fn roc_csv(roc: &RocCurve) -> String {
    let mut out = String::from("threshold,fpr,tpr\n");
    for (t, p) in roc.thresholds.iter().zip(&roc.points) {
        let _ = writeln!(out, "{},{},{}", fmt_f64(*t), fmt_f64(p.fpr), fmt_f64(p.tpr));
    }
    let _ = writeln!(out, "auc,{},", fmt_f64(auc(roc)));
    out
}

pub fn cmd_roc(model: &Path, test: &Path, out: &Path) -> Result<RocCurve> {
    let (_, table, scores) = scored(model, test)?;
    let roc = roc_curve(&scores, &truth_of(&table)?)?;
    write_atomic(out, roc_csv(&roc).as_bytes())?;
    Ok(roc)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub id: String,
    pub score: f64,
    pub label: Label,
}

/// Scores every row; labels in the input are ignored.
pub fn cmd_predict(model: &Path, features: &Path, out: &Path) -> Result<Vec<Prediction>> {
    let (clf, table, scores) = scored(model, features)?;
    let preds: Vec<Prediction> = table
        .ids
        .iter()
        .zip(scores)
        .map(|(id, score)| Prediction {
            id: id.clone(),
            score,
            label: crate::classifiers::label_for(score, clf.threshold),
        })
        .collect();
    let mut text = String::from("id,score,label\n");
    for p in &preds {
        let _ = writeln!(text, "{},{},{}", p.id, fmt_f64(p.score), p.label);
    }
    write_atomic(out, text.as_bytes())?;
    Ok(preds)
}
