use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifiers::Label;
use crate::error::{Error, Result, ResultExt};
use crate::features::{extract_features, FeatureLayout, FeatureVector};
use crate::imaging::{
    crop_with_margin, normalize_intensity, rasterize_polygon, read_image, union_masks, GrayImage,
    Mask, Polygon,
};

pub const MANIFEST_SCHEMA: u64 = 1;

/// On-disk manifest: one entry per annotated nodule slice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub schema: u64,
    pub entries: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub nodule_id: String,
    pub subject_id: String,
    /// Image path, relative to the manifest's directory unless absolute.
    pub image: PathBuf,
    pub spacing_x: f64,
    pub spacing_y: f64,
    /// Overrides the storage full-scale value (255 or 65535).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_max: Option<u32>,
    /// One closed contour per annotating radiologist, `[col, row]` vertices.
    pub polygons: Vec<Vec<[f64; 2]>>,
    /// 0 unknown, 1 benign, 2 primary malignant, 3 metastatic malignant.
    pub diagnosis: u8,
}

/// A labeled nodule ready for feature extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct NoduleSample {
    pub nodule_id: String,
    pub subject_id: String,
    pub image_path: PathBuf,
    pub spacing_x: f64,
    pub spacing_y: f64,
    pub source_max: Option<u32>,
    pub polygons: Vec<Polygon>,
    pub label: Label,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub samples: Vec<NoduleSample>,
    /// Entries with diagnosis 0 that were skipped.
    pub dropped_unknown: usize,
}

impl Dataset {
    pub fn labels(&self) -> Vec<Label> {
        self.samples.iter().map(|s| s.label).collect()
    }
}

fn label_for_diagnosis(code: u8) -> Result<Option<Label>> {
    match code {
        0 => Ok(None),
        1 => Ok(Some(Label::Benign)),
        2 | 3 => Ok(Some(Label::Malignant)),
        other => Err(Error::invalid(format!("unknown diagnosis code {other}"))),
    }
}

fn valid_id(id: &str) -> bool {
    !id.is_empty() && !id.contains([',', '"', '\n', '\r'])
}

pub fn load_manifest(path: &Path) -> Result<Dataset> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_manifest(&text, base).map_err(|e| match e {
        Error::Parse { message, .. } => Error::parse(path, message),
        other => other.context(path.display().to_string()),
    })
}

/// Validates a manifest document; image paths resolve against `base_dir`.
pub fn parse_manifest(text: &str, base_dir: &Path) -> Result<Dataset> {
    let origin = Path::new("<manifest>");
    let value: serde_json::Value =
        serde_json::from_str(text).map_err(|e| Error::parse(origin, e.to_string()))?;
    match value.get("schema").and_then(serde_json::Value::as_u64) {
        Some(MANIFEST_SCHEMA) => {}
        Some(found) => {
            return Err(Error::SchemaVersion {
                what: "manifest".into(),
                found,
                expected: MANIFEST_SCHEMA,
            })
        }
        None => return Err(Error::parse(origin, "missing manifest schema version")),
    }
    let manifest: Manifest =
        serde_json::from_value(value).map_err(|e| Error::parse(origin, e.to_string()))?;

    let mut seen = HashSet::new();
    let mut samples = Vec::new();
    let mut dropped_unknown = 0;
    for entry in manifest.entries {
        let id = entry.nodule_id.clone();
        let sample =
            entry_to_sample(entry, base_dir, &mut seen).context_with(|| format!("nodule {id}"))?;
        match sample {
            Some(s) => samples.push(s),
            None => dropped_unknown += 1,
        }
    }
    Ok(Dataset {
        samples,
        dropped_unknown,
    })
}

fn entry_to_sample(
    entry: ManifestEntry,
    base_dir: &Path,
    seen: &mut HashSet<String>,
) -> Result<Option<NoduleSample>> {
    if !valid_id(&entry.nodule_id) || !valid_id(&entry.subject_id) {
        return Err(Error::invalid(
            "ids must be non-empty and free of commas, quotes and newlines",
        ));
    }
    if !seen.insert(entry.nodule_id.clone()) {
        return Err(Error::invalid("duplicate nodule id"));
    }
    if !(entry.spacing_x > 0.0 && entry.spacing_y > 0.0)
        || !entry.spacing_x.is_finite()
        || !entry.spacing_y.is_finite()
    {
        return Err(Error::invalid("pixel spacing must be positive"));
    }
    if entry.source_max == Some(0) {
        return Err(Error::invalid("source_max must be positive"));
    }
    let label = label_for_diagnosis(entry.diagnosis)?;
    if entry.polygons.is_empty() {
        return Err(Error::invalid(
            "at least one annotation polygon is required",
        ));
    }
    let polygons = entry
        .polygons
        .into_iter()
        .map(|p| Polygon::new(p.into_iter().map(|[x, y]| (x, y)).collect()))
        .collect::<Result<Vec<_>>>()?;
    let Some(label) = label else {
        return Ok(None);
    };
    let image_path = if entry.image.is_absolute() {
        entry.image
    } else {
        base_dir.join(entry.image)
    };
    if !image_path.is_file() {
        return Err(Error::io(
            &image_path,
            std::io::Error::new(std::io::ErrorKind::NotFound, "image file not found"),
        ));
    }
    Ok(Some(NoduleSample {
        nodule_id: entry.nodule_id,
        subject_id: entry.subject_id,
        image_path,
        spacing_x: entry.spacing_x,
        spacing_y: entry.spacing_y,
        source_max: entry.source_max,
        polygons,
        label,
    }))
}

impl NoduleSample {
    /// Reads and normalizes the slice.
    pub fn load_image(&self) -> Result<GrayImage> {
        let raw = read_image(&self.image_path)?;
        let source_max = self.source_max.unwrap_or_else(|| raw.default_source_max());
        normalize_intensity(&raw, source_max, self.spacing_x, self.spacing_y)
    }

    /// Image → mask → ROI → feature vector, labeled.
    pub fn extract(&self, margin: f64, layout: FeatureLayout) -> Result<FeatureVector> {
        let run = || {
            let img = self.load_image()?;
            let mut v = extract_nodule(&img, &self.polygons, margin, layout)?;
            v.label = Some(self.label);
            Ok(v)
        };
        run().context_with(|| format!("nodule {}", self.nodule_id))
    }
}

/// Union of the rasterized annotator contours.
pub fn annotation_mask(polygons: &[Polygon], width: usize, height: usize) -> Result<Mask> {
    let masks = polygons
        .iter()
        .map(|p| {
            if !p.within(width, height) {
                return Err(Error::invalid(format!(
                    "annotation polygon leaves the {width}x{height} image"
                )));
            }
            rasterize_polygon(p, width, height)
        })
        .collect::<Result<Vec<_>>>()?;
    union_masks(&masks)
}

/// Features of one annotated nodule in a normalized slice.
pub fn extract_nodule(
    img: &GrayImage,
    polygons: &[Polygon],
    margin: f64,
    layout: FeatureLayout,
) -> Result<FeatureVector> {
    let mask = annotation_mask(polygons, img.width(), img.height())?;
    let roi = crop_with_margin(img, &mask, margin)?;
    extract_features(&mask, &roi, layout)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::imaging::write_pgm;

    fn entry(id: &str, diagnosis: u8) -> serde_json::Value {
        serde_json::json!({
            "nodule_id": id,
            "subject_id": format!("S-{id}"),
            "image": "img.pgm",
            "spacing_x": 0.7,
            "spacing_y": 0.7,
            "polygons": [[[1.0, 1.0], [6.0, 1.0], [6.0, 6.0], [1.0, 6.0]]],
            "diagnosis": diagnosis
        })
    }

    fn doc(entries: Vec<serde_json::Value>) -> String {
        serde_json::json!({ "schema": 1, "entries": entries }).to_string()
    }

    fn dir_with_image() -> tempfile::TempDir {
        let dir = tempfile::tempdir().unwrap();
        let pixels: Vec<u8> = (0..64).map(|i| (i * 4) as u8).collect();
        write_pgm(&dir.path().join("img.pgm"), 8, 8, &pixels).unwrap();
        dir
    }

    #[test]
    fn diagnosis_mapping_drops_unknown() {
        let dir = dir_with_image();
        let text = doc(vec![
            entry("a", 0),
            entry("b", 1),
            entry("c", 2),
            entry("d", 3),
        ]);
        let ds = parse_manifest(&text, dir.path()).unwrap();
        assert_eq!(ds.samples.len(), 3);
        assert_eq!(ds.dropped_unknown, 1);
        assert_eq!(
            ds.labels(),
            vec![Label::Benign, Label::Malignant, Label::Malignant]
        );
    }

    #[test]
    fn table_one_counts() {
        let dir = dir_with_image();
        let mut entries: Vec<_> = (0..107).map(|i| entry(&format!("b{i}"), 1)).collect();
        entries.extend((0..458).map(|i| entry(&format!("m{i}"), 2 + (i % 2) as u8)));
        entries.extend((0..74).map(|i| entry(&format!("u{i}"), 0)));
        let ds = parse_manifest(&doc(entries), dir.path()).unwrap();
        assert_eq!(ds.samples.len(), 565);
        assert_eq!(ds.dropped_unknown, 74);
    }

    #[test]
    fn rejects_bad_entries() {
        let dir = dir_with_image();
        let err = parse_manifest(&doc(vec![entry("a", 7)]), dir.path()).unwrap_err();
        assert!(err.to_string().contains("nodule a"), "{err}");
        assert!(parse_manifest(&doc(vec![entry("a", 1), entry("a", 2)]), dir.path()).is_err());

        let mut bad = entry("a", 1);
        bad["polygons"] = serde_json::json!([[[1.0, 1.0], [2.0, 2.0]]]);
        assert!(parse_manifest(&doc(vec![bad]), dir.path()).is_err());

        let mut missing = entry("a", 1);
        missing["image"] = serde_json::json!("nope.pgm");
        assert!(matches!(
            parse_manifest(&doc(vec![missing]), dir.path()),
            Err(Error::Context { .. })
        ));

        let v2 = serde_json::json!({ "schema": 2, "entries": [] }).to_string();
        assert!(matches!(
            parse_manifest(&v2, dir.path()),
            Err(Error::SchemaVersion { .. })
        ));
    }

    #[test]
    fn extract_from_manifest() {
        let dir = dir_with_image();
        let ds = parse_manifest(&doc(vec![entry("a", 2)]), dir.path()).unwrap();
        let v = ds.samples[0]
            .extract(0.05, FeatureLayout::default())
            .unwrap();
        assert_eq!(v.values.len(), 29);
        assert_eq!(v.label, Some(Label::Malignant));
        // 6x6 pixel square at 0.7 mm.
        assert!((v.values[2] - 36.0 * 0.49).abs() < 1e-12);
    }

    #[test]
    fn polygon_outside_image_names_nodule() {
        let dir = dir_with_image();
        let mut e = entry("far", 1);
        e["polygons"] = serde_json::json!([[[1.0, 1.0], [20.0, 1.0], [20.0, 6.0]]]);
        let ds = parse_manifest(&doc(vec![e]), dir.path()).unwrap();
        let err = ds.samples[0]
            .extract(0.05, FeatureLayout::default())
            .unwrap_err();
        assert!(err.to_string().contains("nodule far"));
    }
}
