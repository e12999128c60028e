//! The heterogeneous nodule descriptor: geometry, gray-level histogram and
//! global oriented gradient histogram, plus training-set standardization.

use serde::{Deserialize, Serialize};

use crate::classifiers::Label;
use crate::error::{Error, Result};
use crate::imaging::{boundary_pixels, GrayImage, Mask, INTENSITY_RANGE};

pub const GEOMETRIC_LEN: usize = 4;
pub const DEFAULT_GRAY_BINS: usize = 16;
pub const DEFAULT_GRADIENT_BINS: usize = 9;
pub const DEFAULT_FEATURE_LEN: usize = GEOMETRIC_LEN + DEFAULT_GRAY_BINS + DEFAULT_GRADIENT_BINS;

/// Physical shape measurements of a nodule mask.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricFeatures {
    /// Feret diameter in mm.
    pub diameter: f64,
    /// Bounding-box height over width, in mm.
    pub aspect_ratio: f64,
    /// mm².
    pub area: f64,
    /// mm, boundary pixel count times the mean pixel pitch.
    pub perimeter: f64,
}

impl GeometricFeatures {
    pub fn to_array(&self) -> [f64; GEOMETRIC_LEN] {
        [self.diameter, self.aspect_ratio, self.area, self.perimeter]
    }
}

pub fn geometric_features(
    mask: &Mask,
    spacing_x: f64,
    spacing_y: f64,
) -> Result<GeometricFeatures> {
    if !(spacing_x > 0.0 && spacing_y > 0.0) {
        return Err(Error::invalid("pixel spacing must be positive"));
    }
    let bb = mask
        .bounding_box()
        .ok_or_else(|| Error::EmptyMask("geometric features of an empty mask".into()))?;
    let boundary = boundary_pixels(mask);
    let pitch = (spacing_x + spacing_y) / 2.0;

    let mut max_d2 = 0.0f64;
    for (i, &(c0, r0)) in boundary.iter().enumerate() {
        for &(c1, r1) in &boundary[i + 1..] {
            let dx = (c0 as f64 - c1 as f64) * spacing_x;
            let dy = (r0 as f64 - r1 as f64) * spacing_y;
            max_d2 = max_d2.max(dx * dx + dy * dy);
        }
    }
    // A single-pixel nodule still spans one pixel pitch.
    let diameter = if max_d2 > 0.0 { max_d2.sqrt() } else { pitch };

    Ok(GeometricFeatures {
        diameter,
        aspect_ratio: (bb.height() as f64 * spacing_y) / (bb.width() as f64 * spacing_x),
        area: mask.count() as f64 * spacing_x * spacing_y,
        perimeter: boundary.len() as f64 * pitch,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistogramKind {
    Gray,
    Gradient,
}

/// L1-normalized histogram. Only gradient histograms may be all zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: Vec<f64>,
    pub kind: HistogramKind,
}

fn l1_normalize(bins: &mut [f64]) {
    let total: f64 = bins.iter().sum();
    if total > 0.0 {
        bins.iter_mut().for_each(|b| *b /= total);
    }
}

/// Fixed-range intensity histogram: pixel `v` lands in `floor(v * bins / 256)`.
pub fn gray_histogram(img: &GrayImage, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    let mut counts = vec![0.0; bins];
    for &v in img.pixels() {
        let idx = ((v * bins as f64 / INTENSITY_RANGE).floor() as usize).min(bins - 1);
        counts[idx] += 1.0;
    }
    l1_normalize(&mut counts);
    Ok(Histogram {
        bins: counts,
        kind: HistogramKind::Gray,
    })
}

/// Per-pixel gradient by central differences, borders replicated.
pub(crate) fn gradient_at(img: &GrayImage, col: usize, row: usize) -> (f64, f64) {
    let (w, h) = (img.width(), img.height());
    let left = img.get(col.saturating_sub(1), row);
    let right = img.get((col + 1).min(w - 1), row);
    let up = img.get(col, row.saturating_sub(1));
    let down = img.get(col, (row + 1).min(h - 1));
    ((right - left) / 2.0, (down - up) / 2.0)
}

/// Unsigned orientation in degrees, folded into `[0, 180)`.
pub(crate) fn unsigned_orientation(gx: f64, gy: f64) -> f64 {
    let mut phi = gy.atan2(gx).to_degrees();
    if phi < 0.0 {
        phi += 180.0;
    }
    if phi >= 180.0 {
        phi -= 180.0;
    }
    phi
}

/// One global, contrast-insensitive histogram of gradient orientations over
/// the whole image, weighted by gradient magnitude.
pub fn oriented_gradient_histogram(img: &GrayImage, bins: usize) -> Result<Histogram> {
    if bins == 0 {
        return Err(Error::invalid("histogram needs at least one bin"));
    }
    if img.width() < 2 || img.height() < 2 {
        return Err(Error::invalid(format!(
            "gradient histogram needs at least 2x2 pixels, got {}x{}",
            img.width(),
            img.height()
        )));
    }
    let mut mass = vec![0.0; bins];
    for row in 0..img.height() {
        for col in 0..img.width() {
            let (gx, gy) = gradient_at(img, col, row);
            let m = gx.hypot(gy);
            if m == 0.0 {
                continue;
            }
            let phi = unsigned_orientation(gx, gy);
            let idx = ((phi * bins as f64 / 180.0).floor() as usize) % bins;
            mass[idx] += m;
        }
    }
    l1_normalize(&mut mass);
    Ok(Histogram {
        bins: mass,
        kind: HistogramKind::Gradient,
    })
}

/// Bin counts of each block of the feature vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureLayout {
    pub gray_bins: usize,
    pub gradient_bins: usize,
}

impl Default for FeatureLayout {
    fn default() -> Self {
        Self {
            gray_bins: DEFAULT_GRAY_BINS,
            gradient_bins: DEFAULT_GRADIENT_BINS,
        }
    }
}

impl FeatureLayout {
    pub fn len(&self) -> usize {
        GEOMETRIC_LEN + self.gray_bins + self.gradient_bins
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// CSV column names in vector order.
    pub fn column_names(&self) -> Vec<String> {
        let mut names: Vec<String> = ["f_diam_mm", "f_aspect", "f_area_mm2", "f_perim_mm"]
            .map(String::from)
            .to_vec();
        names.extend((0..self.gray_bins).map(|i| format!("f_gh_{i:02}")));
        names.extend((0..self.gradient_bins).map(|i| format!("f_ogh_{i:02}")));
        names
    }

    /// Recovers the layout from CSV feature column names.
    pub fn from_column_names<S: AsRef<str>>(names: &[S]) -> Result<Self> {
        let gray_bins = names
            .iter()
            .filter(|n| n.as_ref().starts_with("f_gh_"))
            .count();
        let gradient_bins = names
            .iter()
            .filter(|n| n.as_ref().starts_with("f_ogh_"))
            .count();
        let layout = Self {
            gray_bins,
            gradient_bins,
        };
        let expected = layout.column_names();
        if names.len() != expected.len()
            || names.iter().zip(&expected).any(|(a, b)| a.as_ref() != b)
        {
            return Err(Error::invalid(format!(
                "feature columns do not match the expected header {}",
                expected.join(",")
            )));
        }
        Ok(layout)
    }
}

/// Ordered `[diameter, aspect, area, perimeter | gray bins | gradient bins]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub label: Option<Label>,
}

/// Concatenates the three blocks in the default 4 + 16 + 9 layout.
pub fn assemble_feature_vector(
    geo: &GeometricFeatures,
    gray: &Histogram,
    gradient: &Histogram,
) -> Result<FeatureVector> {
    assemble_with_layout(FeatureLayout::default(), geo, gray, gradient)
}

pub fn assemble_with_layout(
    layout: FeatureLayout,
    geo: &GeometricFeatures,
    gray: &Histogram,
    gradient: &Histogram,
) -> Result<FeatureVector> {
    if gray.kind != HistogramKind::Gray || gray.bins.len() != layout.gray_bins {
        return Err(Error::DimensionMismatch {
            expected: format!("gray histogram with {} bins", layout.gray_bins),
            actual: format!("{:?} histogram with {} bins", gray.kind, gray.bins.len()),
        });
    }
    if gradient.kind != HistogramKind::Gradient || gradient.bins.len() != layout.gradient_bins {
        return Err(Error::DimensionMismatch {
            expected: format!("gradient histogram with {} bins", layout.gradient_bins),
            actual: format!(
                "{:?} histogram with {} bins",
                gradient.kind,
                gradient.bins.len()
            ),
        });
    }
    let mut values = Vec::with_capacity(layout.len());
    values.extend_from_slice(&geo.to_array());
    values.extend_from_slice(&gray.bins);
    values.extend_from_slice(&gradient.bins);
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("feature vector entry".into()));
    }
    Ok(FeatureVector {
        values,
        label: None,
    })
}

/// Full feature extraction for one nodule: geometry from the mask, both
/// histograms from the cropped ROI.
pub fn extract_features(
    mask: &Mask,
    roi: &GrayImage,
    layout: FeatureLayout,
) -> Result<FeatureVector> {
    let geo = geometric_features(mask, roi.spacing_x(), roi.spacing_y())?;
    let gray = gray_histogram(roi, layout.gray_bins)?;
    let grad = oriented_gradient_histogram(roi, layout.gradient_bins)?;
    assemble_with_layout(layout, &geo, &gray, &grad)
}

/// Per-column affine map to zero mean and unit population variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

const MIN_STD: f64 = 1e-12;

impl Standardizer {
    pub fn dim(&self) -> usize {
        self.means.len()
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        v.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| (x - m) / s)
            .collect()
    }

    pub fn invert(&self, z: &[f64]) -> Vec<f64> {
        z.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(x, (m, s))| x * s + m)
            .collect()
    }
}

pub fn fit_standardizer(rows: &[Vec<f64>]) -> Result<Standardizer> {
    if rows.len() < 2 {
        return Err(Error::invalid(format!(
            "standardizer needs at least 2 rows, got {}",
            rows.len()
        )));
    }
    let d = rows[0].len();
    if let Some(r) = rows.iter().find(|r| r.len() != d) {
        return Err(Error::DimensionMismatch {
            expected: format!("{d} columns"),
            actual: format!("{} columns", r.len()),
        });
    }
    let n = rows.len() as f64;
    let mut means = vec![0.0; d];
    for r in rows {
        for (m, x) in means.iter_mut().zip(r) {
            *m += x;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut stds = vec![0.0; d];
    for r in rows {
        for ((s, x), m) in stds.iter_mut().zip(r).zip(&means) {
            *s += (x - m) * (x - m);
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
        if s.is_nan() || *s < MIN_STD {
            *s = 1.0;
        }
    }
    Ok(Standardizer { means, stds })
}

pub fn apply_standardizer(s: &Standardizer, v: &FeatureVector) -> Result<FeatureVector> {
    if v.values.len() != s.dim() {
        return Err(Error::DimensionMismatch {
            expected: format!("{} features", s.dim()),
            actual: format!("{} features", v.values.len()),
        });
    }
    Ok(FeatureVector {
        values: s.apply(&v.values),
        label: v.label,
    })
}
