//! C ABI for lungcad: load a trained model, extract nodule features from a
//! raw slice, score and label feature vectors, and compute metrics.
//!
//! Every function returns a [`LungcadStatus`]. On failure a description is
//! kept per thread and can be read with [`lungcad_last_error`].

use std::cell::RefCell;
use std::ffi::{CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use libc::c_char;
use lungcad::data::extract_nodule;
use lungcad::eval::{auc, metrics, roc_curve, ConfusionCounts};
use lungcad::imaging::{normalize_intensity, RawImage};
use lungcad::{Error, FeatureLayout, Label, Polygon, TrainedClassifier};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LungcadStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidInput = 2,
    Io = 3,
    Parse = 4,
    SchemaVersion = 5,
    DimensionMismatch = 6,
    EmptyMask = 7,
    UndefinedMetric = 8,
    NonFinite = 9,
    Panic = 10,
}

/// Opaque trained classifier.
pub struct LungcadModel {
    inner: TrainedClassifier,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct LungcadMetrics {
    pub sensitivity: f64,
    pub specificity: f64,
    pub accuracy: f64,
    pub f_measure: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> LungcadStatus {
    match err {
        Error::InvalidInput(_) => LungcadStatus::InvalidInput,
        Error::EmptyMask(_) => LungcadStatus::EmptyMask,
        Error::DimensionMismatch { .. } => LungcadStatus::DimensionMismatch,
        Error::UndefinedMetric(_) => LungcadStatus::UndefinedMetric,
        Error::NonFinite(_) => LungcadStatus::NonFinite,
        Error::SchemaVersion { .. } => LungcadStatus::SchemaVersion,
        Error::Io { .. } => LungcadStatus::Io,
        Error::Parse { .. } => LungcadStatus::Parse,
        Error::Context { source, .. } => status_of(source),
    }
}

enum Failure {
    Null(&'static str),
    Core(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Core(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> LungcadStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => LungcadStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is NULL"));
            LungcadStatus::NullPointer
        }
        Ok(Err(Failure::Core(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".into());
            LungcadStatus::Panic
        }
    }
}

/// # Safety
/// `p` must be NULL or point to `len` readable values.
unsafe fn slice<'a, T>(p: *const T, len: usize, what: &'static str) -> Result<&'a [T], Failure> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

/// # Safety
/// `p` must be NULL or a valid NUL-terminated string.
unsafe fn str_arg<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Core(Error::invalid(format!("{what} is not UTF-8"))))
}

fn out<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    // SAFETY: callers pass either NULL or a writable pointer per the API docs.
    unsafe { p.as_mut() }.ok_or(Failure::Null(what))
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next failing call on the same thread.
#[no_mangle]
pub extern "C" fn lungcad_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Length of the default feature vector (29).
#[no_mangle]
pub extern "C" fn lungcad_feature_len() -> usize {
    FeatureLayout::default().len()
}

/// Loads a model document from a file.
///
/// # Safety
/// `path` must be a NUL-terminated string; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lungcad_model_load(
    path: *const c_char,
    out_model: *mut *mut LungcadModel,
) -> LungcadStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let inner = TrainedClassifier::load(Path::new(str_arg(path, "path")?))?;
        *slot = Box::into_raw(Box::new(LungcadModel { inner }));
        Ok(())
    })
}

/// Parses a model document held in memory.
///
/// # Safety
/// `json` must be a NUL-terminated string; `out_model` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lungcad_model_from_json(
    json: *const c_char,
    out_model: *mut *mut LungcadModel,
) -> LungcadStatus {
    guard(|| {
        let slot = out(out_model, "out_model")?;
        let inner = TrainedClassifier::from_json(str_arg(json, "json")?)?;
        *slot = Box::into_raw(Box::new(LungcadModel { inner }));
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from `lungcad_model_load` /
/// `lungcad_model_from_json` that has not been freed.
#[no_mangle]
pub unsafe extern "C" fn lungcad_model_free(model: *mut LungcadModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}

/// # Safety
/// `model` must be a live handle; `out_dim` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lungcad_model_dim(
    model: *const LungcadModel,
    out_dim: *mut usize,
) -> LungcadStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        *out(out_dim, "out_dim")? = m.inner.standardizer.dim();
        Ok(())
    })
}

/// Decision threshold θ; may be ±infinity.
///
/// # Safety
/// `model` must be a live handle; `out_threshold` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lungcad_model_threshold(
    model: *const LungcadModel,
    out_threshold: *mut f64,
) -> LungcadStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        *out(out_threshold, "out_threshold")? = m.inner.threshold;
        Ok(())
    })
}

/// Scores one raw (unstandardized) feature vector.
///
/// # Safety
/// `model` must be a live handle, `features` must point to `len` values and
/// `out_score` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lungcad_model_score(
    model: *const LungcadModel,
    features: *const f64,
    len: usize,
    out_score: *mut f64,
) -> LungcadStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        let x = slice(features, len, "features")?;
        m.inner.check_dim(x.len())?;
        *out(out_score, "out_score")? = m.inner.score(x);
        Ok(())
    })
}

/// Labels one raw feature vector: `1` malignant, `-1` benign. The score is
/// also written when `out_score` is not NULL.
///
/// # Safety
/// As for `lungcad_model_score`; `out_label` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lungcad_model_predict(
    model: *const LungcadModel,
    features: *const f64,
    len: usize,
    out_label: *mut i32,
    out_score: *mut f64,
) -> LungcadStatus {
    guard(|| {
        let m = model.as_ref().ok_or(Failure::Null("model"))?;
        let x = slice(features, len, "features")?;
        m.inner.check_dim(x.len())?;
        let label_slot = out(out_label, "out_label")?;
        let score = m.inner.score(x);
        *label_slot = if score >= m.inner.threshold { 1 } else { -1 };
        if let Some(s) = out_score.as_mut() {
            *s = score;
        }
        Ok(())
    })
}

/// Extracts the 29 default features of one annotated nodule.
///
/// `pixels` holds `width * height` row-major raw samples in
/// `[0, source_max]`. The contours are concatenated `(x, y)` pairs in
/// `vertices_xy`; `vertex_counts[i]` is the number of vertices of contour
/// `i`. Their union forms the nodule mask.
///
/// # Safety
/// All pointers must reference buffers of the stated lengths;
/// `out_features` must hold `out_len` values.
#[no_mangle]
pub unsafe extern "C" fn lungcad_extract_features(
    pixels: *const u16,
    width: usize,
    height: usize,
    source_max: u32,
    spacing_x: f64,
    spacing_y: f64,
    vertices_xy: *const f64,
    vertex_counts: *const usize,
    n_contours: usize,
    margin: f64,
    out_features: *mut f64,
    out_len: usize,
) -> LungcadStatus {
    guard(|| {
        let n_pixels = width
            .checked_mul(height)
            .ok_or_else(|| Error::invalid("image dimensions overflow"))?;
        let samples = slice(pixels, n_pixels, "pixels")?;
        let counts = slice(vertex_counts, n_contours, "vertex_counts")?;
        let total: usize = counts.iter().sum();
        let coords = slice(vertices_xy, 2 * total, "vertices_xy")?;
        let layout = FeatureLayout::default();
        if out_len != layout.len() {
            return Err(Error::DimensionMismatch {
                expected: format!("{} output slots", layout.len()),
                actual: format!("{out_len} output slots"),
            }
            .into());
        }
        if out_features.is_null() {
            return Err(Failure::Null("out_features"));
        }
        let mut polygons = Vec::with_capacity(counts.len());
        let mut at = 0;
        for &n in counts {
            let verts = coords[2 * at..2 * (at + n)]
                .chunks_exact(2)
                .map(|p| (p[0], p[1]))
                .collect();
            polygons.push(Polygon::new(verts)?);
            at += n;
        }
        let raw = RawImage {
            width,
            height,
            samples: samples.iter().map(|&v| u32::from(v)).collect(),
            bit_depth: 16,
        };
        let img = normalize_intensity(&raw, source_max, spacing_x, spacing_y)?;
        let v = extract_nodule(&img, &polygons, margin, layout)?;
        std::slice::from_raw_parts_mut(out_features, out_len).copy_from_slice(&v.values);
        Ok(())
    })
}

/// Sensitivity, specificity, accuracy and F from confusion counts.
///
/// # Safety
/// `out_metrics` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lungcad_metrics(
    tp: u64,
    fn_: u64,
    tn: u64,
    fp: u64,
    out_metrics: *mut LungcadMetrics,
) -> LungcadStatus {
    guard(|| {
        let slot = out(out_metrics, "out_metrics")?;
        let m = metrics(&ConfusionCounts { tp, fn_, tn, fp })?;
        *slot = LungcadMetrics {
            sensitivity: m.sensitivity,
            specificity: m.specificity,
            accuracy: m.accuracy,
            f_measure: m.f_measure,
        };
        Ok(())
    })
}

/// Area under the ROC curve. `labels` holds `1` (malignant) or `-1`.
///
/// # Safety
/// `scores` and `labels` must point to `n` values; `out_auc` must be writable.
#[no_mangle]
pub unsafe extern "C" fn lungcad_auc(
    scores: *const f64,
    labels: *const i32,
    n: usize,
    out_auc: *mut f64,
) -> LungcadStatus {
    guard(|| {
        let slot = out(out_auc, "out_auc")?;
        let s = slice(scores, n, "scores")?;
        let truth = slice(labels, n, "labels")?
            .iter()
            .map(|&l| Label::from_sign(i64::from(l)))
            .collect::<Result<Vec<_>, Error>>()?;
        *slot = auc(&roc_curve(s, &truth)?);
        Ok(())
    })
}
