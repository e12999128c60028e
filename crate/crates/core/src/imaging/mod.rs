//! Grayscale CT slices, radiologist annotations, nodule masks and ROI crops.

mod io;
mod raster;

pub use io::{read_image, write_pgm, RawImage};
pub use raster::rasterize_polygon;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Upper (exclusive) bound of normalized intensities.
pub const INTENSITY_RANGE: f64 = 256.0;

/// A slice normalized to `[0, 256)` with physical pixel spacing in mm.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
    spacing_x: f64,
    spacing_y: f64,
}

impl GrayImage {
    pub fn new(
        width: usize,
        height: usize,
        pixels: Vec<f64>,
        spacing_x: f64,
        spacing_y: f64,
    ) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        if pixels.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} pixels", width * height),
                actual: format!("{} pixels", pixels.len()),
            });
        }
        if !(spacing_x > 0.0 && spacing_y > 0.0) || !spacing_x.is_finite() || !spacing_y.is_finite()
        {
            return Err(Error::invalid(format!(
                "pixel spacing must be positive, got ({spacing_x}, {spacing_y})"
            )));
        }
        if let Some(v) = pixels
            .iter()
            .find(|v| !(**v >= 0.0 && **v < INTENSITY_RANGE))
        {
            return Err(Error::invalid(format!("pixel value {v} outside [0, 256)")));
        }
        Ok(Self {
            width,
            height,
            pixels,
            spacing_x,
            spacing_y,
        })
    }

    /// Builds an image from a closure evaluated at `(col, row)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        spacing_x: f64,
        spacing_y: f64,
        f: impl Fn(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                pixels.push(f(col, row));
            }
        }
        Self::new(width, height, pixels, spacing_x, spacing_y)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn spacing_x(&self) -> f64 {
        self.spacing_x
    }

    pub fn spacing_y(&self) -> f64 {
        self.spacing_y
    }

    /// Row-major pixel values.
    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }
}

/// Maps raw scanner values in `[0, source_max]` to `[0, 256)` as
/// `raw * 256 / (source_max + 1)`.
pub fn normalize_intensity(
    raw: &RawImage,
    source_max: u32,
    spacing_x: f64,
    spacing_y: f64,
) -> Result<GrayImage> {
    if source_max == 0 {
        return Err(Error::invalid("source_max must be positive"));
    }
    let scale = INTENSITY_RANGE / (f64::from(source_max) + 1.0);
    let mut pixels = Vec::with_capacity(raw.samples.len());
    for &v in &raw.samples {
        if v > source_max {
            return Err(Error::invalid(format!(
                "raw value {v} exceeds declared maximum {source_max}"
            )));
        }
        pixels.push((f64::from(v) * scale).clamp(0.0, INTENSITY_RANGE.next_down()));
    }
    GrayImage::new(raw.width, raw.height, pixels, spacing_x, spacing_y)
}

/// Closed annotation contour in `(col, row)` pixel coordinates. Pixel
/// centers sit at integer coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Polygon {
    vertices: Vec<(f64, f64)>,
}

impl Polygon {
    pub fn new(vertices: Vec<(f64, f64)>) -> Result<Self> {
        if vertices.len() < 3 {
            return Err(Error::invalid(format!(
                "polygon needs at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices
            .iter()
            .any(|(x, y)| !x.is_finite() || !y.is_finite())
        {
            return Err(Error::NonFinite("polygon vertex".into()));
        }
        Ok(Self { vertices })
    }

    pub fn vertices(&self) -> &[(f64, f64)] {
        &self.vertices
    }

    /// Shoelace area in square pixels (unsigned).
    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        let twice: f64 = (0..n)
            .map(|i| {
                let (x0, y0) = self.vertices[i];
                let (x1, y1) = self.vertices[(i + 1) % n];
                x0 * y1 - x1 * y0
            })
            .sum();
        twice.abs() / 2.0
    }

    /// True when all vertices are collinear, so the enclosed region has no
    /// area under any fill rule.
    pub fn is_degenerate(&self) -> bool {
        let (x0, y0) = self.vertices[0];
        let far = self
            .vertices
            .iter()
            .copied()
            .max_by(|a, b| {
                let da = (a.0 - x0).hypot(a.1 - y0);
                let db = (b.0 - x0).hypot(b.1 - y0);
                da.total_cmp(&db)
            })
            .expect("polygon has vertices");
        let (dx, dy) = (far.0 - x0, far.1 - y0);
        let len = dx.hypot(dy);
        if len == 0.0 {
            return true;
        }
        self.vertices
            .iter()
            .all(|&(x, y)| ((x - x0) * dy - (y - y0) * dx).abs() <= 1e-12 * len * len)
    }

    /// True when every vertex lies inside `[0, width-1] x [0, height-1]`.
    pub fn within(&self, width: usize, height: usize) -> bool {
        let (w, h) = (width as f64 - 1.0, height as f64 - 1.0);
        self.vertices
            .iter()
            .all(|&(x, y)| (0.0..=w).contains(&x) && (0.0..=h).contains(&y))
    }
}

/// Binary nodule mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Mask {
    width: usize,
    height: usize,
    bits: Vec<bool>,
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelRect {
    pub col_min: usize,
    pub row_min: usize,
    pub col_max: usize,
    pub row_max: usize,
}

impl PixelRect {
    pub fn width(&self) -> usize {
        self.col_max - self.col_min + 1
    }

    pub fn height(&self) -> usize {
        self.row_max - self.row_min + 1
    }
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<bool>) -> Result<Self> {
        if bits.len() != width * height {
            return Err(Error::DimensionMismatch {
                expected: format!("{} bits", width * height),
                actual: format!("{} bits", bits.len()),
            });
        }
        Ok(Self {
            width,
            height,
            bits,
        })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut mask = Self::new(width, height);
        for row in 0..height {
            for col in 0..width {
                mask.bits[row * width + col] = f(col, row);
            }
        }
        mask
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> bool {
        self.bits[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, col: usize, row: usize, value: bool) {
        self.bits[row * self.width + col] = value;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|b| *b)
    }

    /// `(col, row)` of every true pixel in row-major order.
    pub fn true_pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, b)| **b)
            .map(move |(i, _)| (i % self.width, i / self.width))
    }

    /// Tight bounding box of the true pixels, `None` for an empty mask.
    pub fn bounding_box(&self) -> Option<PixelRect> {
        let mut rect: Option<PixelRect> = None;
        for (col, row) in self.true_pixels() {
            rect = Some(match rect {
                None => PixelRect {
                    col_min: col,
                    row_min: row,
                    col_max: col,
                    row_max: row,
                },
                Some(r) => PixelRect {
                    col_min: r.col_min.min(col),
                    row_min: r.row_min.min(row),
                    col_max: r.col_max.max(col),
                    row_max: r.row_max.max(row),
                },
            });
        }
        rect
    }
}

/// Pixelwise OR of masks with identical dimensions.
pub fn union_masks(masks: &[Mask]) -> Result<Mask> {
    let first = masks
        .first()
        .ok_or_else(|| Error::invalid("union of zero masks"))?;
    let mut out = first.clone();
    for m in &masks[1..] {
        if m.width != out.width || m.height != out.height {
            return Err(Error::DimensionMismatch {
                expected: format!("{}x{}", out.width, out.height),
                actual: format!("{}x{}", m.width, m.height),
            });
        }
        for (o, b) in out.bits.iter_mut().zip(&m.bits) {
            *o |= *b;
        }
    }
    Ok(out)
}

/// Bounding box of the mask grown by `ceil(margin * side)` pixels per side
/// and clipped to the grid.
pub fn margin_rect(mask: &Mask, margin: f64) -> Result<PixelRect> {
    if margin.is_nan() || margin < 0.0 || margin.is_infinite() {
        return Err(Error::invalid(format!(
            "margin must be non-negative, got {margin}"
        )));
    }
    let bb = mask
        .bounding_box()
        .ok_or_else(|| Error::EmptyMask("cannot crop around an empty mask".into()))?;
    // 1e-9 absorbs representation error, e.g. 0.05 * 60 = 3.0000000000000004.
    let pad = |side: usize| (margin * side as f64 - 1e-9).ceil().max(0.0) as usize;
    let (px, py) = (pad(bb.width()), pad(bb.height()));
    Ok(PixelRect {
        col_min: bb.col_min.saturating_sub(px),
        row_min: bb.row_min.saturating_sub(py),
        col_max: (bb.col_max + px).min(mask.width - 1),
        row_max: (bb.row_max + py).min(mask.height - 1),
    })
}

/// Copies the pixels inside `rect`; spacing is preserved.
pub fn crop(img: &GrayImage, rect: PixelRect) -> Result<GrayImage> {
    if rect.col_max >= img.width || rect.row_max >= img.height {
        return Err(Error::invalid("crop rectangle exceeds image bounds"));
    }
    let mut pixels = Vec::with_capacity(rect.width() * rect.height());
    for row in rect.row_min..=rect.row_max {
        let start = row * img.width;
        pixels.extend_from_slice(&img.pixels[start + rect.col_min..=start + rect.col_max]);
    }
    Ok(GrayImage {
        width: rect.width(),
        height: rect.height(),
        pixels,
        spacing_x: img.spacing_x,
        spacing_y: img.spacing_y,
    })
}

/// Rectangular ROI around the mask with a relative background margin
/// (0.05 in the default pipeline).
pub fn crop_with_margin(img: &GrayImage, mask: &Mask, margin: f64) -> Result<GrayImage> {
    if mask.width != img.width || mask.height != img.height {
        return Err(Error::DimensionMismatch {
            expected: format!("{}x{}", img.width, img.height),
            actual: format!("{}x{}", mask.width, mask.height),
        });
    }
    crop(img, margin_rect(mask, margin)?)
}

/// True pixels with at least one 4-neighbor that is false or off-grid.
pub fn boundary_pixels(mask: &Mask) -> Vec<(usize, usize)> {
    let (w, h) = (mask.width, mask.height);
    mask.true_pixels()
        .filter(|&(c, r)| {
            c == 0
                || r == 0
                || c + 1 == w
                || r + 1 == h
                || !mask.get(c - 1, r)
                || !mask.get(c + 1, r)
                || !mask.get(c, r - 1)
                || !mask.get(c, r + 1)
        })
        .collect()
}
