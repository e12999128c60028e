use std::f64::consts::{PI, TAU};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::manifest::{Manifest, ManifestEntry, MANIFEST_SCHEMA};
use crate::error::{Error, Result};
use crate::imaging::write_pgm;

const CONTOUR_VERTICES: usize = 64;
const BACKGROUND_SIGMA: f64 = 9.0;

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticNodule {
    pub nodule_id: String,
    pub subject_id: String,
    pub diagnosis: u8,
    pub spacing: f64,
    /// Row-major 8-bit samples, `image_size × image_size`.
    pub pixels: Vec<u8>,
    pub polygons: Vec<Vec<[f64; 2]>>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub image_size: usize,
    pub nodules: Vec<SyntheticNodule>,
}

struct Shape {
    cx: f64,
    cy: f64,
    radius: f64,
    stretch: f64,
    rotation: f64,
    harmonics: Vec<(f64, f64, f64)>,
}

impl Shape {
    fn radius_at(&self, theta: f64) -> f64 {
        let wobble: f64 = self
            .harmonics
            .iter()
            .map(|&(k, a, ph)| a * (k * theta + ph).cos())
            .sum();
        self.radius * (1.0 + wobble)
    }

    /// Normalized-frame polar coordinates of an image point.
    fn polar(&self, x: f64, y: f64) -> (f64, f64) {
        let (dx, dy) = (x - self.cx, y - self.cy);
        let (s, c) = self.rotation.sin_cos();
        let u = c * dx + s * dy;
        let v = -s * dx + c * dy;
        let (nu, nv) = (u / self.stretch.sqrt(), v * self.stretch.sqrt());
        (nu.hypot(nv), nv.atan2(nu))
    }

    fn contour(&self, scale: f64, size: usize) -> Vec<[f64; 2]> {
        let hi = (size - 1) as f64;
        let (s, c) = self.rotation.sin_cos();
        (0..CONTOUR_VERTICES)
            .map(|j| {
                let theta = TAU * j as f64 / CONTOUR_VERTICES as f64;
                let r = scale * self.radius_at(theta);
                let u = r * theta.cos() * self.stretch.sqrt();
                let v = r * theta.sin() / self.stretch.sqrt();
                let x = self.cx + c * u - s * v;
                let y = self.cy + s * u + c * v;
                [x.clamp(0.0, hi), y.clamp(0.0, hi)]
            })
            .collect()
    }
}

fn box_blur(field: &[f64], size: usize) -> Vec<f64> {
    let mut out = vec![0.0; field.len()];
    for row in 0..size {
        for col in 0..size {
            let mut sum = 0.0;
            let mut n = 0.0;
            for r in row.saturating_sub(1)..=(row + 1).min(size - 1) {
                for c in col.saturating_sub(1)..=(col + 1).min(size - 1) {
                    sum += field[r * size + c];
                    n += 1.0;
                }
            }
            out[row * size + col] = sum / n;
        }
    }
    out
}

fn nodule(
    rng: &mut ChaCha8Rng,
    size: usize,
    malignant: bool,
) -> (Vec<u8>, Vec<Vec<[f64; 2]>>, f64) {
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let half = size as f64 / 2.0;
    let jitter = (size as f64 / 16.0).min(3.0);

    let (radius, stretch, amp_hi, contrast, edge) = if malignant {
        (
            rng.random_range(5.0..12.0),
            rng.random_range(1.2..1.8),
            0.15,
            rng.random_range(80.0..120.0),
            0.7,
        )
    } else {
        (
            rng.random_range(2.0..5.0),
            rng.random_range(1.0..1.1),
            0.03,
            rng.random_range(30.0..50.0),
            2.0,
        )
    };
    let harmonics: Vec<(f64, f64, f64)> = (2..=4)
        .map(|k| {
            let lo = if malignant { 0.05 } else { 0.0 };
            (
                k as f64,
                rng.random_range(lo..amp_hi),
                rng.random_range(0.0..TAU),
            )
        })
        .collect();
    let mut shape = Shape {
        cx: half + rng.random_range(-jitter..jitter),
        cy: half + rng.random_range(-jitter..jitter),
        radius,
        stretch,
        rotation: rng.random_range(0.0..PI),
        harmonics,
    };
    let reach = shape.radius
        * stretch.sqrt()
        * (1.0 + shape.harmonics.iter().map(|h| h.1).sum::<f64>())
        * 1.1;
    let room = half - jitter - 2.0;
    if reach > room {
        shape.radius *= room / reach;
    }

    let level = rng.random_range(50.0..70.0);
    let noise: Vec<f64> = (0..size * size)
        .map(|_| BACKGROUND_SIGMA * normal.sample(rng))
        .collect();
    let noise = box_blur(&noise, size);
    let mut pixels = Vec::with_capacity(size * size);
    for row in 0..size {
        for col in 0..size {
            let (rho, theta) = shape.polar(col as f64, row as f64);
            let r = shape.radius_at(theta);
            let inside = (0.5 + (r - rho) / edge).clamp(0.0, 1.0);
            let mut v = level + noise[row * size + col];
            if inside > 0.0 {
                let body = if malignant {
                    contrast + 12.0 * normal.sample(rng)
                } else {
                    contrast * (1.0 - 0.3 * (rho / r).powi(2))
                };
                v += inside * body;
            }
            pixels.push(v.round().clamp(0.0, 255.0) as u8);
        }
    }

    let mut polygons = vec![shape.contour(1.0, size)];
    if rng.random_bool(0.5) {
        polygons.push(shape.contour(rng.random_range(0.9..1.1), size));
    }
    (pixels, polygons, rng.random_range(0.5..=1.0))
}

/// Seeded synthetic dataset: small smooth faint benign blobs and larger,
/// eccentric, lobulated, brighter malignant ones on textured background.
/// Nodules are grouped into subjects of one to three same-class nodules.
pub fn generate_synthetic(
    n_benign: usize,
    n_malignant: usize,
    image_size: usize,
    seed: u64,
) -> Result<SyntheticDataset> {
    if n_benign == 0 || n_malignant == 0 {
        return Err(Error::invalid("need at least one nodule of each class"));
    }
    if image_size < 32 {
        return Err(Error::invalid(format!(
            "image size must be at least 32, got {image_size}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodules = Vec::with_capacity(n_benign + n_malignant);
    let mut subject = 0usize;
    for (count, malignant) in [(n_benign, false), (n_malignant, true)] {
        let mut left_in_subject = 0usize;
        let mut diagnosis = 1u8;
        for _ in 0..count {
            if left_in_subject == 0 {
                subject += 1;
                left_in_subject = rng.random_range(1..=3);
                diagnosis = if malignant {
                    rng.random_range(2..=3)
                } else {
                    1
                };
            }
            left_in_subject -= 1;
            let (pixels, polygons, spacing) = nodule(&mut rng, image_size, malignant);
            nodules.push(SyntheticNodule {
                nodule_id: format!("n{:04}", nodules.len() + 1),
                subject_id: format!("s{subject:04}"),
                diagnosis,
                spacing,
                pixels,
                polygons,
            });
        }
    }
    Ok(SyntheticDataset {
        image_size,
        nodules,
    })
}

/// Writes `images/<id>.pgm` and `manifest.json` under `dir`; returns the
/// manifest path.
pub fn write_synthetic(ds: &SyntheticDataset, dir: &Path) -> Result<PathBuf> {
    let images = dir.join("images");
    std::fs::create_dir_all(&images).map_err(|e| Error::io(&images, e))?;
    let mut entries = Vec::with_capacity(ds.nodules.len());
    for n in &ds.nodules {
        let rel = PathBuf::from("images").join(format!("{}.pgm", n.nodule_id));
        write_pgm(&dir.join(&rel), ds.image_size, ds.image_size, &n.pixels)?;
        entries.push(ManifestEntry {
            nodule_id: n.nodule_id.clone(),
            subject_id: n.subject_id.clone(),
            image: rel,
            spacing_x: n.spacing,
            spacing_y: n.spacing,
            source_max: None,
            polygons: n.polygons.clone(),
            diagnosis: n.diagnosis,
        });
    }
    let manifest = Manifest {
        schema: MANIFEST_SCHEMA,
        entries,
    };
    let path = dir.join("manifest.json");
    let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    crate::cli::write_atomic(&path, text.as_bytes())?;
    Ok(path)
}
