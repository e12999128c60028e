//! Even-odd scanline fill sampled at pixel centers.

use super::{Mask, Polygon};
use crate::error::{Error, Result};

const ON_EDGE_EPS: f64 = 1e-9;

/// Rasterizes a closed polygon into a `width x height` mask.
///
/// A pixel is set when its center `(col, row)` lies strictly inside the
/// polygon by the even-odd rule, or exactly on one of its edges.
pub fn rasterize_polygon(poly: &Polygon, width: usize, height: usize) -> Result<Mask> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("mask dimensions must be positive"));
    }
    if poly.is_degenerate() {
        return Err(Error::EmptyMask("polygon has zero area".into()));
    }
    let mut mask = Mask::new(width, height);
    let verts = poly.vertices();
    let n = verts.len();
    let edges = || (0..n).map(move |i| (verts[i], verts[(i + 1) % n]));

    let (y_lo, y_hi) = verts
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &(_, y)| {
            (lo.min(y), hi.max(y))
        });
    let Some((row_lo, row_hi)) = row_span(y_lo, y_hi, height) else {
        return Err(Error::EmptyMask(
            "polygon does not cover any pixel center".into(),
        ));
    };

    let mut crossings = Vec::with_capacity(n);
    for row in row_lo..=row_hi {
        let y = row as f64;
        crossings.clear();
        // Half-open rule on y so a vertex shared by two edges counts once.
        for ((x0, y0), (x1, y1)) in edges() {
            if (y0 > y) != (y1 > y) {
                crossings.push(x0 + (y - y0) * (x1 - x0) / (y1 - y0));
            }
        }
        crossings.sort_by(f64::total_cmp);
        for pair in crossings.chunks_exact(2) {
            let (a, b) = (pair[0], pair[1]);
            let first = (a.floor() + 1.0).max(0.0);
            let last = (b.ceil() - 1.0).min(width as f64 - 1.0);
            if first > last {
                continue;
            }
            for col in first as usize..=last as usize {
                mask.set(col, row, true);
            }
        }
    }

    for ((x0, y0), (x1, y1)) in edges() {
        mark_edge_centers(&mut mask, (x0, y0), (x1, y1));
    }

    if mask.is_empty() {
        return Err(Error::EmptyMask(
            "polygon does not cover any pixel center".into(),
        ));
    }
    Ok(mask)
}

fn row_span(lo: f64, hi: f64, height: usize) -> Option<(usize, usize)> {
    let first = lo.ceil().max(0.0);
    let last = hi.floor().min(height as f64 - 1.0);
    (first <= last).then_some((first as usize, last as usize))
}

/// Sets every pixel whose center lies on the segment.
fn mark_edge_centers(mask: &mut Mask, (x0, y0): (f64, f64), (x1, y1): (f64, f64)) {
    let (w, h) = (mask.width() as f64, mask.height() as f64);
    let in_grid = |c: f64, r: f64| c >= 0.0 && r >= 0.0 && c < w && r < h;
    if y0 == y1 {
        if (y0 - y0.round()).abs() > ON_EDGE_EPS {
            return;
        }
        let r = y0.round();
        let (lo, hi) = (x0.min(x1), x0.max(x1));
        let mut c = lo.ceil();
        while c <= hi {
            if in_grid(c, r) {
                mask.set(c as usize, r as usize, true);
            }
            c += 1.0;
        }
        return;
    }
    let (lo, hi) = (y0.min(y1), y0.max(y1));
    let mut r = lo.ceil();
    while r <= hi {
        let x = x0 + (r - y0) * (x1 - x0) / (y1 - y0);
        let c = x.round();
        if (x - c).abs() <= ON_EDGE_EPS && in_grid(c, r) {
            mask.set(c as usize, r as usize, true);
        }
        r += 1.0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force: on-segment test, then crossing-number parity.
    fn oracle(poly: &Polygon, width: usize, height: usize) -> Vec<bool> {
        let v = poly.vertices();
        let n = v.len();
        let mut out = Vec::with_capacity(width * height);
        for row in 0..height {
            for col in 0..width {
                let (px, py) = (col as f64, row as f64);
                let mut on_edge = false;
                let mut inside = false;
                for i in 0..n {
                    let (ax, ay) = v[i];
                    let (bx, by) = v[(i + 1) % n];
                    let cross = (bx - ax) * (py - ay) - (by - ay) * (px - ax);
                    let dot = (px - ax) * (bx - ax) + (py - ay) * (by - ay);
                    let len2 = (bx - ax).powi(2) + (by - ay).powi(2);
                    let on_segment = if len2 == 0.0 {
                        px == ax && py == ay
                    } else {
                        cross.abs() < 1e-9 && dot >= -1e-9 && dot <= len2 + 1e-9
                    };
                    if on_segment {
                        on_edge = true;
                    }
                    if (ay > py) != (by > py) && px < ax + (py - ay) * (bx - ax) / (by - ay) {
                        inside = !inside;
                    }
                }
                out.push(on_edge || inside);
            }
        }
        out
    }

    #[test]
    fn rectangle_with_half_pixel_corners() {
        let poly = Polygon::new(vec![(0.5, 0.5), (3.5, 0.5), (3.5, 3.5), (0.5, 3.5)]).unwrap();
        let mask = rasterize_polygon(&poly, 5, 5).unwrap();
        assert_eq!(mask.count(), 9);
        for (c, r) in mask.true_pixels() {
            assert!((1..=3).contains(&c) && (1..=3).contains(&r));
        }
        assert_eq!(mask.bits(), oracle(&poly, 5, 5).as_slice());
    }

    #[test]
    fn triangle_matches_oracle() {
        let poly = Polygon::new(vec![(0.0, 0.0), (4.0, 0.0), (0.0, 4.0)]).unwrap();
        let mask = rasterize_polygon(&poly, 5, 5).unwrap();
        assert_eq!(mask.bits(), oracle(&poly, 5, 5).as_slice());
        // Edge-touching centers are included: c + r <= 4.
        assert_eq!(mask.count(), 15);
    }

    #[test]
    fn outside_polygon_is_empty_mask_error() {
        let poly = Polygon::new(vec![(10.0, 10.0), (14.0, 10.0), (12.0, 14.0)]).unwrap();
        assert!(matches!(
            rasterize_polygon(&poly, 5, 5),
            Err(Error::EmptyMask(_))
        ));
    }

    #[test]
    fn degenerate_polygon_is_rejected() {
        let poly = Polygon::new(vec![(0.0, 0.0), (2.0, 2.0), (4.0, 4.0)]).unwrap();
        assert!(matches!(
            rasterize_polygon(&poly, 5, 5),
            Err(Error::EmptyMask(_))
        ));
    }

    #[test]
    fn self_intersecting_bowtie_uses_even_odd() {
        let poly = Polygon::new(vec![(0.0, 0.0), (6.0, 6.0), (6.0, 0.0), (0.0, 6.0)]).unwrap();
        let mask = rasterize_polygon(&poly, 7, 7).unwrap();
        assert_eq!(mask.bits(), oracle(&poly, 7, 7).as_slice());
    }

    #[test]
    fn repeated_rasterization_union_is_idempotent() {
        let poly = Polygon::new(vec![(1.2, 0.7), (5.9, 2.1), (4.4, 6.3), (0.8, 4.5)]).unwrap();
        let once = rasterize_polygon(&poly, 8, 8).unwrap();
        let copies = vec![once.clone(), once.clone(), once.clone()];
        assert_eq!(super::super::union_masks(&copies).unwrap(), once);
    }

    proptest! {
        // Vertices on a half-pixel lattice keep on-edge decisions exact.
        #[test]
        fn scanline_matches_brute_force(
            pts in proptest::collection::vec((0u32..=24, 0u32..=24), 3..9)
        ) {
            let verts: Vec<(f64, f64)> =
                pts.iter().map(|&(x, y)| (x as f64 / 2.0, y as f64 / 2.0)).collect();
            let poly = Polygon::new(verts).unwrap();
            prop_assume!(poly.area() > 1e-9);
            match rasterize_polygon(&poly, 13, 13) {
                Ok(mask) => {
                    let expected = oracle(&poly, 13, 13);
                    prop_assert_eq!(mask.bits(), expected.as_slice())
                }
                Err(Error::EmptyMask(_)) => {
                    prop_assert!(!oracle(&poly, 13, 13).iter().any(|b| *b))
                }
                Err(e) => prop_assert!(false, "unexpected error {e}"),
            }
        }
    }
}
