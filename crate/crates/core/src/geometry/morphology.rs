use std::collections::VecDeque;

use super::components::{neighbors, N4, N8};
use crate::error::{Error, Result};
use crate::raster::{BinaryMask, LabelMap, PixelSet};
use crate::scalar::Real;

/// Union of Euclidean disks: a pixel is set iff it lies within `radii[i]` of
/// the `i`-th skeleton pixel (row-major order of the set).
pub fn dilate_with_radii<T: Real>(skeleton: &PixelSet, radii: &[T]) -> Result<BinaryMask> {
    if radii.len() != skeleton.len() {
        return Err(Error::SizeMismatch {
            expected: skeleton.len(),
            found: radii.len(),
        });
    }
    let (w, h) = (skeleton.width(), skeleton.height());
    let mut out = BinaryMask::empty(w, h)?;
    for ((sr, sc), &radius) in skeleton.iter().zip(radii) {
        if !radius.is_finite() || radius < T::zero() {
            return Err(Error::InvalidParam(format!(
                "radius {radius} at ({sr}, {sc}) must be finite and non-negative"
            )));
        }
        let r2 = radius * radius;
        let reach = radius.floor().to_usize().unwrap_or(0);
        for r in sr.saturating_sub(reach)..=(sr + reach).min(h - 1) {
            for c in sc.saturating_sub(reach)..=(sc + reach).min(w - 1) {
                let dr = r.abs_diff(sr);
                let dc = c.abs_diff(sc);
                if T::from_usize_lossy(dr * dr + dc * dc) <= r2 {
                    out.set(r, c, true);
                }
            }
        }
    }
    Ok(out)
}

/// Sets every background component (4-connected) that does not reach the
/// grid border.
pub fn fill_holes(mask: &BinaryMask) -> BinaryMask {
    let (w, h) = (mask.width(), mask.height());
    let mut outside = vec![false; w * h];
    let mut queue = VecDeque::new();
    for r in 0..h {
        for c in 0..w {
            if (r == 0 || c == 0 || r == h - 1 || c == w - 1) && !mask.get(r, c) {
                outside[r * w + c] = true;
                queue.push_back((r, c));
            }
        }
    }
    while let Some((r, c)) = queue.pop_front() {
        for (nr, nc) in neighbors(r, c, w, h, &N4) {
            let j = nr * w + nc;
            if !outside[j] && !mask.get(nr, nc) {
                outside[j] = true;
                queue.push_back((nr, nc));
            }
        }
    }
    BinaryMask::new(w, h, outside.into_iter().map(|o| !o).collect()).expect("same dimensions as input")
}

/// Relabels instances smaller than `min_size` pixels to background.
pub fn remove_small(map: &LabelMap, min_size: usize) -> LabelMap {
    let areas = map.areas();
    let labels = map
        .labels()
        .iter()
        .map(|&l| if l != 0 && areas[&l] < min_size { 0 } else { l })
        .collect();
    LabelMap::new(map.width(), map.height(), labels).expect("same dimensions as input")
}

/// Dilation by the `(2r+1)`-square structuring element.
pub fn dilate_square(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let mut out = mask.clone();
    for _ in 0..radius {
        let cur = out.clone();
        for (r, c) in cur.pixels() {
            for (nr, nc) in neighbors(r, c, cur.width(), cur.height(), &N8) {
                out.set(nr, nc, true);
            }
        }
    }
    out
}

/// Erosion by the `(2r+1)`-square structuring element; outside the grid counts
/// as set, so erosion never eats in from the image border.
pub fn erode_square(mask: &BinaryMask, radius: usize) -> BinaryMask {
    let inv = mask.not();
    let mut grown = inv.clone();
    for _ in 0..radius {
        grown = dilate_square(&grown, 1);
    }
    grown.not()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_zero_is_the_pixel() {
        let s = PixelSet::new(5, 5, [(2, 2)]).unwrap();
        let m = dilate_with_radii(&s, &[0.0f64]).unwrap();
        assert_eq!(m.pixels().collect::<Vec<_>>(), vec![(2, 2)]);
    }

    #[test]
    fn radius_two_is_thirteen_pixels() {
        // enumerate offsets with dr^2 + dc^2 <= 4
        let expect = (-2i32..=2)
            .flat_map(|a| (-2i32..=2).map(move |b| a * a + b * b))
            .filter(|&d| d <= 4)
            .count();
        assert_eq!(expect, 13);
        let s = PixelSet::new(9, 9, [(4, 4)]).unwrap();
        let m = dilate_with_radii(&s, &[2.0f32]).unwrap();
        assert_eq!(m.count(), expect);
    }

    #[test]
    fn radii_length_must_match() {
        let s = PixelSet::new(3, 3, [(1, 1)]).unwrap();
        assert!(dilate_with_radii::<f64>(&s, &[]).is_err());
        assert!(dilate_with_radii(&s, &[-1.0f64]).is_err());
    }

    #[test]
    fn ring_fills_to_solid() {
        let ring = BinaryMask::from_ascii(&[".....", ".###.", ".#.#.", ".###.", "....."]).unwrap();
        let solid = BinaryMask::from_ascii(&[".....", ".###.", ".###.", ".###.", "....."]).unwrap();
        assert_eq!(fill_holes(&ring), solid);
        assert_eq!(fill_holes(&solid), solid);
    }

    #[test]
    fn nested_rings_fill_completely() {
        let m = BinaryMask::from_ascii(&[
            "#######", "#.....#", "#.###.#", "#.#.#.#", "#.###.#", "#.....#", "#######",
        ])
        .unwrap();
        assert_eq!(fill_holes(&m), BinaryMask::full(7, 7).unwrap());
    }

    #[test]
    fn remove_small_cases() {
        let mut labels = vec![0u32; 20 * 20];
        labels[0..3].fill(1);
        for r in 5..15 {
            for c in 5..15 {
                labels[r * 20 + c] = 2;
            }
        }
        let map = LabelMap::new(20, 20, labels).unwrap();
        assert_eq!(remove_small(&map, 0), map);
        assert_eq!(remove_small(&map, 10).ids(), vec![2]);
        assert!(remove_small(&map, 1000).is_empty());
    }

    #[test]
    fn square_dilation_and_erosion() {
        let m = BinaryMask::from_ascii(&[".....", ".....", "..#..", ".....", "....."]).unwrap();
        assert_eq!(dilate_square(&m, 1).count(), 9);
        assert_eq!(erode_square(&dilate_square(&m, 1), 1), m);
        assert_eq!(erode_square(&BinaryMask::full(3, 3).unwrap(), 1).count(), 9);
    }
}
