//! Instance extraction from encoded representations.
//!
//! Energy maps are decoded by thresholding into seeds, flooding the reversed
//! energy from those seeds, and refining (optional hole filling, small-object
//! removal). Boundary maps and skeleton-with-scales have their own decoders.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

use crate::diagnostic::Diagnostic;
use crate::error::{Error, Result};
use crate::geometry::{
    connected_components, dilate_with_radii, distance_to_set, fill_holes, neighbors, remove_small, Connectivity, N8,
};
use crate::raster::{BinaryMask, EnergyMap, LabelMap, PixelSet, Rect};
use crate::representations::SkeletonScales;
use crate::scalar::Real;

/// Minimum instance size kept by default, in pixels.
pub const DEFAULT_MIN_SIZE: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DecodeParams<T> {
    /// Seeds are foreground pixels with energy strictly above this.
    pub theta: T,
    /// Instances smaller than this are dropped.
    pub min_size: usize,
    pub fill_holes: bool,
}

impl<T: Real> DecodeParams<T> {
    pub fn new(theta: T, min_size: usize, fill_holes: bool) -> Result<Self> {
        if !(theta > T::zero() && theta < T::one()) {
            return Err(Error::InvalidParam(format!("theta {theta} must lie in (0, 1)")));
        }
        Ok(Self {
            theta,
            min_size,
            fill_holes,
        })
    }
}

impl<T: Real> Default for DecodeParams<T> {
    fn default() -> Self {
        Self {
            theta: T::lit(0.7),
            min_size: DEFAULT_MIN_SIZE,
            fill_holes: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Decoded {
    pub labels: LabelMap,
    pub diagnostics: Vec<Diagnostic>,
}

/// 8-connected components of `{x : E(x) > theta}` over the foreground.
pub fn extract_seeds<T: Real>(energy: &EnergyMap<T>, theta: T) -> LabelMap {
    let mask = BinaryMask::new(
        energy.width(),
        energy.height(),
        energy.values().iter().map(|&e| e >= T::zero() && e > theta).collect(),
    )
    .expect("dimensions come from a valid energy map");
    connected_components(&mask, Connectivity::Eight)
}

/// Orders non-negative finite values by their bit pattern.
#[inline]
fn key<T: Real>(v: T) -> u64 {
    v.as_f64().to_bits()
}

/// Seeded priority flood over elevation `1 - E`, restricted to foreground.
///
/// A pixel takes the label of the first popped neighbor that reaches it; the
/// queue pops lowest elevation first and, among equal elevations, the earliest
/// insertion. Foreground pixels no seed reaches stay 0 and are counted.
pub fn watershed<T: Real>(energy: &EnergyMap<T>, seeds: &LabelMap) -> Result<Decoded> {
    let (w, h) = (energy.width(), energy.height());
    if seeds.width() != w || seeds.height() != h {
        return Err(Error::Dimensions(format!(
            "seeds {}x{} vs energy {w}x{h}",
            seeds.width(),
            seeds.height()
        )));
    }
    if seeds.is_empty() {
        return Err(Error::EmptySeeds);
    }
    let elevation = |i: usize| T::one() - energy.values()[i];
    let mut labels = seeds.labels().to_vec();
    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    for (i, &l) in labels.iter().enumerate() {
        if l != 0 {
            if !energy.is_foreground_at(i) {
                return Err(Error::InvalidParam(format!(
                    "seed pixel ({}, {}) lies on background",
                    i / w,
                    i % w
                )));
            }
            heap.push(Reverse((key(elevation(i)), seq, i)));
            seq += 1;
        }
    }
    while let Some(Reverse((_, _, i))) = heap.pop() {
        let label = labels[i];
        for (r, c) in neighbors(i / w, i % w, w, h, &N8) {
            let j = r * w + c;
            if labels[j] == 0 && energy.is_foreground_at(j) {
                labels[j] = label;
                heap.push(Reverse((key(elevation(j)), seq, j)));
                seq += 1;
            }
        }
    }
    let unreachable = (0..w * h)
        .filter(|&i| labels[i] == 0 && energy.is_foreground_at(i))
        .count();
    let diagnostics = if unreachable > 0 {
        vec![Diagnostic::Unreachable { pixels: unreachable }]
    } else {
        Vec::new()
    };
    Ok(Decoded {
        labels: LabelMap::new(w, h, labels)?,
        diagnostics,
    })
}

/// Fills each instance's holes with pixels that are currently unlabeled.
fn fill_instance_holes(map: &LabelMap) -> LabelMap {
    let mut labels = map.labels().to_vec();
    for id in map.ids() {
        let filled = fill_holes(&map.mask_of(id));
        for (i, &set) in filled.bits().iter().enumerate() {
            if set && labels[i] == 0 {
                labels[i] = id;
            }
        }
    }
    LabelMap::new(map.width(), map.height(), labels).expect("same dimensions")
}

/// Seeds, watershed on the reversed energy, then refinement. Output ids are seed ids.
pub fn decode_sdt<T: Real>(energy: &EnergyMap<T>, params: &DecodeParams<T>) -> Result<Decoded> {
    let seeds = extract_seeds(energy, params.theta);
    if seeds.is_empty() {
        return Ok(Decoded {
            labels: LabelMap::zeros(energy.width(), energy.height())?,
            diagnostics: vec![Diagnostic::NoSeeds],
        });
    }
    let Decoded {
        mut labels,
        diagnostics,
    } = watershed(energy, &seeds)?;
    if params.fill_holes {
        labels = fill_instance_holes(&labels);
    }
    Ok(Decoded {
        labels: remove_small(&labels, params.min_size),
        diagnostics,
    })
}

/// Components of `foreground \ boundary`, grown over boundary pixels.
///
/// Growth runs in rounds: every unlabeled foreground pixel with labeled
/// 8-neighbors takes their majority label (ties to the lowest), all pixels of a
/// round updating at once, until nothing changes.
pub fn decode_boundary<T: Real>(
    boundary: &BinaryMask,
    foreground: &BinaryMask,
    params: &DecodeParams<T>,
) -> Result<Decoded> {
    let interior = foreground.and_not(boundary)?;
    let (w, h) = (foreground.width(), foreground.height());
    let mut labels = connected_components(&interior, Connectivity::Eight).into_labels();
    loop {
        let mut updates = Vec::new();
        for i in 0..w * h {
            if labels[i] != 0 || !foreground.bits()[i] {
                continue;
            }
            let mut votes: Vec<(u32, usize)> = Vec::new();
            for (r, c) in neighbors(i / w, i % w, w, h, &N8) {
                let l = labels[r * w + c];
                if l == 0 {
                    continue;
                }
                match votes.iter_mut().find(|(v, _)| *v == l) {
                    Some(entry) => entry.1 += 1,
                    None => votes.push((l, 1)),
                }
            }
            if let Some(&(label, _)) = votes.iter().max_by(|a, b| a.1.cmp(&b.1).then(b.0.cmp(&a.0))) {
                updates.push((i, label));
            }
        }
        if updates.is_empty() {
            break;
        }
        for (i, l) in updates {
            labels[i] = l;
        }
    }
    let mut map = LabelMap::new(w, h, labels)?;
    if params.fill_holes {
        map = fill_instance_holes(&map);
    }
    Ok(Decoded {
        labels: remove_small(&map, params.min_size),
        diagnostics: Vec::new(),
    })
}

/// Bounding box of the set pixels of a non-empty mask.
fn cover_bounds(mask: &BinaryMask) -> Rect {
    let mut rect = Rect {
        row0: usize::MAX,
        col0: usize::MAX,
        row1: 0,
        col1: 0,
    };
    for (r, c) in mask.pixels() {
        rect.row0 = rect.row0.min(r);
        rect.col0 = rect.col0.min(c);
        rect.row1 = rect.row1.max(r + 1);
        rect.col1 = rect.col1.max(c + 1);
    }
    rect
}

/// Dilates each connected skeleton piece by its scales. A pixel claimed by
/// several pieces goes to the one whose skeleton is nearest (ties to the
/// lower label).
pub fn decode_ss<T: Real>(ss: &SkeletonScales<T>, params: &DecodeParams<T>) -> Result<Decoded> {
    let skeleton = ss.skeleton();
    let (w, h) = (skeleton.width(), skeleton.height());
    let pieces = connected_components(&skeleton.to_mask(), Connectivity::Eight);
    let count = pieces.max_id();
    let scale_of: std::collections::HashMap<(usize, usize), T> =
        skeleton.iter().zip(ss.scales().iter().copied()).collect();
    let mut labels = vec![0u32; w * h];
    let mut best = vec![T::infinity(); w * h];
    for k in 1..=count {
        let pixels = PixelSet::new(w, h, skeleton.iter().filter(|&(r, c)| pieces.get(r, c) == k))?;
        let radii: Vec<T> = pixels.iter().map(|p| scale_of[&p]).collect();
        let cover = dilate_with_radii(&pixels, &radii)?;
        let window = cover_bounds(&cover);
        let local = cover.crop(window);
        let dist = distance_to_set::<T>(&local, &pixels.crop(window))?;
        for (r, c) in local.pixels() {
            let i = (r + window.row0) * w + c + window.col0;
            let d = dist.get(r, c).expect("inside cover");
            if d < best[i] {
                best[i] = d;
                labels[i] = k;
            }
        }
    }
    let map = LabelMap::new(w, h, labels)?;
    Ok(Decoded {
        labels: remove_small(&map, params.min_size),
        diagnostics: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(min_size: usize) -> DecodeParams<f64> {
        DecodeParams::new(0.7, min_size, false).unwrap()
    }

    #[test]
    fn uniform_half_energy_has_no_seeds() {
        let e = EnergyMap::<f64>::new(3, 3, vec![0.5; 9]).unwrap();
        assert!(extract_seeds(&e, 0.7).is_empty());
        let d = decode_sdt(&e, &params(0)).unwrap();
        assert!(d.labels.is_empty());
        assert_eq!(d.diagnostics, vec![Diagnostic::NoSeeds]);
    }

    #[test]
    fn single_seed_claims_connected_foreground() {
        let e = EnergyMap::<f64>::new(4, 1, vec![0.2, 0.9, 0.1, 0.3]).unwrap();
        let seeds = extract_seeds(&e, 0.7);
        let d = watershed(&e, &seeds).unwrap();
        assert_eq!(d.labels.labels(), &[1, 1, 1, 1]);
    }

    #[test]
    fn strip_splits_at_minimum_with_fifo_ties() {
        // hand trace: seeds at 2 (label 1, seq 0) and 4 (label 2, seq 1).
        // pop 2 -> claims 1 and 3; pop 4 -> 3 already taken, claims 5; ...
        let e = EnergyMap::<f64>::new(7, 1, vec![0.0, 0.5, 1.0, 0.0, 1.0, 0.5, 0.0]).unwrap();
        let seeds = LabelMap::new(7, 1, vec![0, 0, 1, 0, 2, 0, 0]).unwrap();
        let d = watershed(&e, &seeds).unwrap();
        assert_eq!(d.labels.labels(), &[1, 1, 1, 1, 2, 2, 2]);
    }

    #[test]
    fn empty_seeds_is_an_error() {
        let e = EnergyMap::<f64>::new(2, 1, vec![0.5; 2]).unwrap();
        let seeds = LabelMap::zeros(2, 1).unwrap();
        assert!(matches!(watershed(&e, &seeds), Err(Error::EmptySeeds)));
    }

    #[test]
    fn unreachable_foreground_is_reported() {
        let e = EnergyMap::<f64>::new(4, 1, vec![0.9, -1.0, 0.2, 0.3]).unwrap();
        let seeds = extract_seeds(&e, 0.7);
        let d = watershed(&e, &seeds).unwrap();
        assert_eq!(d.labels.labels(), &[1, 0, 0, 0]);
        assert_eq!(d.diagnostics, vec![Diagnostic::Unreachable { pixels: 2 }]);
    }

    #[test]
    fn theta_must_be_open_unit_interval() {
        assert!(DecodeParams::<f64>::new(0.0, 0, false).is_err());
        assert!(DecodeParams::<f64>::new(1.0, 0, false).is_err());
    }

    fn two_squares_with_line(gap_at: Option<usize>) -> (BinaryMask, BinaryMask) {
        // 10 rows: rows 1..=3 square A, row 4 boundary line, rows 5..=7 square B
        let fg = BinaryMask::from_fn(9, 9, |r, c| (1..8).contains(&r) && (1..8).contains(&c)).unwrap();
        let boundary = BinaryMask::from_fn(9, 9, |r, c| {
            let ring = (r == 1 || r == 7 || c == 1 || c == 7) && fg.get(r, c);
            let line = r == 4 && (1..8).contains(&c) && Some(c) != gap_at;
            ring || line
        })
        .unwrap();
        (boundary, fg)
    }

    #[test]
    fn intact_boundary_line_separates() {
        let (b, fg) = two_squares_with_line(None);
        let d = decode_boundary(&b, &fg, &params(0)).unwrap();
        assert_eq!(d.labels.instance_count(), 2);
        assert_eq!(d.labels.foreground(), fg);
    }

    #[test]
    fn one_missing_boundary_pixel_merges() {
        let (b, fg) = two_squares_with_line(Some(4));
        let d = decode_boundary(&b, &fg, &params(0)).unwrap();
        assert_eq!(d.labels.instance_count(), 1);
    }

    #[test]
    fn empty_boundary_is_one_instance_per_component() {
        let fg = BinaryMask::from_ascii(&["##..", "##..", "...#"]).unwrap();
        let b = BinaryMask::empty(4, 3).unwrap();
        let d = decode_boundary(&b, &fg, &params(0)).unwrap();
        assert_eq!(d.labels.instance_count(), 2);
    }

    #[test]
    fn ss_single_pixel_scale_zero() {
        let s = PixelSet::new(5, 5, [(2, 2)]).unwrap();
        let ss = SkeletonScales::new(s, vec![0.0f64]).unwrap();
        assert_eq!(decode_ss(&ss, &params(0)).unwrap().labels.instance_count(), 1);
        assert!(decode_ss(&ss, &params(2)).unwrap().labels.is_empty());
    }

    #[test]
    fn ss_disjoint_disks_are_exact() {
        let s = PixelSet::new(20, 10, [(5, 4), (5, 14)]).unwrap();
        let ss = SkeletonScales::new(s.clone(), vec![2.0f64, 3.0]).unwrap();
        let d = decode_ss(&ss, &params(0)).unwrap();
        assert_eq!(d.labels.instance_count(), 2);
        let expect = dilate_with_radii(&s, &[2.0f64, 3.0]).unwrap();
        assert_eq!(d.labels.foreground(), expect);
    }

    #[test]
    fn hole_filling_claims_only_unlabeled_pixels() {
        let map = LabelMap::from_rows(&[
            [1, 1, 1, 1, 1],
            [1, 0, 0, 0, 1],
            [1, 0, 2, 0, 1],
            [1, 0, 0, 0, 1],
            [1, 1, 1, 1, 1],
        ])
        .unwrap();
        let filled = fill_instance_holes(&map);
        assert_eq!(filled.get(1, 1), 1);
        assert_eq!(filled.get(2, 2), 2);
    }
}
