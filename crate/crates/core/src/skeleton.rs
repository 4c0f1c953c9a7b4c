//! Topology-preserving skeletonization by simple-point thinning.
//!
//! Each round collects the candidate set `P` of simple, non-end pixels and
//! deletes, in parallel, every pixel of `P` that stays simple however many of
//! its `P` neighbors are removed alongside it (a P-simple point). Deleting any
//! set of P-simple points preserves foreground 8-connectivity and background
//! 4-connectivity, and the rule is symmetric under rotations and flips. When
//! `P` is non-empty but holds no P-simple point (two-pixel-thick parts, where
//! no symmetric choice exists) one directional sub-iteration is run instead:
//! north, south, east, west border candidates, visited in raster order and
//! re-checked before each deletion.

use std::sync::OnceLock;

use crate::error::{Error, Result};
use crate::geometry::{count_background_components, count_components, smooth_mask, Connectivity};
use crate::raster::{BinaryMask, LabelMap, PixelSet, Rect};

/// Neighbor offsets in bit order; bit `i` of a neighborhood code is `NB[i]`.
const NB: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1), (1, 0), (1, -1), (0, -1)];

fn is_4_offset(i: usize) -> bool {
    NB[i].0 == 0 || NB[i].1 == 0
}

fn adjacent(i: usize, j: usize, four: bool) -> bool {
    let dr = (NB[i].0 - NB[j].0).abs();
    let dc = (NB[i].1 - NB[j].1).abs();
    if four {
        dr + dc == 1
    } else {
        dr.max(dc) == 1
    }
}

/// Components of `members` inside the 3x3 neighborhood (center excluded)
/// that contain at least one of `anchors`.
fn local_components(members: u8, anchors: u8, four: bool) -> usize {
    let mut seen = 0u8;
    let mut count = 0;
    for start in 0..8 {
        if members & (1 << start) == 0 || seen & (1 << start) != 0 {
            continue;
        }
        let mut stack = vec![start];
        seen |= 1 << start;
        let mut touches = false;
        while let Some(i) = stack.pop() {
            touches |= anchors & (1 << i) != 0;
            for j in 0..8 {
                if members & (1 << j) != 0 && seen & (1 << j) == 0 && adjacent(i, j, four) {
                    seen |= 1 << j;
                    stack.push(j);
                }
            }
        }
        if touches {
            count += 1;
        }
    }
    count
}

/// `SIMPLE[code]`: whether the center is simple for (8, 4) connectivity.
fn simple_table() -> &'static [bool; 256] {
    static TABLE: OnceLock<[bool; 256]> = OnceLock::new();
    TABLE.get_or_init(|| {
        let four_mask: u8 = (0..8).filter(|&i| is_4_offset(i)).fold(0, |m, i| m | (1 << i));
        let mut t = [false; 256];
        for (code, slot) in t.iter_mut().enumerate() {
            let fg = code as u8;
            let bg = !fg;
            let t8 = local_components(fg, fg, false);
            let t4 = local_components(bg, bg & four_mask, true);
            *slot = t8 == 1 && t4 == 1;
        }
        t
    })
}

/// `PSIMPLE[code][cand]`: center stays simple after removing any subset of `cand`.
fn p_simple_table() -> &'static Vec<bool> {
    static TABLE: OnceLock<Vec<bool>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let simple = simple_table();
        let mut t = vec![false; 256 * 256];
        for code in 0..256usize {
            for cand in 0..256usize {
                let q = cand & code;
                let mut ok = true;
                let mut s = q;
                loop {
                    if !simple[code & !s] {
                        ok = false;
                        break;
                    }
                    if s == 0 {
                        break;
                    }
                    s = (s - 1) & q;
                }
                t[code * 256 + cand] = ok;
            }
        }
        t
    })
}

fn neighborhood(bits: &[bool], w: usize, h: usize, r: usize, c: usize) -> u8 {
    let mut code = 0u8;
    for (i, &(dr, dc)) in NB.iter().enumerate() {
        let rr = r as isize + dr;
        let cc = c as isize + dc;
        if rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w && bits[rr as usize * w + cc as usize] {
            code |= 1 << i;
        }
    }
    code
}

#[inline]
fn deletable(code: u8) -> bool {
    code.count_ones() >= 2 && simple_table()[code as usize]
}

/// Result of thinning one mask.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkeletonResult {
    pub skeleton: PixelSet,
    /// 8-connected foreground components of the input.
    pub source_components: usize,
    /// 8-connected components of the skeleton; equals `source_components`.
    pub skeleton_components: usize,
    /// Whether a directional sub-iteration was needed to break symmetry.
    pub used_directional_step: bool,
}

/// Thins `mask` until no simple non-end pixel remains.
pub fn skeletonize(mask: &BinaryMask) -> SkeletonResult {
    let (w, h) = (mask.width(), mask.height());
    let mut bits = mask.bits().to_vec();
    let psimple = p_simple_table();
    let mut used_directional_step = false;

    loop {
        let codes: Vec<u8> = (0..w * h)
            .map(|i| {
                if bits[i] {
                    neighborhood(&bits, w, h, i / w, i % w)
                } else {
                    0
                }
            })
            .collect();
        let candidate: Vec<bool> = (0..w * h).map(|i| bits[i] && deletable(codes[i])).collect();
        if !candidate.iter().any(|&c| c) {
            break;
        }
        let removable: Vec<usize> = (0..w * h)
            .filter(|&i| candidate[i])
            .filter(|&i| {
                let cand_code = neighborhood(&candidate, w, h, i / w, i % w);
                psimple[codes[i] as usize * 256 + cand_code as usize]
            })
            .collect();
        if !removable.is_empty() {
            for i in removable {
                bits[i] = false;
            }
            continue;
        }
        used_directional_step = true;
        // north, south, east, west border candidates
        for &(dr, dc) in &[(-1isize, 0isize), (1, 0), (0, 1), (0, -1)] {
            let border: Vec<usize> = (0..w * h)
                .filter(|&i| candidate[i])
                .filter(|&i| {
                    let rr = (i / w) as isize + dr;
                    let cc = (i % w) as isize + dc;
                    rr < 0 || cc < 0 || rr as usize >= h || cc as usize >= w || !bits[rr as usize * w + cc as usize]
                })
                .collect();
            let mut deleted = false;
            for i in border {
                if deletable(neighborhood(&bits, w, h, i / w, i % w)) {
                    bits[i] = false;
                    deleted = true;
                }
            }
            if deleted {
                break;
            }
        }
    }

    let skel_mask = BinaryMask::new(w, h, bits).expect("same dimensions");
    SkeletonResult {
        source_components: count_components(mask, Connectivity::Eight),
        skeleton_components: count_components(&skel_mask, Connectivity::Eight),
        skeleton: skel_mask.to_pixel_set(),
        used_directional_step,
    }
}

/// Skeleton of one instance as it appears in `map` (the visible part only).
///
/// The instance mask is smoothed with [`smooth_mask`] and intersected with the
/// original mask before thinning. If smoothing empties the mask or changes its
/// number of components or holes, the unsmoothed mask is thinned instead.
pub fn local_skeleton(map: &LabelMap, id: u32, sigma: f64, level: f64) -> Result<PixelSet> {
    let bbox = *map.bboxes().get(&id).ok_or(Error::MissingInstance(id))?;
    local_skeleton_in(map, id, bbox, sigma, level)
}

/// Same as [`local_skeleton`] with the instance's bounding box supplied; work
/// is confined to the box padded by the smoothing support.
pub(crate) fn local_skeleton_in(map: &LabelMap, id: u32, bbox: Rect, sigma: f64, level: f64) -> Result<PixelSet> {
    let pad = (3.0 * sigma).ceil() as usize + 2;
    let window = bbox.padded(pad, map.width(), map.height());
    let mask = map.crop(window).mask_of(id);
    let smoothed = smooth_mask(&mask, sigma, level)?.and(&mask)?;
    let keeps_topology = !smoothed.is_empty()
        && count_components(&smoothed, Connectivity::Eight) == count_components(&mask, Connectivity::Eight)
        && count_background_components(&smoothed) == count_background_components(&mask);
    let source = if keeps_topology { &smoothed } else { &mask };
    let result = skeletonize(source);
    if result.skeleton.is_empty() {
        return Err(Error::EmptySkeleton(id));
    }
    Ok(result
        .skeleton
        .translated(window.row0, window.col0, map.width(), map.height()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::raster::Transform;

    fn disk(n: usize, radius: f64) -> BinaryMask {
        let c = (n / 2) as f64;
        BinaryMask::from_fn(n, n, |r, col| {
            let (dr, dc) = (r as f64 - c, col as f64 - c);
            dr * dr + dc * dc <= radius * radius
        })
        .unwrap()
    }

    #[test]
    fn simple_point_table_basics() {
        let t = simple_table();
        assert!(!t[0]); // isolated
        assert!(!t[255]); // interior
                          // only the east neighbor: end point, removal keeps topology
        assert!(t[1 << 3]);
        // east and west only: a bridge
        assert!(!t[(1 << 3) | (1 << 7)]);
    }

    #[test]
    fn simple_table_matches_global_topology_oracle() {
        // 5x5 patch with the 3x3 neighborhood in the middle and a background frame
        for code in 0..=255u8 {
            let with_center = BinaryMask::from_fn(5, 5, |r, c| {
                if r == 2 && c == 2 {
                    return true;
                }
                NB.iter()
                    .enumerate()
                    .any(|(i, &(dr, dc))| code & (1 << i) != 0 && r as isize == 2 + dr && c as isize == 2 + dc)
            })
            .unwrap();
            let mut without = with_center.clone();
            without.set(2, 2, false);
            let same = count_components(&with_center, Connectivity::Eight)
                == count_components(&without, Connectivity::Eight)
                && count_background_components(&with_center) == count_background_components(&without);
            assert_eq!(simple_table()[code as usize], same, "code {code:08b}");
        }
    }

    #[test]
    fn bar_is_its_own_skeleton() {
        for n in 2..8 {
            let m = BinaryMask::full(n, 1).unwrap();
            assert_eq!(skeletonize(&m).skeleton, m.to_pixel_set());
        }
    }

    #[test]
    fn disk_thins_to_a_few_center_pixels() {
        let m = disk(15, 5.0);
        let s = skeletonize(&m);
        assert!(s.skeleton.len() <= 3, "{:?}", s.skeleton);
        assert!(s.skeleton.contains((7, 7)));
        assert_eq!(s.skeleton_components, 1);
    }

    #[test]
    fn ring_thins_to_closed_loop() {
        let m = BinaryMask::from_fn(21, 21, |r, c| {
            let d2 = (r as i64 - 10).pow(2) + (c as i64 - 10).pow(2);
            (16..=64).contains(&d2)
        })
        .unwrap();
        let s = skeletonize(&m);
        let sm = s.skeleton.to_mask();
        assert_eq!(count_components(&sm, Connectivity::Eight), 1);
        assert_eq!(count_background_components(&sm), 2);
        // a closed curve: every pixel has at least two skeleton neighbors
        for (r, c) in s.skeleton.iter() {
            let code = neighborhood(sm.bits(), 21, 21, r, c);
            assert!(code.count_ones() >= 2);
        }
    }

    #[test]
    fn empty_mask_gives_empty_skeleton() {
        let s = skeletonize(&BinaryMask::empty(5, 5).unwrap());
        assert!(s.skeleton.is_empty());
        assert_eq!(s.source_components, 0);
    }

    #[test]
    fn odd_square_is_rotation_invariant() {
        let m = BinaryMask::from_fn(13, 13, |r, c| (2..11).contains(&r) && (2..11).contains(&c)).unwrap();
        let s = skeletonize(&m).skeleton;
        for t in Transform::ALL {
            assert_eq!(skeletonize(&m.transformed(t)).skeleton, s.transformed(t));
        }
    }

    #[test]
    fn two_thick_bar_needs_the_directional_step() {
        let m = BinaryMask::full(6, 2).unwrap();
        let s = skeletonize(&m);
        assert!(s.used_directional_step);
        assert_eq!(s.skeleton.len(), 6);
        assert_eq!(s.skeleton_components, 1);
    }

    #[test]
    fn tiny_instance_falls_back_to_unsmoothed() {
        let map = LabelMap::from_rows(&[[0, 0, 0, 0], [0, 3, 3, 0], [0, 0, 0, 0]]).unwrap();
        let s = local_skeleton(&map, 3, 2.0, 0.5).unwrap();
        assert!(!s.is_empty());
        assert!(matches!(
            local_skeleton(&map, 1, 2.0, 0.5),
            Err(Error::MissingInstance(1))
        ));
    }
}
