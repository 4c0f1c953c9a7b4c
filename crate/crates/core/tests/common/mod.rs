//! Brute-force oracles shared by the integration tests.

#![allow(dead_code)]

use std::collections::{BTreeMap, VecDeque};

use sdt::{BinaryMask, LabelMap, Pixel};

pub fn dist(a: Pixel, b: Pixel) -> f64 {
    let dr = a.0 as f64 - b.0 as f64;
    let dc = a.1 as f64 - b.1 as f64;
    (dr * dr + dc * dc).sqrt()
}

/// Distance from every pixel to the nearest of `sources`, all pairs.
pub fn brute_distance(w: usize, h: usize, sources: &[Pixel]) -> Vec<f64> {
    let mut out = vec![f64::INFINITY; w * h];
    for r in 0..h {
        for c in 0..w {
            for &s in sources {
                out[r * w + c] = out[r * w + c].min(dist((r, c), s));
            }
        }
    }
    out
}

pub fn directed(from: &[Pixel], to: &[Pixel]) -> f64 {
    from.iter()
        .map(|&a| to.iter().map(|&b| dist(a, b)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

pub fn brute_hausdorff(a: &[Pixel], b: &[Pixel]) -> f64 {
    directed(a, b).max(directed(b, a))
}

fn eight(r: usize, c: usize, w: usize, h: usize) -> impl Iterator<Item = Pixel> {
    (-1isize..=1)
        .flat_map(move |dr| (-1isize..=1).map(move |dc| (dr, dc)))
        .filter(|&d| d != (0, 0))
        .map(move |(dr, dc)| (r as isize + dr, c as isize + dc))
        .filter(move |&(rr, cc)| rr >= 0 && cc >= 0 && (rr as usize) < h && (cc as usize) < w)
        .map(|(rr, cc)| (rr as usize, cc as usize))
}

/// Instance pixels with a differing 8-neighbour or lying on the image border.
pub fn brute_contour(map: &LabelMap, id: u32) -> Vec<Pixel> {
    let (w, h) = (map.width(), map.height());
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if map.get(r, c) != id {
                continue;
            }
            let border = r == 0 || c == 0 || r + 1 == h || c + 1 == w;
            if border || eight(r, c, w, h).any(|(a, b)| map.get(a, b) != id) {
                out.push((r, c));
            }
        }
    }
    out
}

/// Pixels of `id` with a differing in-bounds 8-neighbour.
pub fn brute_boundary(map: &LabelMap, id: u32) -> Vec<Pixel> {
    let (w, h) = (map.width(), map.height());
    let mut out = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if map.get(r, c) == id && eight(r, c, w, h).any(|(a, b)| map.get(a, b) != id) {
                out.push((r, c));
            }
        }
    }
    out
}

/// Connected components of the pixels where `on` holds, by breadth-first search.
pub fn count_by_flood(w: usize, h: usize, on: impl Fn(usize, usize) -> bool, eight_connected: bool) -> usize {
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if seen[start] || !on(start / w, start % w) {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (r, c) = (i / w, i % w);
            for (a, b) in eight(r, c, w, h) {
                if !eight_connected && a != r && b != c {
                    continue;
                }
                let j = a * w + b;
                if !seen[j] && on(a, b) {
                    seen[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    count
}

/// 8-connected foreground components.
pub fn foreground_components(mask: &BinaryMask) -> usize {
    count_by_flood(mask.width(), mask.height(), |r, c| mask.get(r, c), true)
}

/// 4-connected background components, with everything outside the grid
/// counted as background.
pub fn background_components(mask: &BinaryMask) -> usize {
    let (w, h) = (mask.width() + 2, mask.height() + 2);
    count_by_flood(
        w,
        h,
        |r, c| r == 0 || c == 0 || r + 1 == h || c + 1 == w || !mask.get(r - 1, c - 1),
        false,
    )
}

/// Object Hausdorff distance computed directly from its definition: every
/// instance is paired with the opposing instance it overlaps most (ties to
/// the lowest id), else the nearest opposing instance, else the image frame;
/// the per-pair symmetric Hausdorff distances of contours are area weighted
/// on each side and the two sides averaged. When one map is empty the two
/// sides are summed.
pub fn oracle_object_hausdorff(pred: &LabelMap, gt: &LabelMap) -> f64 {
    let (w, h) = (gt.width(), gt.height());
    let pixels_of = |m: &LabelMap| {
        let mut by_id: BTreeMap<u32, Vec<Pixel>> = BTreeMap::new();
        for r in 0..h {
            for c in 0..w {
                let id = m.get(r, c);
                if id != 0 {
                    by_id.entry(id).or_default().push((r, c));
                }
            }
        }
        by_id
    };
    let (pp, gp) = (pixels_of(pred), pixels_of(gt));
    if pp.is_empty() && gp.is_empty() {
        return 0.0;
    }
    let frame: Vec<Pixel> = (0..h)
        .flat_map(|r| (0..w).map(move |c| (r, c)))
        .filter(|&(r, c)| r == 0 || c == 0 || r + 1 == h || c + 1 == w)
        .collect();
    let side = |mine: &LabelMap,
                my_px: &BTreeMap<u32, Vec<Pixel>>,
                theirs: &LabelMap,
                their_px: &BTreeMap<u32, Vec<Pixel>>| {
        let total: usize = my_px.values().map(Vec::len).sum();
        let mut acc = 0.0;
        for (&id, px) in my_px {
            let mut overlap: BTreeMap<u32, usize> = BTreeMap::new();
            for &(r, c) in px {
                let o = theirs.get(r, c);
                if o != 0 {
                    *overlap.entry(o).or_insert(0) += 1;
                }
            }
            // ids ascend, so a strict comparison keeps the lowest id on ties
            let mut partner: Option<(u32, usize)> = None;
            for (&o, &n) in &overlap {
                if partner.is_none_or(|(_, best)| n > best) {
                    partner = Some((o, n));
                }
            }
            let partner = partner.map(|(o, _)| o).or_else(|| {
                let mut nearest: Option<(f64, u32)> = None;
                for (&o, opx) in their_px {
                    let d = px
                        .iter()
                        .flat_map(|&a| opx.iter().map(move |&b| dist(a, b)))
                        .fold(f64::INFINITY, f64::min);
                    if nearest.is_none_or(|(best, _)| d < best) {
                        nearest = Some((d, o));
                    }
                }
                nearest.map(|(_, o)| o)
            });
            let target = match partner {
                Some(o) => brute_contour(theirs, o),
                None => frame.clone(),
            };
            acc += px.len() as f64 / total as f64 * brute_hausdorff(&brute_contour(mine, id), &target);
        }
        acc
    };
    let g = side(gt, &gp, pred, &pp);
    let s = side(pred, &pp, gt, &gp);
    if pp.is_empty() || gp.is_empty() {
        g + s
    } else {
        0.5 * (g + s)
    }
}
