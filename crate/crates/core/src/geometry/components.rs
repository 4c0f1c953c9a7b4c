use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, LabelMap, PixelSet};

/// Pixel adjacency used for labeling and flooding.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Connectivity {
    Four,
    Eight,
}

pub(crate) const N4: [(isize, isize); 4] = [(-1, 0), (0, -1), (0, 1), (1, 0)];
pub(crate) const N8: [(isize, isize); 8] = [(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)];

impl Connectivity {
    pub(crate) fn offsets(self) -> &'static [(isize, isize)] {
        match self {
            Connectivity::Four => &N4,
            Connectivity::Eight => &N8,
        }
    }
}

/// In-bounds neighbors of `(row, col)` for the given offsets.
#[inline]
pub(crate) fn neighbors(
    row: usize,
    col: usize,
    width: usize,
    height: usize,
    offsets: &'static [(isize, isize)],
) -> impl Iterator<Item = (usize, usize)> {
    offsets.iter().filter_map(move |&(dr, dc)| {
        let r = row as isize + dr;
        let c = col as isize + dc;
        (r >= 0 && c >= 0 && (r as usize) < height && (c as usize) < width).then_some((r as usize, c as usize))
    })
}

/// Labels maximal connected components `1..n` in row-major first-encounter order.
pub fn connected_components(mask: &BinaryMask, connectivity: Connectivity) -> LabelMap {
    let (w, h) = (mask.width(), mask.height());
    let mut labels = vec![0u32; w * h];
    let mut next = 0u32;
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits()[start] || labels[start] != 0 {
            continue;
        }
        next += 1;
        labels[start] = next;
        queue.push_back(start);
        while let Some(i) = queue.pop_front() {
            for (r, c) in neighbors(i / w, i % w, w, h, connectivity.offsets()) {
                let j = r * w + c;
                if mask.bits()[j] && labels[j] == 0 {
                    labels[j] = next;
                    queue.push_back(j);
                }
            }
        }
    }
    LabelMap::new(w, h, labels).expect("dimensions come from a valid mask")
}

pub fn count_components(mask: &BinaryMask, connectivity: Connectivity) -> usize {
    connected_components(mask, connectivity).max_id() as usize
}

/// Number of 4-connected background components, counting everything outside
/// the grid as one surrounding component. Equals the hole count plus one.
pub fn count_background_components(mask: &BinaryMask) -> usize {
    let (w, h) = (mask.width(), mask.height());
    let padded = BinaryMask::from_fn(w + 2, h + 2, |r, c| {
        r == 0 || c == 0 || r == h + 1 || c == w + 1 || !mask.get(r - 1, c - 1)
    })
    .expect("padded dimensions are positive");
    count_components(&padded, Connectivity::Four)
}

/// Pixels of instance `id` with at least one in-bounds 8-neighbor carrying a
/// different id (background included). The image border alone does not make
/// a pixel boundary.
pub fn boundary_set(map: &LabelMap, id: u32) -> Result<PixelSet> {
    if !map.contains_id(id) {
        return Err(Error::MissingInstance(id));
    }
    let (w, h) = (map.width(), map.height());
    let mut coords = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if map.get(r, c) == id && neighbors(r, c, w, h, &N8).any(|(nr, nc)| map.get(nr, nc) != id) {
                coords.push((r, c));
            }
        }
    }
    PixelSet::new(w, h, coords)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_mask_has_no_components() {
        let m = BinaryMask::empty(4, 4).unwrap();
        assert!(connected_components(&m, Connectivity::Eight).is_empty());
    }

    #[test]
    fn diagonal_pair_depends_on_connectivity() {
        let m = BinaryMask::from_ascii(&["#.", ".#"]).unwrap();
        assert_eq!(count_components(&m, Connectivity::Eight), 1);
        assert_eq!(count_components(&m, Connectivity::Four), 2);
    }

    #[test]
    fn labels_follow_first_encounter_order() {
        let m = BinaryMask::from_ascii(&["..#", "#..", "#.#"]).unwrap();
        let l = connected_components(&m, Connectivity::Four);
        assert_eq!(l.labels(), &[0, 0, 1, 2, 0, 0, 2, 0, 3]);
    }

    #[test]
    fn ring_has_one_hole() {
        let m = BinaryMask::from_ascii(&["###", "#.#", "###"]).unwrap();
        assert_eq!(count_background_components(&m), 2);
        let solid = BinaryMask::full(3, 3).unwrap();
        assert_eq!(count_background_components(&solid), 1);
    }

    #[test]
    fn single_pixel_instance_is_its_own_boundary() {
        let map = LabelMap::from_rows(&[[0, 0, 0], [0, 4, 0], [0, 0, 0]]).unwrap();
        let b = boundary_set(&map, 4).unwrap();
        assert_eq!(b.iter().collect::<Vec<_>>(), vec![(1, 1)]);
    }

    #[test]
    fn solid_square_boundary_is_its_ring() {
        let map = LabelMap::new(
            7,
            7,
            (0..49)
                .map(|i| {
                    let (r, c) = (i / 7, i % 7);
                    u32::from((1..6).contains(&r) && (1..6).contains(&c))
                })
                .collect(),
        )
        .unwrap();
        let b = boundary_set(&map, 1).unwrap();
        // brute-force neighborhood scan
        let expect: Vec<_> = (0..7)
            .flat_map(|r| (0..7).map(move |c| (r, c)))
            .filter(|&(r, c)| {
                map.get(r, c) == 1
                    && (-1i32..=1).any(|dr| {
                        (-1i32..=1).any(|dc| map.get((r as i32 + dr) as usize, (c as i32 + dc) as usize) != 1)
                    })
            })
            .collect();
        assert_eq!(b.len(), 16);
        assert_eq!(b.iter().collect::<Vec<_>>(), expect);
    }

    #[test]
    fn full_grid_instance_has_empty_boundary() {
        let map = LabelMap::new(3, 2, vec![2; 6]).unwrap();
        assert!(boundary_set(&map, 2).unwrap().is_empty());
        assert!(matches!(boundary_set(&map, 9), Err(Error::MissingInstance(9))));
    }
}
