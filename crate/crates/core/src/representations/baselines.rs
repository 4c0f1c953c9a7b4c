use rayon::prelude::*;

use super::{Encoding, SdtParams};
use crate::diagnostic::Diagnostic;
use crate::error::{Error, Result};
use crate::geometry::{boundary_set, distance_to_set, neighbors, DistanceField, N8};
use crate::raster::{BinaryMask, EnergyMap, LabelMap, PixelSet, Rect, BACKGROUND};
use crate::scalar::Real;
use crate::skeleton::local_skeleton_in;

/// Boundary pixels of all instances: foreground pixels with an in-bounds
/// 8-neighbor of a different id.
pub fn encode_boundary(map: &LabelMap) -> BinaryMask {
    let (w, h) = (map.width(), map.height());
    BinaryMask::from_fn(w, h, |r, c| {
        let id = map.get(r, c);
        id != 0 && neighbors(r, c, w, h, &N8).any(|(nr, nc)| map.get(nr, nc) != id)
    })
    .expect("dimensions come from a valid map")
}

/// Boundary map as energy: 0 on boundary, 1 on the rest of the foreground,
/// background sentinel elsewhere.
pub fn boundary_energy<T: Real>(boundary: &BinaryMask, foreground: &BinaryMask) -> Result<EnergyMap<T>> {
    if !boundary.same_shape(foreground) {
        return Err(Error::Dimensions("boundary and foreground differ in size".into()));
    }
    let values = boundary
        .bits()
        .iter()
        .zip(foreground.bits())
        .map(|(&b, &f)| match (f, b) {
            (false, _) => T::lit(BACKGROUND),
            (true, true) => T::zero(),
            (true, false) => T::one(),
        })
        .collect();
    EnergyMap::new(boundary.width(), boundary.height(), values)
}

struct InstanceDistance<T> {
    values: Vec<(usize, T)>,
    empty_boundary: bool,
}

fn instance_dt<T: Real>(map: &LabelMap, id: u32, bbox: Rect) -> Result<InstanceDistance<T>> {
    let (w, h) = (map.width(), map.height());
    let window = bbox.padded(1, w, h);
    let local = map.crop(window);
    let mask = local.mask_of(id);
    let boundary = boundary_set(&local, id)?;
    let to_global = |r: usize, c: usize| (r + window.row0) * w + c + window.col0;
    if boundary.is_empty() {
        return Ok(InstanceDistance {
            values: mask.pixels().map(|(r, c)| (to_global(r, c), T::one())).collect(),
            empty_boundary: true,
        });
    }
    let d: DistanceField<T> = distance_to_set(&mask, &boundary)?;
    Ok(InstanceDistance {
        values: mask
            .pixels()
            .map(|(r, c)| (to_global(r, c), d.get(r, c).expect("inside domain")))
            .collect(),
        empty_boundary: false,
    })
}

fn per_instance_dt<T: Real>(map: &LabelMap) -> Result<Vec<(u32, InstanceDistance<T>)>> {
    let boxes: Vec<(u32, Rect)> = map.bboxes().into_iter().collect();
    boxes
        .par_iter()
        .map(|&(id, bbox)| Ok((id, instance_dt(map, id, bbox)?)))
        .collect()
}

/// Distance of every foreground pixel to its own instance's boundary, in
/// pixels. An instance without boundary gets distance 1 everywhere.
pub fn encode_dt_raw<T: Real>(map: &LabelMap) -> Result<Vec<Option<T>>> {
    let mut out = vec![None; map.len()];
    for (_, part) in per_instance_dt::<T>(map)? {
        for (i, v) in part.values {
            out[i] = Some(v);
        }
    }
    Ok(out)
}

/// Distance to the instance boundary divided by the instance's maximum, so one
/// seed threshold serves both this and the skeleton-aware energy.
pub fn encode_dt<T: Real>(map: &LabelMap) -> Result<Encoding<T>> {
    let mut values = vec![T::lit(BACKGROUND); map.len()];
    let mut diagnostics = Vec::new();
    for (id, part) in per_instance_dt::<T>(map)? {
        if part.empty_boundary {
            diagnostics.push(Diagnostic::EmptyBoundary { id });
        }
        let max = part.values.iter().fold(T::zero(), |m, &(_, v)| m.max(v));
        for (i, v) in part.values {
            values[i] = if max > T::zero() { v / max } else { T::zero() };
        }
    }
    Ok(Encoding {
        energy: EnergyMap::new(map.width(), map.height(), values)?,
        diagnostics,
    })
}

/// Skeleton pixels with the distance from each to its instance boundary.
#[derive(Clone, Debug, PartialEq)]
pub struct SkeletonScales<T> {
    skeleton: PixelSet,
    scales: Vec<T>,
}

impl<T: Real> SkeletonScales<T> {
    /// `scales[i]` belongs to the `i`-th skeleton pixel in row-major order.
    pub fn new(skeleton: PixelSet, scales: Vec<T>) -> Result<Self> {
        if scales.len() != skeleton.len() {
            return Err(Error::SizeMismatch {
                expected: skeleton.len(),
                found: scales.len(),
            });
        }
        if let Some(s) = scales.iter().find(|s| !s.is_finite() || **s < T::zero()) {
            return Err(Error::Range(format!("scale {s} must be finite and >= 0")));
        }
        Ok(Self { skeleton, scales })
    }

    pub fn skeleton(&self) -> &PixelSet {
        &self.skeleton
    }

    pub fn scales(&self) -> &[T] {
        &self.scales
    }

    /// Skeleton probability channel (1 on skeleton, 0 elsewhere) and the scale
    /// channel (0 off the skeleton), both row-major.
    pub fn to_channels(&self) -> (Vec<T>, Vec<T>) {
        let (w, h) = (self.skeleton.width(), self.skeleton.height());
        let mut prob = vec![T::zero(); w * h];
        let mut scale = vec![T::zero(); w * h];
        for ((r, c), &s) in self.skeleton.iter().zip(&self.scales) {
            prob[r * w + c] = T::one();
            scale[r * w + c] = s;
        }
        (prob, scale)
    }

    /// Inverse of [`to_channels`](Self::to_channels); a pixel is on the
    /// skeleton when its probability is at least one half.
    pub fn from_channels(width: usize, height: usize, prob: &[T], scale: &[T]) -> Result<Self> {
        if prob.len() != width * height || scale.len() != width * height {
            return Err(Error::SizeMismatch {
                expected: width * height,
                found: prob.len().min(scale.len()),
            });
        }
        let half = T::lit(0.5);
        let idx: Vec<usize> = (0..width * height).filter(|&i| prob[i] >= half).collect();
        let skeleton = PixelSet::new(width, height, idx.iter().map(|&i| (i / width, i % width)))?;
        Self::new(skeleton, idx.iter().map(|&i| scale[i]).collect())
    }
}

/// Local skeleton of each instance with scale = distance to the instance boundary.
pub fn encode_ss<T: Real>(map: &LabelMap, params: &SdtParams<T>) -> Result<SkeletonScales<T>> {
    let (w, h) = (map.width(), map.height());
    let boxes: Vec<(u32, Rect)> = map.bboxes().into_iter().collect();
    let parts: Vec<Vec<((usize, usize), T)>> = boxes
        .par_iter()
        .map(|&(id, bbox)| -> Result<_> {
            let skeleton = local_skeleton_in(map, id, bbox, params.sigma, params.level)?;
            let window = bbox.padded(1, w, h);
            let local = map.crop(window);
            let mask = local.mask_of(id);
            let boundary = boundary_set(&local, id)?;
            let local_skel = skeleton.crop(window);
            if boundary.is_empty() {
                // no boundary: the instance is the whole grid, measure to the frame
                return Ok(skeleton
                    .iter()
                    .map(|(r, c)| {
                        let d = (r + 1).min(c + 1).min(h - r).min(w - c);
                        ((r, c), T::from_usize_lossy(d))
                    })
                    .collect());
            }
            let d: DistanceField<T> = distance_to_set(&mask, &boundary)?;
            Ok(local_skel
                .iter()
                .map(|(r, c)| {
                    (
                        (r + window.row0, c + window.col0),
                        d.get(r, c).expect("skeleton inside instance"),
                    )
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let mut all: Vec<((usize, usize), T)> = parts.into_iter().flatten().collect();
    all.sort_by_key(|&(p, _)| p);
    let skeleton = PixelSet::new(w, h, all.iter().map(|&(p, _)| p))?;
    SkeletonScales::new(skeleton, all.into_iter().map(|(_, s)| s).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_map(n: usize, lo: usize, hi: usize) -> LabelMap {
        LabelMap::new(
            n,
            n,
            (0..n * n)
                .map(|i| u32::from((lo..hi).contains(&(i / n)) && (lo..hi).contains(&(i % n))))
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn single_pixel_is_boundary() {
        let map = LabelMap::from_rows(&[[0, 0, 0], [0, 1, 0], [0, 0, 0]]).unwrap();
        assert_eq!(encode_boundary(&map).pixels().collect::<Vec<_>>(), vec![(1, 1)]);
    }

    #[test]
    fn touching_instances_mark_both_rows() {
        let map = LabelMap::from_rows(&[[1, 1, 1, 1], [1, 1, 1, 1], [2, 2, 2, 2], [2, 2, 2, 2]]).unwrap();
        let b = encode_boundary(&map);
        for c in 0..4 {
            assert!(b.get(1, c) && b.get(2, c));
            assert!(!b.get(0, c) && !b.get(3, c));
        }
    }

    #[test]
    fn five_square_has_sixteen_boundary_pixels() {
        let map = square_map(7, 1, 6);
        let b = encode_boundary(&map);
        assert_eq!(b.count(), 16);
        assert_eq!(map.foreground().and_not(&b).unwrap().count(), 9);
    }

    #[test]
    fn dt_boundary_zero_and_center_one() {
        let map = square_map(9, 1, 8); // 7x7, r = 3
        let e = encode_dt::<f64>(&map).unwrap().energy;
        assert_eq!(e.get(1, 1), Some(0.0));
        assert_eq!(e.get(4, 4), Some(1.0));
        let raw = encode_dt_raw::<f64>(&map).unwrap();
        assert_eq!(raw[4 * 9 + 4], Some(3.0));
        assert_eq!(raw[0], None);
    }

    #[test]
    fn ss_of_bar_has_zero_scales() {
        let map = LabelMap::from_rows(&[[0; 7], [0, 1, 1, 1, 1, 1, 0], [0; 7]]).unwrap();
        let ss = encode_ss(&map, &SdtParams::<f64>::default()).unwrap();
        assert_eq!(ss.skeleton().len(), 5);
        assert!(ss.scales().iter().all(|&s| s == 0.0));
    }

    #[test]
    fn channels_round_trip() {
        let map = square_map(12, 2, 10);
        let ss = encode_ss(&map, &SdtParams::<f32>::default()).unwrap();
        let (p, s) = ss.to_channels();
        assert_eq!(SkeletonScales::from_channels(12, 12, &p, &s).unwrap(), ss);
    }
}
