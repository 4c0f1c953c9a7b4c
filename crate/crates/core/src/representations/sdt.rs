use rayon::prelude::*;

use super::{Encoding, DEFAULT_LEVEL, DEFAULT_SIGMA};
use crate::diagnostic::Diagnostic;
use crate::error::{Error, Result};
use crate::geometry::{boundary_set, distance_to_set, neighbors, N8};
use crate::raster::{EnergyMap, LabelMap, Rect, BACKGROUND};
use crate::scalar::Real;
use crate::skeleton::local_skeleton_in;

/// Parameters of the skeleton-aware energy.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SdtParams<T> {
    /// Curvature exponent; below 1 the energy rises quickly off the boundary.
    pub alpha: T,
    /// Guard added to the denominator.
    pub epsilon: T,
    /// Gaussian sigma used to smooth the instance before thinning.
    pub sigma: f64,
    /// Threshold applied to the smoothed indicator.
    pub level: f64,
}

impl<T: Real> SdtParams<T> {
    pub fn new(alpha: T, epsilon: T, sigma: f64, level: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= T::zero() {
            return Err(Error::InvalidParam(format!("alpha {alpha} must be > 0")));
        }
        if epsilon.is_nan() || epsilon <= T::zero() {
            return Err(Error::InvalidParam(format!("epsilon {epsilon} must be > 0")));
        }
        if !sigma.is_finite() || sigma < 0.0 {
            return Err(Error::InvalidParam(format!("sigma {sigma} must be >= 0")));
        }
        if !(level > 0.0 && level < 1.0) {
            return Err(Error::InvalidParam(format!("level {level} must lie in (0, 1)")));
        }
        Ok(Self {
            alpha,
            epsilon,
            sigma,
            level,
        })
    }

    pub fn with_alpha(alpha: T) -> Result<Self> {
        let d = Self::default();
        Self::new(alpha, d.epsilon, d.sigma, d.level)
    }
}

impl<T: Real> Default for SdtParams<T> {
    fn default() -> Self {
        Self {
            alpha: T::lit(0.8),
            epsilon: T::lit(1e-6),
            sigma: DEFAULT_SIGMA,
            level: DEFAULT_LEVEL,
        }
    }
}

/// `(d_b / (d_s + d_b + eps))^alpha` for one pixel.
#[inline]
pub fn sdt_value<T: Real>(to_boundary: T, to_skeleton: T, params: &SdtParams<T>) -> T {
    (to_boundary / (to_skeleton + to_boundary + params.epsilon)).powf(params.alpha)
}

struct InstanceEnergy<T> {
    values: Vec<(usize, T)>,
    diagnostic: Option<Diagnostic>,
}

fn encode_instance<T: Real>(map: &LabelMap, id: u32, bbox: Rect, params: &SdtParams<T>) -> Result<InstanceEnergy<T>> {
    let (w, h) = (map.width(), map.height());
    let window = bbox.padded(1, w, h);
    let local = map.crop(window);
    let mask = local.mask_of(id);
    let to_global = |r: usize, c: usize| (r + window.row0) * w + c + window.col0;

    let boundary = boundary_set(&local, id)?;
    if boundary.is_empty() {
        let values = mask.pixels().map(|(r, c)| (to_global(r, c), T::one())).collect();
        return Ok(InstanceEnergy {
            values,
            diagnostic: Some(Diagnostic::EmptyBoundary { id }),
        });
    }
    let skeleton = local_skeleton_in(map, id, bbox, params.sigma, params.level)?.crop(window);
    let d_boundary = distance_to_set::<T>(&mask, &boundary)?;
    let d_skeleton = distance_to_set::<T>(&mask, &skeleton)?;

    let values = mask
        .pixels()
        .map(|(r, c)| {
            let e = match (skeleton.contains((r, c)), boundary.contains((r, c))) {
                (true, false) => T::one(),
                (false, true) => T::zero(),
                // skeleton pixel on the boundary (a part one or two pixels wide):
                // it stays a seed unless it touches another instance
                (true, true) => {
                    let touches_other = neighbors(r, c, local.width(), local.height(), &N8).any(|(nr, nc)| {
                        let l = local.get(nr, nc);
                        l != 0 && l != id
                    });
                    if touches_other {
                        T::zero()
                    } else {
                        T::one()
                    }
                }
                (false, false) => {
                    let i = r * mask.width() + c;
                    sdt_value(d_boundary.at(i), d_skeleton.at(i), params)
                }
            };
            (to_global(r, c), e)
        })
        .collect();
    Ok(InstanceEnergy {
        values,
        diagnostic: None,
    })
}

/// Skeleton-aware distance transform of every instance in `map`.
///
/// Per instance: 0 on its boundary, 1 on its local skeleton, and
/// `(d_b / (d_s + d_b + eps))^alpha` in between, where `d_b` and `d_s` are the
/// exact Euclidean distances to the boundary and skeleton. Skeleton pixels that
/// are also boundary pixels get 1 when all their differing neighbors are
/// background and 0 when they touch another instance, so high-energy regions of
/// different instances never touch. An instance filling the whole grid has no
/// boundary; it is set to 1 and reported.
pub fn encode_sdt<T: Real>(map: &LabelMap, params: &SdtParams<T>) -> Result<Encoding<T>> {
    let boxes: Vec<(u32, Rect)> = map.bboxes().into_iter().collect();
    let parts: Vec<InstanceEnergy<T>> = boxes
        .par_iter()
        .map(|&(id, bbox)| encode_instance(map, id, bbox, params))
        .collect::<Result<_>>()?;
    let mut values = vec![T::lit(BACKGROUND); map.len()];
    let mut diagnostics = Vec::new();
    for part in parts {
        for (i, v) in part.values {
            values[i] = v;
        }
        diagnostics.extend(part.diagnostic);
    }
    Ok(Encoding {
        energy: EnergyMap::new(map.width(), map.height(), values)?,
        diagnostics,
    })
}
