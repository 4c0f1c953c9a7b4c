//! Exact Euclidean distance transform by separable lower envelopes of parabolas.
//!
//! Squared distances are integers, so both passes run in `i64` and the only
//! floating point step is the final square root. The breakpoints of the
//! envelope are rationals with denominator at most `2n`, which `f64` orders
//! exactly for any grid that fits in memory.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, PixelSet};
use crate::scalar::Real;

const INF: i64 = i64::MAX / 4;
const PAR_THRESHOLD: usize = 1 << 14;

/// Distances from a source set, defined only on a domain.
#[derive(Clone, Debug, PartialEq)]
pub struct DistanceField<T> {
    width: usize,
    height: usize,
    values: Vec<T>,
    defined: Vec<bool>,
}

impl<T: Real> DistanceField<T> {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    /// Distance at a pixel, `None` outside the domain.
    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Option<T> {
        let i = row * self.width + col;
        self.defined[i].then(|| self.values[i])
    }

    #[inline]
    pub(crate) fn at(&self, index: usize) -> T {
        self.values[index]
    }

    /// Largest defined value, `None` if the domain is empty.
    pub fn max(&self) -> Option<T> {
        self.values
            .iter()
            .zip(&self.defined)
            .filter(|(_, &d)| d)
            .map(|(&v, _)| v)
            .fold(None, |acc: Option<T>, v| Some(acc.map_or(v, |a| a.max(v))))
    }
}

/// One-dimensional squared distance transform of a sampled function `f`
/// (entries `>= INF` mean "no source here").
fn envelope_1d(f: &[i64], out: &mut [i64], v: &mut Vec<usize>, z: &mut Vec<f64>) {
    v.clear();
    z.clear();
    for (q, &fq) in f.iter().enumerate() {
        if fq >= INF {
            continue;
        }
        let hq = fq + (q * q) as i64;
        let mut s = f64::NEG_INFINITY;
        while let Some(&p) = v.last() {
            let hp = f[p] + (p * p) as i64;
            s = (hq - hp) as f64 / (2 * (q - p)) as f64;
            if s <= *z.last().expect("z tracks v") {
                v.pop();
                z.pop();
                s = f64::NEG_INFINITY;
            } else {
                break;
            }
        }
        v.push(q);
        z.push(s);
    }
    if v.is_empty() {
        out.fill(INF);
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while k + 1 < v.len() && z[k + 1] < q as f64 {
            k += 1;
        }
        let d = q as i64 - v[k] as i64;
        *o = d * d + f[v[k]];
    }
}

fn run_lines(data: &mut [i64], line: usize, parallel: bool) {
    let pass = |chunk: &mut [i64], v: &mut Vec<usize>, z: &mut Vec<f64>, tmp: &mut Vec<i64>| {
        tmp.clear();
        tmp.extend_from_slice(chunk);
        envelope_1d(tmp, chunk, v, z);
    };
    if parallel {
        data.par_chunks_mut(line).for_each_init(
            || (Vec::new(), Vec::new(), Vec::new()),
            |(v, z, tmp), chunk| pass(chunk, v, z, tmp),
        );
    } else {
        let (mut v, mut z, mut tmp) = (Vec::new(), Vec::new(), Vec::new());
        for chunk in data.chunks_mut(line) {
            pass(chunk, &mut v, &mut z, &mut tmp);
        }
    }
}

/// Squared Euclidean distance from every pixel to the nearest set pixel of
/// `source`; `None` everywhere when the source is empty.
pub fn squared_distance_transform(source: &BinaryMask) -> Option<Vec<i64>> {
    let (w, h) = (source.width(), source.height());
    if source.is_empty() {
        return None;
    }
    let parallel = w * h >= PAR_THRESHOLD;
    // column pass on a transposed copy so every line is contiguous
    let mut cols = vec![INF; w * h];
    for r in 0..h {
        for c in 0..w {
            if source.get(r, c) {
                cols[c * h + r] = 0;
            }
        }
    }
    run_lines(&mut cols, h, parallel);
    let mut rows = vec![INF; w * h];
    for c in 0..w {
        for r in 0..h {
            rows[r * w + c] = cols[c * h + r];
        }
    }
    run_lines(&mut rows, w, parallel);
    Some(rows)
}

/// Exact Euclidean distance from each domain pixel to the nearest source pixel.
///
/// Distances are measured between pixel centers across the whole grid, not
/// geodesically inside the domain.
pub fn distance_to_set<T: Real>(domain: &BinaryMask, source: &PixelSet) -> Result<DistanceField<T>> {
    if source.width() != domain.width() || source.height() != domain.height() {
        return Err(Error::Dimensions(format!(
            "source grid {}x{} vs domain {}x{}",
            source.width(),
            source.height(),
            domain.width(),
            domain.height()
        )));
    }
    let sq = squared_distance_transform(&source.to_mask()).ok_or(Error::EmptySource)?;
    let values = sq
        .iter()
        .zip(domain.bits())
        .map(
            |(&d2, &inside)| {
                if inside {
                    T::lit((d2 as f64).sqrt())
                } else {
                    T::zero()
                }
            },
        )
        .collect();
    Ok(DistanceField {
        width: domain.width(),
        height: domain.height(),
        values,
        defined: domain.bits().to_vec(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn full(w: usize, h: usize) -> BinaryMask {
        BinaryMask::full(w, h).unwrap()
    }

    #[test]
    fn source_pixels_are_zero() {
        let src = PixelSet::new(5, 4, [(1, 2), (3, 0)]).unwrap();
        let d = distance_to_set::<f64>(&full(5, 4), &src).unwrap();
        assert_eq!(d.get(1, 2), Some(0.0));
        assert_eq!(d.get(3, 0), Some(0.0));
    }

    #[test]
    fn diagonal_neighbor_is_sqrt2() {
        let src = PixelSet::new(3, 3, [(0, 0)]).unwrap();
        let d = distance_to_set::<f64>(&full(3, 3), &src).unwrap();
        assert_eq!(d.get(1, 1), Some(2f64.sqrt()));
        assert_eq!(d.get(2, 2), Some(8f64.sqrt()));
    }

    #[test]
    fn empty_source_is_an_error() {
        let src = PixelSet::empty(3, 3);
        assert!(matches!(
            distance_to_set::<f64>(&full(3, 3), &src),
            Err(Error::EmptySource)
        ));
    }

    #[test]
    fn outside_domain_is_undefined() {
        let dom = BinaryMask::from_ascii(&["#.", "##"]).unwrap();
        let src = PixelSet::new(2, 2, [(1, 1)]).unwrap();
        let d = distance_to_set::<f32>(&dom, &src).unwrap();
        assert_eq!(d.get(0, 1), None);
        assert_eq!(d.get(0, 0), Some(2f32.sqrt()));
        assert_eq!(d.max(), Some(2f32.sqrt()));
    }

    #[test]
    fn parallel_and_sequential_agree() {
        // 160x160 crosses the parallel threshold; compare against single-thread pool
        let mask = BinaryMask::from_fn(160, 160, |r, c| (r * 31 + c * 17) % 97 == 0).unwrap();
        let par = squared_distance_transform(&mask).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let seq = pool.install(|| squared_distance_transform(&mask).unwrap());
        assert_eq!(par, seq);
    }
}
