use crate::error::{Error, Result};
use crate::raster::{EnergyMap, BACKGROUND};
use crate::scalar::Real;

/// Number of energy bins `K`; class 0 is background, classes `1..=K` are bins.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct QuantParams {
    bins: u16,
}

impl QuantParams {
    pub fn new(bins: u16) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParam("bins must be >= 1".into()));
        }
        Ok(Self { bins })
    }

    pub fn bins(&self) -> u16 {
        self.bins
    }
}

impl Default for QuantParams {
    /// Ten bins of width 0.1.
    fn default() -> Self {
        Self { bins: 10 }
    }
}

/// Per-pixel class indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuantizedMap {
    width: usize,
    height: usize,
    classes: Vec<u16>,
}

impl QuantizedMap {
    pub fn new(width: usize, height: usize, classes: Vec<u16>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Format(format!("degenerate dimensions {width}x{height}")));
        }
        if classes.len() != width * height {
            return Err(Error::SizeMismatch {
                expected: width * height,
                found: classes.len(),
            });
        }
        Ok(Self { width, height, classes })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn classes(&self) -> &[u16] {
        &self.classes
    }
}

/// Bin index of one foreground energy: `min(floor(e K) + 1, K)`, bins left-closed.
///
/// The floor is taken of the exact product of the binary value of `e` and `K`,
/// so `0.3f64` (slightly below 3/10) lands in bin 3.
pub fn bin_of<T: Real>(e: T, bins: u16) -> u16 {
    let k = T::from(bins).expect("bin count representable");
    let mut c = (e * k).floor();
    // fused residuals have the exact sign of e*K - c
    if e.mul_add(k, -c) < T::zero() {
        c = c - T::one();
    } else if e.mul_add(k, -(c + T::one())) >= T::zero() {
        c = c + T::one();
    }
    let c = c.to_i64().unwrap_or(0).max(0);
    (c + 1).min(i64::from(bins)) as u16
}

/// Midpoint `(c - 0.5) / K` of bin `c`.
pub fn bin_midpoint<T: Real>(class: u16, bins: u16) -> T {
    T::from(2 * u32::from(class) - 1).expect("small integer") / T::from(2 * u32::from(bins)).expect("small integer")
}

pub fn quantize<T: Real>(energy: &EnergyMap<T>, params: QuantParams) -> QuantizedMap {
    let classes = energy
        .values()
        .iter()
        .map(|&e| if e >= T::zero() { bin_of(e, params.bins) } else { 0 })
        .collect();
    QuantizedMap {
        width: energy.width(),
        height: energy.height(),
        classes,
    }
}

/// Class 0 becomes background; class `c` becomes its bin midpoint.
pub fn dequantize<T: Real>(q: &QuantizedMap, params: QuantParams) -> Result<EnergyMap<T>> {
    let values = q
        .classes
        .iter()
        .enumerate()
        .map(|(i, &c)| match c {
            0 => Ok(T::lit(BACKGROUND)),
            c if c <= params.bins => Ok(bin_midpoint(c, params.bins)),
            c => Err(Error::Range(format!(
                "class {c} at pixel ({}, {}) exceeds {} bins",
                i / q.width,
                i % q.width,
                params.bins
            ))),
        })
        .collect::<Result<Vec<T>>>()?;
    EnergyMap::new(q.width, q.height, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bin_examples() {
        assert_eq!(bin_of(0.0f64, 10), 1);
        assert_eq!(bin_of(1.0f64, 10), 10);
        assert_eq!(bin_of(0.75f64, 10), 8);
        assert_eq!(bin_of(0.5f64, 10), 6);
        assert_eq!(bin_of(0.625f32, 10), 7);
        assert_eq!(bin_of(0.5f64, 1), 1);
    }

    #[test]
    fn floor_uses_the_binary_value() {
        // 0.3f64 and 0.7f64 sit just below 3/10 and 7/10, 0.1f64 just above 1/10
        assert_eq!(bin_of(0.3f64, 10), 3);
        assert_eq!(bin_of(0.7f64, 10), 7);
        assert_eq!(bin_of(0.1f64, 10), 2);
        assert_eq!(bin_of(f64::from(0.3f32), 10), 4);
        assert_eq!(bin_of(0.5f64, 1), 1);
    }

    #[test]
    fn midpoint_examples() {
        assert_eq!(bin_midpoint::<f64>(10, 10), 0.95);
        assert_eq!(bin_midpoint::<f64>(1, 10), 0.05);
    }

    #[test]
    fn class_above_k_is_an_error() {
        let q = QuantizedMap::new(2, 1, vec![0, 11]).unwrap();
        assert!(matches!(
            dequantize::<f64>(&q, QuantParams::default()),
            Err(Error::Range(_))
        ));
        assert!(QuantParams::new(0).is_err());
    }

    #[test]
    fn background_round_trips() {
        let e = EnergyMap::<f64>::new(3, 1, vec![-1.0, 0.0, 1.0]).unwrap();
        let q = quantize(&e, QuantParams::default());
        assert_eq!(q.classes(), &[0, 1, 10]);
        let d = dequantize::<f64>(&q, QuantParams::default()).unwrap();
        assert_eq!(d.values(), &[-1.0, 0.05, 0.95]);
    }
}
