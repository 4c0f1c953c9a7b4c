use crate::error::{Error, Result};
use crate::raster::BinaryMask;
use crate::scalar::Real;

/// Unnormalized Gaussian weights for offsets `-radius..=radius`, radius `ceil(3 sigma)`.
fn kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as isize;
    (-radius..=radius)
        .map(|k| (-((k * k) as f64) / (2.0 * sigma * sigma)).exp())
        .collect()
}

/// Separable weighted sum along rows then columns; out-of-grid samples contribute nothing.
fn convolve(values: &[f64], width: usize, height: usize, k: &[f64]) -> Vec<f64> {
    let radius = (k.len() / 2) as isize;
    let mut tmp = vec![0.0; values.len()];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (i, &wk) in k.iter().enumerate() {
                let cc = c as isize + i as isize - radius;
                if cc >= 0 && (cc as usize) < width {
                    acc += wk * values[r * width + cc as usize];
                }
            }
            tmp[r * width + c] = acc;
        }
    }
    let mut out = vec![0.0; values.len()];
    for r in 0..height {
        for c in 0..width {
            let mut acc = 0.0;
            for (i, &wk) in k.iter().enumerate() {
                let rr = r as isize + i as isize - radius;
                if rr >= 0 && (rr as usize) < height {
                    acc += wk * tmp[rr as usize * width + c];
                }
            }
            out[r * width + c] = acc;
        }
    }
    out
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !sigma.is_finite() || sigma < 0.0 {
        return Err(Error::InvalidParam(format!("sigma {sigma} must be >= 0")));
    }
    Ok(())
}

/// Gaussian-blurs the 0/1 indicator (kernel renormalized where it leaves the
/// grid) and keeps pixels whose blurred value is at least `level`.
pub fn smooth_mask(mask: &BinaryMask, sigma: f64, level: f64) -> Result<BinaryMask> {
    check_sigma(sigma)?;
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidParam(format!("level {level} must lie in (0, 1)")));
    }
    if sigma == 0.0 {
        return Ok(mask.clone());
    }
    let (w, h) = (mask.width(), mask.height());
    let k = kernel(sigma);
    let indicator: Vec<f64> = mask.bits().iter().map(|&b| f64::from(u8::from(b))).collect();
    let num = convolve(&indicator, w, h, &k);
    let den = convolve(&vec![1.0; w * h], w, h, &k);
    BinaryMask::new(w, h, num.iter().zip(&den).map(|(n, d)| n / d >= level).collect())
}

/// Normalized convolution of `values` restricted to `support`: each supported
/// pixel becomes the Gaussian-weighted mean of supported pixels around it.
/// Unsupported pixels are returned unchanged.
pub fn blur_masked<T: Real>(values: &[T], support: &BinaryMask, sigma: f64) -> Result<Vec<T>> {
    check_sigma(sigma)?;
    let (w, h) = (support.width(), support.height());
    if values.len() != w * h {
        return Err(Error::SizeMismatch {
            expected: w * h,
            found: values.len(),
        });
    }
    if sigma == 0.0 {
        return Ok(values.to_vec());
    }
    let k = kernel(sigma);
    let weight: Vec<f64> = support.bits().iter().map(|&b| f64::from(u8::from(b))).collect();
    let masked: Vec<f64> = values.iter().zip(&weight).map(|(v, m)| v.as_f64() * m).collect();
    let num = convolve(&masked, w, h, &k);
    let den = convolve(&weight, w, h, &k);
    Ok(values
        .iter()
        .enumerate()
        .map(|(i, &v)| if support.bits()[i] { T::lit(num[i] / den[i]) } else { v })
        .collect())
}
