//! Encoders from label maps to intermediate representations.
//!
//! [`encode_sdt`] is the skeleton-aware distance transform; the boundary map,
//! plain distance transform and skeleton-with-scales encoders are baselines.
//! [`quantize`]/[`dequantize`] map energies to and from `K` classification bins.

mod baselines;
mod quantize;
mod sdt;

pub use baselines::{boundary_energy, encode_boundary, encode_dt, encode_dt_raw, encode_ss, SkeletonScales};
pub use quantize::{dequantize, quantize, QuantParams, QuantizedMap};
pub use sdt::{encode_sdt, sdt_value, SdtParams};

use crate::diagnostic::Diagnostic;
use crate::raster::EnergyMap;

/// Smoothing applied before skeletonization.
pub const DEFAULT_SIGMA: f64 = 2.0;
pub const DEFAULT_LEVEL: f64 = 0.5;

/// An encoded energy map plus anything worth reporting about it.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoding<T> {
    pub energy: EnergyMap<T>,
    pub diagnostics: Vec<Diagnostic>,
}
