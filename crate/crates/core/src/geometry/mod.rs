//! Grid geometry: exact distance transforms, connected components, boundary
//! extraction, binary morphology and Gaussian smoothing.

mod components;
mod edt;
mod morphology;
mod smooth;

pub use components::{boundary_set, connected_components, count_background_components, count_components, Connectivity};
pub(crate) use components::{neighbors, N8};
pub use edt::{distance_to_set, squared_distance_transform, DistanceField};
pub use morphology::{dilate_square, dilate_with_radii, erode_square, fill_holes, remove_small};
pub use smooth::{blur_masked, smooth_mask};
