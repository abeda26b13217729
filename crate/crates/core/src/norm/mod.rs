//! Gaussian windows, MSCN coefficients and divisive normalization of
//! frame-difference volumes.

mod divisive;
mod window;

pub use divisive::{
    divisive_normalize, mean_variance, mscn, smooth_plane, unit_variance, NormKind,
    NormalizedVolume, DIVISIVE_C, MSCN_C,
};
pub use window::{
    GaussianWindow, SPATIAL_HALF_WIDTH, TEMPORAL_HALF_WIDTH_SEARCH, TEMPORAL_HALF_WIDTH_STATS,
};
