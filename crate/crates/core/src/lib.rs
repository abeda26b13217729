//! Space-time statistics of natural video and motion estimation by
//! statistical regularity.
//!
//! The pipeline: collect displaced frame differences along a trajectory
//! ([`trajectories`]), divisively normalize them over time, space or both
//! ([`norm`]), and measure how far the normalized coefficients are from a
//! unit Gaussian ([`stats`]). Differences taken along the true motion are
//! the most Gaussian, which [`regularity`] turns into a motion estimator.
//! [`horn_schunck`] and [`evaluation`] provide a classical baseline and the
//! usual error metrics.

// `!(x > 0.0)` style guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod evaluation;
pub mod grid;
pub mod horn_schunck;
pub mod norm;
pub mod regularity;
pub mod stats;
pub mod synthetic;
pub mod trajectories;
pub mod video_io;

pub use error::{Error, Result};
pub use grid::{Plane, Volume};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/differences.md")]
    mod differences {}
    #[doc = include_str!("../../../book/src/normalization.md")]
    mod normalization {}
    #[doc = include_str!("../../../book/src/statistics.md")]
    mod statistics {}
    #[doc = include_str!("../../../book/src/regularity.md")]
    mod regularity {}
    #[doc = include_str!("../../../book/src/search.md")]
    mod search {}
    #[doc = include_str!("../../../book/src/horn_schunck.md")]
    mod horn_schunck {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
