use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}: file not found")]
    MissingFile(PathBuf),

    #[error("{path}: frame is {got_w}x{got_h}, expected {want_w}x{want_h}")]
    DimensionMismatch {
        path: PathBuf,
        want_w: usize,
        want_h: usize,
        got_w: usize,
        got_h: usize,
    },

    #[error("{path}: unsupported image ({detail}); need 8-bit single-channel PGM or PNG")]
    UnsupportedPixel { path: PathBuf, detail: String },

    #[error("{path}: {detail}")]
    Decode { path: PathBuf, detail: String },

    #[error("bad .flo magic {0} (expected 202021.25)")]
    BadMagic(f32),

    #[error("truncated .flo payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("out of bounds: {0}")]
    OutOfBounds(String),

    #[error("non-finite value in input")]
    NonFinite,

    #[error("zero-variance input cannot be normalized")]
    ZeroVariance,

    #[error("empty sample set")]
    EmptySamples,

    #[error("histograms use different binnings")]
    BinningMismatch,

    #[error("moment ratio {ratio} has no shape root in [0.1, 10]")]
    RootNotBracketed { ratio: f64 },

    #[error("invalid ground-truth flow at ({x}, {y})")]
    InvalidFlow { x: i64, y: i64 },

    #[error("regularity map has no finite entry")]
    AllInfinite,

    #[error("no search candidate stays inside the frame")]
    NoCandidates,

    #[error("no pixel is valid in both flow fields")]
    NoValidPixels,
}
