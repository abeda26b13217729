//! Middlebury `.flo` optical-flow files.
//!
//! Layout (little-endian throughout): `f32` magic `202021.25`, `i32` width,
//! `i32` height, then `width * height` interleaved `(u, v)` `f32` pairs in
//! row-major order.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const FLO_MAGIC: f32 = 202021.25;
/// Components at or above this magnitude mark a cell as unknown.
pub const UNKNOWN_THRESHOLD: f32 = 1e9;
/// Value written for both components of an invalid cell.
pub const UNKNOWN_FLOW: f32 = 1e10;

const HEADER_LEN: usize = 12;

#[inline]
fn is_unknown(c: f32) -> bool {
    !c.is_finite() || c.abs() >= UNKNOWN_THRESHOLD
}

/// Per-pixel displacement `(u, v)` in pixels per frame, with a validity mask.
///
/// Invalid cells always carry at least one out-of-range component, so the
/// mask survives a trip through a `.flo` file unchanged.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowField {
    width: usize,
    height: usize,
    u: Vec<f32>,
    v: Vec<f32>,
    valid: Vec<bool>,
}

impl FlowField {
    /// An all-zero, all-valid field.
    pub fn zeros(width: usize, height: usize) -> Self {
        FlowField {
            width,
            height,
            u: vec![0.0; width * height],
            v: vec![0.0; width * height],
            valid: vec![true; width * height],
        }
    }

    /// A field filled with `(u, v)`.
    pub fn constant(width: usize, height: usize, u: f32, v: f32) -> Self {
        let mut f = FlowField::zeros(width, height);
        for i in 0..width * height {
            f.u[i] = u;
            f.v[i] = v;
        }
        f
    }

    /// Builds a field from raw component planes. Cells whose components are
    /// out of range become invalid; cells marked invalid in `valid` get the
    /// unknown sentinel unless they already hold an out-of-range component.
    pub fn from_parts(
        width: usize,
        height: usize,
        mut u: Vec<f32>,
        mut v: Vec<f32>,
        valid: Option<Vec<bool>>,
    ) -> Result<Self> {
        let n = width * height;
        if u.len() != n || v.len() != n || valid.as_ref().is_some_and(|m| m.len() != n) {
            return Err(Error::Shape(format!(
                "flow components do not match {width}x{height}"
            )));
        }
        let mut mask = valid.unwrap_or_else(|| vec![true; n]);
        for i in 0..n {
            let raw_unknown = is_unknown(u[i]) || is_unknown(v[i]);
            if raw_unknown {
                mask[i] = false;
            } else if !mask[i] {
                u[i] = UNKNOWN_FLOW;
                v[i] = UNKNOWN_FLOW;
            }
        }
        Ok(FlowField {
            width,
            height,
            u,
            v,
            valid: mask,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    fn idx(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    /// `(u, v)` at `(x, y)`, or `None` when the cell is invalid.
    #[inline]
    pub fn get(&self, x: usize, y: usize) -> Option<(f32, f32)> {
        let i = self.idx(x, y);
        self.valid[i].then(|| (self.u[i], self.v[i]))
    }

    #[inline]
    pub fn is_valid(&self, x: usize, y: usize) -> bool {
        self.valid[self.idx(x, y)]
    }

    /// Stores a vector; out-of-range components invalidate the cell.
    pub fn set(&mut self, x: usize, y: usize, u: f32, v: f32) {
        let i = self.idx(x, y);
        self.u[i] = u;
        self.v[i] = v;
        self.valid[i] = !(is_unknown(u) || is_unknown(v));
    }

    pub fn invalidate(&mut self, x: usize, y: usize) {
        let i = self.idx(x, y);
        self.u[i] = UNKNOWN_FLOW;
        self.v[i] = UNKNOWN_FLOW;
        self.valid[i] = false;
    }

    /// Invalidates every cell where `mask` is false, e.g. a dataset's
    /// uncertainty labels.
    pub fn apply_mask(&mut self, mask: &[bool]) -> Result<()> {
        if mask.len() != self.valid.len() {
            return Err(Error::Shape("mask size differs from flow field".into()));
        }
        for y in 0..self.height {
            for x in 0..self.width {
                if !mask[self.idx(x, y)] && self.is_valid(x, y) {
                    self.invalidate(x, y);
                }
            }
        }
        Ok(())
    }

    pub fn u(&self) -> &[f32] {
        &self.u
    }

    pub fn v(&self) -> &[f32] {
        &self.v
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&b| b).count()
    }

    /// Encodes the field in `.flo` layout.
    pub fn to_flo_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.u.len());
        out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
        out.extend_from_slice(&(self.width as i32).to_le_bytes());
        out.extend_from_slice(&(self.height as i32).to_le_bytes());
        for i in 0..self.u.len() {
            let (u, v) = if self.valid[i] || is_unknown(self.u[i]) || is_unknown(self.v[i]) {
                (self.u[i], self.v[i])
            } else {
                (UNKNOWN_FLOW, UNKNOWN_FLOW)
            };
            out.extend_from_slice(&u.to_le_bytes());
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    /// Decodes `.flo` bytes. Trailing bytes past the declared payload are
    /// ignored.
    pub fn from_flo_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < HEADER_LEN {
            return Err(Error::Truncated {
                expected: HEADER_LEN,
                found: bytes.len(),
            });
        }
        let word = |o: usize| [bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]];
        let magic = f32::from_le_bytes(word(0));
        if magic.to_bits() != FLO_MAGIC.to_bits() {
            return Err(Error::BadMagic(magic));
        }
        let width = i32::from_le_bytes(word(4));
        let height = i32::from_le_bytes(word(8));
        if width <= 0 || height <= 0 {
            return Err(Error::InvalidParameter(format!(
                "non-positive .flo dimensions {width}x{height}"
            )));
        }
        let (width, height) = (width as usize, height as usize);
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Error::InvalidParameter("absurd .flo dimensions".into()))?;
        let expected = HEADER_LEN + 8 * n;
        if bytes.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        let mut u = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            let o = HEADER_LEN + 8 * i;
            u.push(f32::from_le_bytes(word(o)));
            v.push(f32::from_le_bytes(word(o + 4)));
        }
        FlowField::from_parts(width, height, u, v, None)
    }
}

pub fn read_flo(path: &Path) -> Result<FlowField> {
    let bytes = fs::read(path).map_err(|source| {
        if source.kind() == std::io::ErrorKind::NotFound {
            Error::MissingFile(path.to_path_buf())
        } else {
            Error::Io {
                path: path.to_path_buf(),
                source,
            }
        }
    })?;
    FlowField::from_flo_bytes(&bytes)
}

pub fn write_flo(field: &FlowField, path: &Path) -> Result<()> {
    if field.width == 0 || field.height == 0 {
        return Err(Error::InvalidParameter("flow field has zero size".into()));
    }
    fs::write(path, field.to_flo_bytes()).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}
