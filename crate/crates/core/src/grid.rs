//! Dense real-valued 2-D planes and 3-D volumes.
//!
//! Both are stored row-major with `x` (column) varying fastest. Volumes stack
//! planes along a third axis `k`, which is time for frame-difference data.

use crate::error::{Error, Result};

/// A 2-D grid of `f64` samples, indexed `(x, y)` with `x` the column.
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize) -> Self {
        Self::filled(width, height, 0.0)
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Plane {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    pub fn from_vec(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::Shape(format!(
                "plane {}x{} needs {} samples, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        Ok(Plane {
            width,
            height,
            data,
        })
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Plane {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Copies the `w`x`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Plane> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::OutOfBounds(format!(
                "crop {}x{} at ({}, {}) exceeds {}x{} plane",
                w, h, x0, y0, self.width, self.height
            )));
        }
        Ok(Plane::from_fn(w, h, |x, y| self.get(x0 + x, y0 + y)))
    }

    /// Lifts the plane into a depth-1 volume.
    pub fn into_volume(self) -> Volume {
        Volume {
            width: self.width,
            height: self.height,
            depth: 1,
            data: self.data,
        }
    }
}

/// A 3-D grid of `f64` samples, indexed `(x, y, k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    width: usize,
    height: usize,
    depth: usize,
    data: Vec<f64>,
}

impl Volume {
    pub fn new(width: usize, height: usize, depth: usize) -> Self {
        Volume {
            width,
            height,
            depth,
            data: vec![0.0; width * height * depth],
        }
    }

    pub fn from_vec(width: usize, height: usize, depth: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height * depth {
            return Err(Error::Shape(format!(
                "volume {}x{}x{} needs {} samples, got {}",
                width,
                height,
                depth,
                width * height * depth,
                data.len()
            )));
        }
        Ok(Volume {
            width,
            height,
            depth,
            data,
        })
    }

    /// Stacks equally sized planes along `k`.
    pub fn from_planes(planes: &[Plane]) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::Shape("cannot stack zero planes".into()))?;
        let (w, h) = first.dims();
        let mut data = Vec::with_capacity(w * h * planes.len());
        for p in planes {
            if p.dims() != (w, h) {
                return Err(Error::Shape(format!(
                    "plane {}x{} does not match {}x{}",
                    p.width, p.height, w, h
                )));
            }
            data.extend_from_slice(&p.data);
        }
        Ok(Volume {
            width: w,
            height: h,
            depth: planes.len(),
            data,
        })
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.depth
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize, usize) {
        (self.width, self.height, self.depth)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    fn index(&self, x: usize, y: usize, k: usize) -> usize {
        (k * self.height + y) * self.width + x
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, k: usize) -> f64 {
        self.data[self.index(x, y, k)]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, k: usize, value: f64) {
        let i = self.index(x, y, k);
        self.data[i] = value;
    }

    pub fn slice(&self, k: usize) -> Plane {
        let n = self.width * self.height;
        Plane {
            width: self.width,
            height: self.height,
            data: self.data[k * n..(k + 1) * n].to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Volume {
        Volume {
            width: self.width,
            height: self.height,
            depth: self.depth,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Keeps only the first `depth` slices.
    pub fn truncate_depth(&mut self, depth: usize) {
        if depth < self.depth {
            self.data.truncate(self.width * self.height * depth);
            self.depth = depth;
        }
    }

    /// Little-endian `f32` planes, slice after slice.
    pub fn to_f32_le_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() * 4);
        for &v in &self.data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
        out
    }
}

/// Symmetric (edge-repeating) reflection of `i` into `[0, n)`.
///
/// `-1 -> 0`, `-2 -> 1`, `n -> n - 1`, and so on, repeating with period `2n`.
#[inline]
pub(crate) fn reflect(i: isize, n: usize) -> usize {
    debug_assert!(n > 0);
    let n = n as isize;
    let period = 2 * n;
    let mut m = i.rem_euclid(period);
    if m >= n {
        m = period - 1 - m;
    }
    m as usize
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reflect_repeats_edges() {
        assert_eq!(reflect(-1, 4), 0);
        assert_eq!(reflect(-2, 4), 1);
        assert_eq!(reflect(4, 4), 3);
        assert_eq!(reflect(5, 4), 2);
        assert_eq!(reflect(8, 4), 0);
        assert_eq!(reflect(-9, 4), 0);
        for i in -20..20 {
            assert_eq!(reflect(i, 1), 0);
        }
    }

    #[test]
    fn volume_stacking_and_slicing() {
        let a = Plane::from_fn(3, 2, |x, y| (x + 10 * y) as f64);
        let b = a.map(|v| -v);
        let vol = Volume::from_planes(&[a.clone(), b.clone()]).unwrap();
        assert_eq!(vol.dims(), (3, 2, 2));
        assert_eq!(vol.slice(0), a);
        assert_eq!(vol.slice(1), b);
        assert_eq!(vol.get(2, 1, 1), -12.0);
    }

    #[test]
    fn mismatched_planes_rejected() {
        let a = Plane::new(3, 2);
        let b = Plane::new(2, 3);
        assert!(Volume::from_planes(&[a, b]).is_err());
    }

    #[test]
    fn crop_bounds() {
        let p = Plane::from_fn(5, 5, |x, y| (x * y) as f64);
        let c = p.crop(1, 2, 3, 3).unwrap();
        assert_eq!(c.get(2, 2), 12.0);
        assert!(p.crop(3, 3, 3, 3).is_err());
    }
}
