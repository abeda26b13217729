use crate::error::{Error, Result};

/// A separable, unit-volume Gaussian weighting window.
///
/// Each axis is sampled at the integer offsets `-h..=h` of its half-width `h`
/// with standard deviation `h / 3`, then rescaled so that the full window
/// sums to one. Axis order is `(x, y)` for a spatial window, `(t)` for a
/// temporal one and `(x, y, t)` for a space-time cuboid.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianWindow {
    axes: Vec<Vec<f64>>,
}

/// Spatial half-widths used throughout, `(L, M)`.
pub const SPATIAL_HALF_WIDTH: usize = 5;
/// Temporal half-width for 40-frame trajectory statistics.
pub const TEMPORAL_HALF_WIDTH_STATS: usize = 10;
/// Temporal half-width for the 10-frame trajectory search.
pub const TEMPORAL_HALF_WIDTH_SEARCH: usize = 5;

fn gaussian_axis(half_width: usize) -> Vec<f64> {
    let sigma = half_width as f64 / 3.0;
    let h = half_width as isize;
    let raw: Vec<f64> = (-h..=h)
        .map(|n| {
            let n = n.unsigned_abs() as f64;
            (-(n * n) / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|g| g / total).collect()
}

impl GaussianWindow {
    /// One axis per entry of `half_widths` (1 to 3 axes, each at least 1).
    pub fn new(half_widths: &[usize]) -> Result<Self> {
        if half_widths.is_empty() || half_widths.len() > 3 {
            return Err(Error::InvalidParameter(format!(
                "a window has 1 to 3 axes, got {}",
                half_widths.len()
            )));
        }
        if let Some(&bad) = half_widths.iter().find(|&&h| h == 0) {
            return Err(Error::InvalidParameter(format!(
                "window half-width must be at least 1, got {bad}"
            )));
        }
        Ok(GaussianWindow {
            axes: half_widths.iter().map(|&h| gaussian_axis(h)).collect(),
        })
    }

    pub fn spatial(l: usize, m: usize) -> Result<Self> {
        Self::new(&[l, m])
    }

    pub fn temporal(n: usize) -> Result<Self> {
        Self::new(&[n])
    }

    pub fn spatio_temporal(l: usize, m: usize, n: usize) -> Result<Self> {
        Self::new(&[l, m, n])
    }

    /// Builds a window from explicit per-axis taps. Each axis must have odd
    /// length, be symmetric, non-negative and sum to one.
    pub fn from_axes(axes: Vec<Vec<f64>>) -> Result<Self> {
        if axes.is_empty() || axes.len() > 3 {
            return Err(Error::InvalidParameter("a window has 1 to 3 axes".into()));
        }
        for a in &axes {
            let n = a.len();
            if n % 2 == 0 || n < 3 {
                return Err(Error::InvalidParameter(
                    "window axis length must be odd and at least 3".into(),
                ));
            }
            if a.iter().any(|&w| !(w >= 0.0) || !w.is_finite()) {
                return Err(Error::InvalidParameter(
                    "window taps must be non-negative".into(),
                ));
            }
            if (0..n).any(|i| a[i] != a[n - 1 - i]) {
                return Err(Error::InvalidParameter(
                    "window axis is not symmetric".into(),
                ));
            }
            let s: f64 = a.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParameter(format!("window axis sums to {s}")));
            }
        }
        Ok(GaussianWindow { axes })
    }

    pub fn ndim(&self) -> usize {
        self.axes.len()
    }

    pub fn half_widths(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len() / 2).collect()
    }

    /// The 1-D taps of axis `i`.
    pub fn axis(&self, i: usize) -> &[f64] {
        &self.axes[i]
    }

    /// All taps of the full window, first axis varying fastest.
    pub fn taps(&self) -> Vec<f64> {
        let mut out = vec![1.0];
        for axis in &self.axes {
            let mut next = Vec::with_capacity(out.len() * axis.len());
            for &w in axis {
                next.extend(out.iter().map(|&p| p * w));
            }
            out = next;
        }
        out
    }

    /// Taps per axis, `2h + 1` each.
    pub fn extent(&self) -> Vec<usize> {
        self.axes.iter().map(|a| a.len()).collect()
    }
}
