//! Single-scale Horn–Schunck optical flow.
//!
//! Derivatives use the original 2x2x2 cube stencils; the flow average uses
//! the 3x3 kernel with weights 1/6 on the 4-neighbors and 1/12 on the
//! diagonals. Each iteration is a Jacobi update from the previous iterate.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Plane;
use crate::norm::{smooth_plane, GaussianWindow};
use crate::video_io::FlowField;

/// Half-width of the optional presmoothing window.
pub const PREFILTER_HALF_WIDTH: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HsParams {
    /// Smoothness weight `alpha` (enters the update as `alpha^2`), for
    /// intensities on `[0, 255]`.
    pub smoothness_weight: f64,
    pub iterations: usize,
    /// Gaussian presmoothing of both frames.
    pub prefilter: bool,
}

impl Default for HsParams {
    fn default() -> Self {
        HsParams {
            smoothness_weight: 1.0,
            iterations: 100,
            prefilter: false,
        }
    }
}

impl HsParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.smoothness_weight > 0.0 && self.smoothness_weight.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "smoothness weight must be positive, got {}",
                self.smoothness_weight
            )));
        }
        if self.iterations == 0 {
            return Err(Error::InvalidParameter(
                "need at least one iteration".into(),
            ));
        }
        Ok(())
    }
}

/// Flow plus the RMS change of `(u, v)` at every iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct HsResult {
    pub flow: FlowField,
    pub residuals: Vec<f64>,
}

impl HsResult {
    /// `iteration,rms_change` rows, iterations counted from 1.
    pub fn residual_csv(&self) -> String {
        let mut out = String::from("iteration,rms_change\n");
        for (i, r) in self.residuals.iter().enumerate() {
            out.push_str(&format!("{},{}\n", i + 1, r));
        }
        out
    }
}

struct Derivatives {
    ex: Vec<f64>,
    ey: Vec<f64>,
    et: Vec<f64>,
}

fn derivatives(a: &Plane, b: &Plane) -> Derivatives {
    let (w, h) = a.dims();
    let at = |p: &Plane, x: usize, y: usize| p.get(x.min(w - 1), y.min(h - 1));
    let n = w * h;
    let (mut ex, mut ey, mut et) = (vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for y in 0..h {
        for x in 0..w {
            let c = |p: &Plane, dx: usize, dy: usize| at(p, x + dx, y + dy);
            let i = y * w + x;
            ex[i] = 0.25
                * (c(a, 1, 0) - c(a, 0, 0) + c(a, 1, 1) - c(a, 0, 1) + c(b, 1, 0) - c(b, 0, 0)
                    + c(b, 1, 1)
                    - c(b, 0, 1));
            ey[i] = 0.25
                * (c(a, 0, 1) - c(a, 0, 0) + c(a, 1, 1) - c(a, 1, 0) + c(b, 0, 1) - c(b, 0, 0)
                    + c(b, 1, 1)
                    - c(b, 1, 0));
            et[i] = 0.25
                * (c(b, 0, 0) - c(a, 0, 0) + c(b, 1, 0) - c(a, 1, 0) + c(b, 0, 1) - c(a, 0, 1)
                    + c(b, 1, 1)
                    - c(a, 1, 1));
        }
    }
    Derivatives { ex, ey, et }
}

/// Weighted neighborhood average with edge replication.
fn local_average(f: &[f64], w: usize, h: usize, y: usize) -> Vec<f64> {
    let up = y.saturating_sub(1);
    let down = (y + 1).min(h - 1);
    (0..w)
        .map(|x| {
            let left = x.saturating_sub(1);
            let right = (x + 1).min(w - 1);
            let g = |xx: usize, yy: usize| f[yy * w + xx];
            (g(left, y) + g(right, y) + g(x, up) + g(x, down)) / 6.0
                + (g(left, up) + g(right, up) + g(left, down) + g(right, down)) / 12.0
        })
        .collect()
}

/// Horn–Schunck flow from `a` to `b`, starting from zero flow.
pub fn horn_schunck(a: &Plane, b: &Plane, params: &HsParams) -> Result<HsResult> {
    params.validate()?;
    if a.dims() != b.dims() {
        return Err(Error::Shape(format!(
            "frames are {}x{} and {}x{}",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    let (w, h) = a.dims();
    if w == 0 || h == 0 {
        return Err(Error::EmptySamples);
    }
    let (a, b) = if params.prefilter {
        let win = GaussianWindow::spatial(PREFILTER_HALF_WIDTH, PREFILTER_HALF_WIDTH)?;
        (smooth_plane(a, &win)?, smooth_plane(b, &win)?)
    } else {
        (a.clone(), b.clone())
    };
    let d = derivatives(&a, &b);
    let alpha2 = params.smoothness_weight * params.smoothness_weight;
    let mut u = vec![0.0; w * h];
    let mut v = vec![0.0; w * h];
    let mut residuals = Vec::with_capacity(params.iterations);
    for _ in 0..params.iterations {
        let rows: Vec<(Vec<f64>, Vec<f64>)> = (0..h)
            .into_par_iter()
            .map(|y| {
                let ub = local_average(&u, w, h, y);
                let vb = local_average(&v, w, h, y);
                let mut nu = Vec::with_capacity(w);
                let mut nv = Vec::with_capacity(w);
                for x in 0..w {
                    let i = y * w + x;
                    let (ex, ey, et) = (d.ex[i], d.ey[i], d.et[i]);
                    let k = (ex * ub[x] + ey * vb[x] + et) / (alpha2 + ex * ex + ey * ey);
                    nu.push(ub[x] - ex * k);
                    nv.push(vb[x] - ey * k);
                }
                (nu, nv)
            })
            .collect();
        let mut change = 0.0;
        for (y, (nu, nv)) in rows.into_iter().enumerate() {
            for x in 0..w {
                let i = y * w + x;
                change += (nu[x] - u[i]).powi(2) + (nv[x] - v[i]).powi(2);
                u[i] = nu[x];
                v[i] = nv[x];
            }
        }
        residuals.push((change / (w * h) as f64).sqrt());
    }
    let flow = FlowField::from_parts(
        w,
        h,
        u.iter().map(|&x| x as f32).collect(),
        v.iter().map(|&x| x as f32).collect(),
        None,
    )?;
    Ok(HsResult { flow, residuals })
}
