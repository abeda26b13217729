use serde::{Deserialize, Serialize};

use super::window::GaussianWindow;
use crate::error::{Error, Result};
use crate::grid::{reflect, Plane, Volume};

/// Saturation constant of the frame-difference normalization.
pub const DIVISIVE_C: f64 = 0.5;
/// Default saturation constant for MSCN on `[0, 255]` images.
pub const MSCN_C: f64 = 1.0;

/// Which axes pool the contrast divisor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NormKind {
    /// Temporal: 1-D window along `k`.
    Tdn,
    /// Spatial: 2-D window within each slice.
    Sdn,
    /// Spatio-temporal: 3-D cuboid.
    Stdn,
    /// Mean-subtracted contrast-normalized image (depth 1).
    Mscn2d,
}

impl NormKind {
    /// Volume axes the window runs along, in window-axis order.
    fn volume_axes(self) -> &'static [usize] {
        match self {
            NormKind::Tdn => &[2],
            NormKind::Sdn | NormKind::Mscn2d => &[0, 1],
            NormKind::Stdn => &[0, 1, 2],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            NormKind::Tdn => "tdn",
            NormKind::Sdn => "sdn",
            NormKind::Stdn => "stdn",
            NormKind::Mscn2d => "mscn2d",
        }
    }
}

impl std::fmt::Display for NormKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for NormKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tdn" => Ok(NormKind::Tdn),
            "sdn" => Ok(NormKind::Sdn),
            "stdn" => Ok(NormKind::Stdn),
            "mscn2d" | "mscn" => Ok(NormKind::Mscn2d),
            other => Err(Error::InvalidParameter(format!(
                "unknown normalization {other:?}"
            ))),
        }
    }
}

/// Normalized coefficients and how they were produced.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalizedVolume {
    pub coeffs: Volume,
    pub kind: NormKind,
    pub c: f64,
}

impl NormalizedVolume {
    pub fn as_slice(&self) -> &[f64] {
        self.coeffs.as_slice()
    }
}

/// Convolves `data` (laid out as a `w x h x d` volume) with `taps` along
/// one axis, reflecting symmetrically at the borders.
fn convolve_axis(data: &[f64], dims: (usize, usize, usize), axis: usize, taps: &[f64]) -> Vec<f64> {
    let (w, h, d) = dims;
    let (len, stride) = match axis {
        0 => (w, 1),
        1 => (h, w),
        _ => (d, w * h),
    };
    let half = (taps.len() / 2) as isize;
    let mut out = vec![0.0; data.len()];
    let mut line = vec![0.0; len];
    let mut starts = Vec::with_capacity(data.len() / len.max(1));
    match axis {
        0 => {
            for k in 0..d {
                for y in 0..h {
                    starts.push((k * h + y) * w);
                }
            }
        }
        1 => {
            for k in 0..d {
                for x in 0..w {
                    starts.push(k * h * w + x);
                }
            }
        }
        _ => {
            for y in 0..h {
                for x in 0..w {
                    starts.push(y * w + x);
                }
            }
        }
    }
    for s in starts {
        for (i, slot) in line.iter_mut().enumerate() {
            *slot = data[s + i * stride];
        }
        for i in 0..len {
            let mut acc = 0.0;
            for (j, &t) in taps.iter().enumerate() {
                let src = reflect(i as isize + j as isize - half, len);
                acc += t * line[src];
            }
            out[s + i * stride] = acc;
        }
    }
    out
}

fn smooth(
    data: &[f64],
    dims: (usize, usize, usize),
    kind: NormKind,
    window: &GaussianWindow,
) -> Vec<f64> {
    let mut cur = data.to_vec();
    for (wi, &axis) in kind.volume_axes().iter().enumerate() {
        cur = convolve_axis(&cur, dims, axis, window.axis(wi));
    }
    cur
}

/// Gaussian-weighted local mean and RMS deviation about that mean.
///
/// Both are computed on the input minus its global mean; the deviation is
/// shift-invariant, and the shift keeps `E[x^2] - E[x]^2` from cancelling
/// catastrophically on large offsets.
fn local_moments(
    data: &[f64],
    dims: (usize, usize, usize),
    kind: NormKind,
    window: &GaussianWindow,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let n = data.len() as f64;
    let global = data.iter().sum::<f64>() / n;
    let shifted: Vec<f64> = data.iter().map(|v| v - global).collect();
    let sq: Vec<f64> = shifted.iter().map(|v| v * v).collect();
    let mu = smooth(&shifted, dims, kind, window);
    let m2 = smooth(&sq, dims, kind, window);
    let sigma = mu
        .iter()
        .zip(&m2)
        .map(|(m, s)| (s - m * m).max(0.0).sqrt())
        .collect();
    (shifted, mu, sigma)
}

fn check_window(kind: NormKind, window: &GaussianWindow) -> Result<()> {
    let need = kind.volume_axes().len();
    if window.ndim() != need {
        return Err(Error::Shape(format!(
            "{kind} needs a {need}-D window, got {}-D",
            window.ndim()
        )));
    }
    Ok(())
}

/// Mean-subtracted, contrast-normalized coefficients of a single image:
/// `(I - mu) / (sigma + c)` with Gaussian-weighted local `mu` and `sigma`.
pub fn mscn(image: &Plane, c: f64, window: &GaussianWindow) -> Result<NormalizedVolume> {
    check_window(NormKind::Mscn2d, window)?;
    if image.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "saturation constant must be positive, got {c}"
        )));
    }
    let dims = (image.width(), image.height(), 1);
    let (shifted, mu, sigma) = local_moments(image.as_slice(), dims, NormKind::Mscn2d, window);
    let coeffs: Vec<f64> = shifted
        .iter()
        .zip(mu.iter().zip(&sigma))
        .map(|(x, (m, s))| (x - m) / (s + c))
        .collect();
    Ok(NormalizedVolume {
        coeffs: Volume::from_vec(dims.0, dims.1, 1, coeffs)?,
        kind: NormKind::Mscn2d,
        c,
    })
}

/// Divides each sample by the local RMS contrast (plus `c`), pooled along
/// the axes of `kind`. The numerator is not mean-subtracted.
pub fn divisive_normalize(
    volume: &Volume,
    kind: NormKind,
    window: &GaussianWindow,
    c: f64,
) -> Result<NormalizedVolume> {
    if kind == NormKind::Mscn2d {
        return Err(Error::InvalidParameter(
            "use mscn() for image normalization".into(),
        ));
    }
    check_window(kind, window)?;
    if !(c > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "saturation constant must be positive, got {c}"
        )));
    }
    if volume.is_empty() {
        return Err(Error::EmptySamples);
    }
    if volume.as_slice().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    let (_, _, sigma) = local_moments(volume.as_slice(), volume.dims(), kind, window);
    let coeffs: Vec<f64> = volume
        .as_slice()
        .iter()
        .zip(&sigma)
        .map(|(x, s)| x / (s + c))
        .collect();
    let (w, h, d) = volume.dims();
    Ok(NormalizedVolume {
        coeffs: Volume::from_vec(w, h, d, coeffs)?,
        kind,
        c,
    })
}

/// Separable Gaussian smoothing of a plane, reflecting at the borders.
pub fn smooth_plane(plane: &Plane, window: &GaussianWindow) -> Result<Plane> {
    check_window(NormKind::Mscn2d, window)?;
    let dims = (plane.width(), plane.height(), 1);
    Plane::from_vec(
        plane.width(),
        plane.height(),
        smooth(plane.as_slice(), dims, NormKind::Mscn2d, window),
    )
}

/// Population mean and variance.
pub fn mean_variance(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var)
}

/// Rescales coefficients to unit sample variance over the whole volume.
pub fn unit_variance(volume: &NormalizedVolume) -> Result<NormalizedVolume> {
    let xs = volume.coeffs.as_slice();
    if xs.is_empty() {
        return Err(Error::EmptySamples);
    }
    let (mean, var) = mean_variance(xs);
    let max_dev = xs.iter().map(|x| (x - mean).abs()).fold(0.0, f64::max);
    if !(var > 0.0) || max_dev <= 8.0 * f64::EPSILON * mean.abs() || !var.is_finite() {
        return Err(Error::ZeroVariance);
    }
    let scale = var.sqrt().recip();
    Ok(NormalizedVolume {
        coeffs: volume.coeffs.map(|x| x * scale),
        kind: volume.kind,
        c: volume.c,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::norm::window::GaussianWindow;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise_volume(w: usize, h: usize, d: usize, seed: u64) -> Volume {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..w * h * d)
            .map(|_| rng.random_range(-50.0..50.0))
            .collect();
        Volume::from_vec(w, h, d, data).unwrap()
    }

    #[test]
    fn constant_image_has_zero_mscn() {
        let img = Plane::filled(16, 12, 128.0);
        let w = GaussianWindow::spatial(5, 5).unwrap();
        let out = mscn(&img, MSCN_C, &w).unwrap();
        assert!(out.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn bright_pixel_center_positive_neighbors_negative() {
        // 3x3 toy window (1/4, 1/2, 1/4) per axis, single bright pixel on black.
        let w = GaussianWindow::from_axes(vec![vec![0.25, 0.5, 0.25]; 2]).unwrap();
        let mut img = Plane::new(7, 7);
        img.set(3, 3, 255.0);
        let out = mscn(&img, 1.0, &w).unwrap();
        let at = |x, y| out.coeffs.get(x, y, 0);
        assert!(at(3, 3) > 0.0);
        for (x, y) in [(2, 3), (4, 3), (3, 2), (3, 4), (2, 2), (4, 4)] {
            assert!(at(x, y) < 0.0, "({x},{y}) = {}", at(x, y));
        }
        // By hand: mu(center) = 255/4, E[I^2] = 255^2/4, sigma = 255*sqrt(3)/4.
        let mu = 255.0 / 4.0;
        let sigma = (255.0f64 * 255.0 / 4.0 - mu * mu).sqrt();
        assert!((at(3, 3) - (255.0 - mu) / (sigma + 1.0)).abs() < 1e-9);
    }

    #[test]
    fn zero_volume_stays_zero() {
        let v = Volume::new(6, 5, 4);
        for (kind, w) in [
            (NormKind::Tdn, GaussianWindow::temporal(2).unwrap()),
            (NormKind::Sdn, GaussianWindow::spatial(2, 2).unwrap()),
            (
                NormKind::Stdn,
                GaussianWindow::spatio_temporal(2, 2, 2).unwrap(),
            ),
        ] {
            let out = divisive_normalize(&v, kind, &w, DIVISIVE_C).unwrap();
            assert!(out.as_slice().iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn constant_volume_divides_by_c() {
        let v = Volume::from_vec(4, 4, 3, vec![3.0; 48]).unwrap();
        let w = GaussianWindow::spatio_temporal(2, 2, 1).unwrap();
        let out = divisive_normalize(&v, NormKind::Stdn, &w, 0.5).unwrap();
        assert!(out.as_slice().iter().all(|&x| x == 6.0));
    }

    #[test]
    fn three_tap_temporal_oracle() {
        let v = Volume::from_vec(1, 1, 3, vec![0.0, 2.0, 0.0]).unwrap();
        let w = GaussianWindow::from_axes(vec![vec![0.25, 0.5, 0.25]]).unwrap();
        let out = divisive_normalize(&v, NormKind::Tdn, &w, 0.5).unwrap();
        // mu_t = 1/4*0 + 1/2*2 + 1/4*0 = 1; sigma_t^2 = 1/4*1 + 1/2*1 + 1/4*1 = 1.
        let taps = [0.25, 0.5, 0.25];
        let samples = [0.0, 2.0, 0.0];
        let mu: f64 = taps.iter().zip(&samples).map(|(a, b)| a * b).sum();
        let var: f64 = taps
            .iter()
            .zip(&samples)
            .map(|(a, b)| a * (b - mu) * (b - mu))
            .sum();
        let expected = 2.0 / (var.sqrt() + 0.5);
        assert!((out.coeffs.get(0, 0, 1) - expected).abs() < 1e-12);
        assert!((expected - 4.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn tdn_only_sees_its_own_column() {
        let v = noise_volume(5, 5, 6, 1);
        let w = GaussianWindow::temporal(2).unwrap();
        let base = divisive_normalize(&v, NormKind::Tdn, &w, 0.5).unwrap();
        let mut edited = v.clone();
        for k in 0..6 {
            edited.set(1, 3, k, 999.0);
        }
        let after = divisive_normalize(&edited, NormKind::Tdn, &w, 0.5).unwrap();
        for k in 0..6 {
            for y in 0..5 {
                for x in 0..5 {
                    if (x, y) != (1, 3) {
                        let (a, b) = (base.coeffs.get(x, y, k), after.coeffs.get(x, y, k));
                        assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn sdn_only_sees_its_own_slice() {
        let v = noise_volume(6, 6, 4, 2);
        let w = GaussianWindow::spatial(2, 2).unwrap();
        let base = divisive_normalize(&v, NormKind::Sdn, &w, 0.5).unwrap();
        let mut edited = v.clone();
        for y in 0..6 {
            for x in 0..6 {
                edited.set(x, y, 2, -77.0);
            }
        }
        let after = divisive_normalize(&edited, NormKind::Sdn, &w, 0.5).unwrap();
        for k in [0, 1, 3] {
            let (a, b) = (base.coeffs.slice(k), after.coeffs.slice(k));
            for (p, q) in a.as_slice().iter().zip(b.as_slice()) {
                assert!((p - q).abs() <= 1e-12 * p.abs().max(1.0));
            }
        }
    }

    #[test]
    fn window_dimensionality_checked() {
        let v = Volume::new(4, 4, 4);
        let w2 = GaussianWindow::spatial(1, 1).unwrap();
        assert!(divisive_normalize(&v, NormKind::Tdn, &w2, 0.5).is_err());
        assert!(divisive_normalize(&v, NormKind::Stdn, &w2, 0.5).is_err());
        assert!(divisive_normalize(&v, NormKind::Sdn, &w2, 0.5).is_ok());
    }

    #[test]
    fn unit_variance_scale_law() {
        // Values +-2 have variance 4.
        let v = Volume::from_vec(2, 2, 1, vec![2.0, -2.0, 2.0, -2.0]).unwrap();
        let nv = NormalizedVolume {
            coeffs: v,
            kind: NormKind::Sdn,
            c: 0.5,
        };
        let out = unit_variance(&nv).unwrap();
        assert_eq!(out.as_slice(), &[1.0, -1.0, 1.0, -1.0]);
        let again = unit_variance(&out).unwrap();
        for (a, b) in again.as_slice().iter().zip(out.as_slice()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn unit_variance_rejects_constant() {
        let nv = NormalizedVolume {
            coeffs: Volume::from_vec(3, 1, 1, vec![0.7; 3]).unwrap(),
            kind: NormKind::Tdn,
            c: 0.5,
        };
        assert!(matches!(unit_variance(&nv), Err(Error::ZeroVariance)));
    }

    #[test]
    fn scaling_input_and_c_together_is_exact_invariance() {
        let v = noise_volume(12, 10, 5, 3);
        let w = GaussianWindow::spatio_temporal(2, 2, 2).unwrap();
        let base =
            unit_variance(&divisive_normalize(&v, NormKind::Stdn, &w, 0.5).unwrap()).unwrap();
        for k in [0.5, 2.0, 7.0] {
            let scaled =
                divisive_normalize(&v.map(|x| x * k), NormKind::Stdn, &w, 0.5 * k).unwrap();
            let scaled = unit_variance(&scaled).unwrap();
            for (a, b) in base.as_slice().iter().zip(scaled.as_slice()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn output_is_deterministic() {
        let v = noise_volume(9, 7, 6, 4);
        let w = GaussianWindow::spatio_temporal(3, 2, 2).unwrap();
        let a = divisive_normalize(&v, NormKind::Stdn, &w, 0.5).unwrap();
        let b = divisive_normalize(&v, NormKind::Stdn, &w, 0.5).unwrap();
        assert!(a
            .as_slice()
            .iter()
            .zip(b.as_slice())
            .all(|(x, y)| x.to_bits() == y.to_bits()));
    }
}
