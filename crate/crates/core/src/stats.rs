//! Histograms, generalized-Gaussian fits and KL-divergence regularity scores.
//!
//! A "regularity" score is the KL divergence between the histogram of
//! unit-variance coefficients and the standard normal discretized on the same
//! bins. Lower is more Gaussian.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Reference bins below this mass are raised to it before taking the ratio.
pub const KLD_Q_FLOOR: f64 = 1e-10;

/// Equal-width binning of a closed range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Binning {
    pub bins: usize,
    pub lo: f64,
    pub hi: f64,
}

impl Default for Binning {
    /// 101 bins over `[-5, 5]`.
    fn default() -> Self {
        Binning {
            bins: 101,
            lo: -5.0,
            hi: 5.0,
        }
    }
}

impl Binning {
    pub fn new(bins: usize, lo: f64, hi: f64) -> Result<Self> {
        if bins == 0 {
            return Err(Error::InvalidParameter("bin count must be positive".into()));
        }
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::InvalidParameter(format!(
                "degenerate histogram range [{lo}, {hi}]"
            )));
        }
        Ok(Binning { bins, lo, hi })
    }

    /// Edge `i` of `bins + 1`. Written so that a symmetric range yields
    /// exactly symmetric edges.
    pub fn edge(&self, i: usize) -> f64 {
        let n = self.bins as f64;
        (self.lo * (n - i as f64) + self.hi * i as f64) / n
    }

    pub fn edges(&self) -> Vec<f64> {
        (0..=self.bins).map(|i| self.edge(i)).collect()
    }

    pub fn centers(&self) -> Vec<f64> {
        (0..self.bins)
            .map(|i| 0.5 * (self.edge(i) + self.edge(i + 1)))
            .collect()
    }

    /// Bin of `x`, clamping out-of-range values into the end bins.
    #[inline]
    pub fn index(&self, x: f64) -> usize {
        let pos = (x - self.lo) / (self.hi - self.lo) * self.bins as f64;
        if pos <= 0.0 {
            0
        } else {
            (pos as usize).min(self.bins - 1)
        }
    }
}

/// A normalized histogram: per-bin probability mass on an explicit binning.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    binning: Binning,
    edges: Vec<f64>,
    mass: Vec<f64>,
}

impl Histogram {
    /// Wraps raw non-negative weights, normalizing them to unit mass.
    pub fn from_weights(binning: Binning, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != binning.bins {
            return Err(Error::Shape(format!(
                "{} weights for {} bins",
                weights.len(),
                binning.bins
            )));
        }
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::InvalidParameter(
                "histogram weights must be non-negative".into(),
            ));
        }
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::EmptySamples);
        }
        Ok(Histogram {
            binning,
            edges: binning.edges(),
            mass: weights.into_iter().map(|w| w / total).collect(),
        })
    }

    pub fn binning(&self) -> Binning {
        self.binning
    }

    pub fn bins(&self) -> usize {
        self.binning.bins
    }

    pub fn range(&self) -> (f64, f64) {
        (self.binning.lo, self.binning.hi)
    }

    pub fn edges(&self) -> &[f64] {
        &self.edges
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    /// `bin_center,mass` rows under a header line.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("bin_center,mass\n");
        for (c, m) in self.binning.centers().iter().zip(&self.mass) {
            out.push_str(&format!("{c},{m}\n"));
        }
        out
    }
}

/// Histogram of `samples`, out-of-range values clamped into the end bins.
pub fn histogram(samples: &[f64], binning: Binning) -> Result<Histogram> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    let mut counts = vec![0u64; binning.bins];
    for &x in samples {
        if !x.is_finite() {
            return Err(Error::NonFinite);
        }
        counts[binning.index(x)] += 1;
    }
    let n = samples.len() as f64;
    Histogram::from_weights(binning, counts.into_iter().map(|c| c as f64 / n).collect())
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// The standard normal integrated over each bin, with the two end bins
/// absorbing the tails.
pub fn gaussian_reference(binning: Binning) -> Result<Histogram> {
    if binning.bins < 3 {
        return Err(Error::InvalidParameter(
            "reference needs at least 3 bins".into(),
        ));
    }
    let binning = Binning::new(binning.bins, binning.lo, binning.hi)?;
    let n = binning.bins;
    let weights = (0..n)
        .map(|i| {
            let a = if i == 0 {
                f64::NEG_INFINITY
            } else {
                binning.edge(i)
            };
            let b = if i + 1 == n {
                f64::INFINITY
            } else {
                binning.edge(i + 1)
            };
            // Integrate on whichever side keeps both CDF values small, so that
            // mirrored bins get bit-identical mass.
            if b <= 0.0 {
                normal_cdf(b) - normal_cdf(a)
            } else if a >= 0.0 {
                normal_cdf(-a) - normal_cdf(-b)
            } else {
                1.0 - normal_cdf(a) - normal_cdf(-b)
            }
        })
        .collect();
    Histogram::from_weights(binning, weights)
}

/// `sum_i P(i) ln(P(i) / Q(i))`, skipping empty `P` bins and flooring `Q` at
/// [`KLD_Q_FLOOR`].
pub fn kld(p: &Histogram, q: &Histogram) -> Result<f64> {
    if p.binning != q.binning {
        return Err(Error::BinningMismatch);
    }
    let d: f64 = p
        .mass
        .iter()
        .zip(&q.mass)
        .filter(|(&pi, _)| pi > 0.0)
        .map(|(&pi, &qi)| pi * (pi / qi.max(KLD_Q_FLOOR)).ln())
        .sum();
    Ok(d.max(0.0))
}

/// Generalized Gaussian parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GgdFit {
    /// Shape: 2 is Gaussian, 1 is Laplacian.
    pub alpha: f64,
    /// Variance `s^2` of the samples.
    pub variance: f64,
    /// Scale `s * sqrt(Gamma(1/alpha) / Gamma(3/alpha))`.
    pub beta: f64,
}

impl GgdFit {
    pub fn new(alpha: f64, variance: f64) -> Result<Self> {
        if !(alpha > 0.0 && variance > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "GGD needs alpha > 0 and variance > 0, got {alpha}, {variance}"
            )));
        }
        Ok(GgdFit {
            alpha,
            variance,
            beta: ggd_beta(alpha, variance),
        })
    }

    /// Density at `x`.
    pub fn pdf(&self, x: f64) -> f64 {
        let a = self.alpha;
        let log_norm = a.ln() - (2.0 * self.beta).ln() - ln_gamma(1.0 / a);
        (log_norm - (x.abs() / self.beta).powf(a)).exp()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain struct serializes")
    }
}

pub fn ggd_beta(alpha: f64, variance: f64) -> f64 {
    variance.sqrt() * (0.5 * (ln_gamma(1.0 / alpha) - ln_gamma(3.0 / alpha))).exp()
}

/// `Gamma(1/a) Gamma(3/a) / Gamma(2/a)^2`, i.e. `E[x^2] / E[|x|]^2` of a GGD
/// with shape `a`. Strictly decreasing in `a`.
pub fn ggd_moment_ratio(alpha: f64) -> f64 {
    (ln_gamma(1.0 / alpha) + ln_gamma(3.0 / alpha) - 2.0 * ln_gamma(2.0 / alpha)).exp()
}

pub const GGD_ALPHA_MIN: f64 = 0.1;
pub const GGD_ALPHA_MAX: f64 = 10.0;
pub const GGD_MIN_SAMPLES: usize = 100;

/// Moment-matching GGD fit: solves `E[x^2] / E[|x|]^2 = ratio(alpha)` by
/// bisection over `[0.1, 10]`.
pub fn ggd_fit(samples: &[f64]) -> Result<GgdFit> {
    if samples.len() < GGD_MIN_SAMPLES {
        return Err(Error::InvalidParameter(format!(
            "GGD fit needs at least {GGD_MIN_SAMPLES} samples, got {}",
            samples.len()
        )));
    }
    if samples.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite);
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let variance = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    let abs_mean = samples.iter().map(|x| x.abs()).sum::<f64>() / n;
    let sq_mean = samples.iter().map(|x| x * x).sum::<f64>() / n;
    if !(variance > 0.0) || !(abs_mean > 0.0) {
        return Err(Error::ZeroVariance);
    }
    let ratio = sq_mean / (abs_mean * abs_mean);

    let (mut lo, mut hi) = (GGD_ALPHA_MIN, GGD_ALPHA_MAX);
    if ratio > ggd_moment_ratio(lo) || ratio < ggd_moment_ratio(hi) {
        return Err(Error::RootNotBracketed { ratio });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if ggd_moment_ratio(mid) > ratio {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-14 {
            break;
        }
    }
    GgdFit::new(0.5 * (lo + hi), variance)
}
