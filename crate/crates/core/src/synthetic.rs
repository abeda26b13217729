//! Synthetic test material: dead-leaves textures translated by a known
//! integer motion, with optional sensor noise.
//!
//! Dead-leaves images (randomly sized opaque discs dropped on top of each
//! other) reproduce the occlusion edges and heavy-tailed bandpass statistics
//! of natural scenes, which plain white-noise textures lack.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::Plane;
use crate::norm::{smooth_plane, GaussianWindow};
use crate::video_io::{FlowField, FrameSequence};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TextureSpec {
    /// Smallest disc radius in pixels.
    pub min_radius: f64,
    /// Largest disc radius in pixels.
    pub max_radius: f64,
    /// Discs dropped per pixel of canvas.
    pub density: f64,
    /// Half-width of the Gaussian blur applied to the discs (0 disables).
    pub blur: usize,
    /// Spread of disc levels around mid-gray; 1 spans `[10, 245]`.
    pub disc_contrast: f64,
    /// Mean amplitude of the fine grain texturing each disc.
    pub grain: f64,
    /// Per-disc grain amplitudes are drawn uniformly from
    /// `grain * [1 - spread, 1 + spread]`.
    pub grain_spread: f64,
    /// Half-width of the smoothing applied to the grain (0 leaves it white).
    pub grain_half_width: usize,
    /// Number of sinusoidal gratings added at evenly spaced orientations.
    pub gratings: usize,
    pub grating_amplitude: f64,
    /// Nominal grating period in pixels; each grating's period is jittered
    /// by up to 25%.
    pub grating_period: f64,
}

impl Default for TextureSpec {
    fn default() -> Self {
        TextureSpec {
            min_radius: 2.0,
            max_radius: 40.0,
            density: 0.02,
            blur: 2,
            disc_contrast: 1.0,
            grain: 6.0,
            grain_spread: 0.0,
            grain_half_width: 3,
            gratings: 0,
            grating_amplitude: 0.0,
            grating_period: 40.0,
        }
    }
}

/// Renders a `width x height` dead-leaves texture in `[0, 255]`, with
/// optional grain and gratings.
pub fn dead_leaves(spec: &TextureSpec, width: usize, height: usize, seed: u64) -> Result<Plane> {
    if !(spec.min_radius > 0.0 && spec.max_radius >= spec.min_radius) {
        return Err(Error::InvalidParameter("bad disc radius range".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if !(0.0..=1.0).contains(&spec.grain_spread) {
        return Err(Error::InvalidParameter(
            "grain spread must lie in [0, 1]".into(),
        ));
    }
    let mut canvas = Plane::filled(width, height, 128.0);
    let mut contrast = Plane::filled(width, height, spec.grain);
    let count = (spec.density * (width * height) as f64).ceil() as usize;
    // Radius density proportional to r^-3 (scale invariance).
    let (a, b) = (spec.min_radius.powi(-2), spec.max_radius.powi(-2));
    for _ in 0..count {
        let r = (a - rng.random::<f64>() * (a - b)).powf(-0.5);
        let cx = rng.random_range(-r..width as f64 + r);
        let cy = rng.random_range(-r..height as f64 + r);
        let level = 128.0 + spec.disc_contrast * rng.random_range(-117.5..117.5);
        let amp = spec.grain * (1.0 + spec.grain_spread * rng.random_range(-1.0..=1.0));
        let x0 = (cx - r).floor().max(0.0) as usize;
        let y0 = (cy - r).floor().max(0.0) as usize;
        let x1 = ((cx + r).ceil().max(0.0) as usize).min(width);
        let y1 = ((cy + r).ceil().max(0.0) as usize).min(height);
        for y in y0..y1 {
            for x in x0..x1 {
                let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
                if dx * dx + dy * dy <= r * r {
                    canvas.set(x, y, level);
                    contrast.set(x, y, amp);
                }
            }
        }
    }
    if spec.blur > 0 {
        canvas = smooth_plane(&canvas, &GaussianWindow::spatial(spec.blur, spec.blur)?)?;
    }
    if spec.grain > 0.0 {
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let noise = Plane::from_fn(width, height, |_, _| normal.sample(&mut rng));
        let grain = if spec.grain_half_width > 0 {
            let h = spec.grain_half_width;
            smooth_plane(&noise, &GaussianWindow::spatial(h, h)?)?
        } else {
            noise
        };
        let (_, var) = crate::norm::mean_variance(grain.as_slice());
        let k = var.sqrt().max(f64::MIN_POSITIVE).recip();
        for ((c, g), amp) in canvas
            .as_mut_slice()
            .iter_mut()
            .zip(grain.as_slice())
            .zip(contrast.as_slice())
        {
            *c += amp * k * g;
        }
    }
    if spec.gratings > 0 {
        if !(spec.grating_period > 0.0) {
            return Err(Error::InvalidParameter(
                "grating period must be positive".into(),
            ));
        }
        let theta0 = rng.random_range(0.0..std::f64::consts::PI);
        let waves: Vec<(f64, f64, f64)> = (0..spec.gratings)
            .map(|k| {
                let theta = theta0 + k as f64 * std::f64::consts::PI / spec.gratings as f64;
                let omega =
                    std::f64::consts::TAU / (spec.grating_period * rng.random_range(0.8..1.25));
                (
                    omega * theta.cos(),
                    omega * theta.sin(),
                    rng.random_range(0.0..std::f64::consts::TAU),
                )
            })
            .collect();
        for y in 0..height {
            for x in 0..width {
                let g: f64 = waves
                    .iter()
                    .map(|&(kx, ky, phase)| (kx * x as f64 + ky * y as f64 + phase).cos())
                    .sum();
                canvas.set(x, y, canvas.get(x, y) + spec.grating_amplitude * g);
            }
        }
    }
    Ok(canvas.map(|v| v.clamp(0.0, 255.0)))
}

/// Adds i.i.d. Gaussian noise, clamped to `[0, 255]`.
pub fn add_noise(frame: &Plane, sigma: f64, rng: &mut ChaCha8Rng) -> Plane {
    let mut out = frame.clone();
    if sigma > 0.0 {
        let normal = Normal::new(0.0, sigma).expect("positive sigma");
        for v in out.as_mut_slice() {
            *v = (*v + normal.sample(rng)).clamp(0.0, 255.0);
        }
    }
    out
}

/// Rounds to 8-bit levels.
pub fn quantize(frame: &Plane) -> Plane {
    frame.map(|v| v.round().clamp(0.0, 255.0))
}

/// A `frames`-long sequence whose content moves by `motion` pixels per frame:
/// `I[t](p + t * motion) = I[0](p)` before noise. Frames are not quantized:
/// differences of rounded noise fall on an integer lattice.
pub fn translating_sequence(
    spec: &TextureSpec,
    width: usize,
    height: usize,
    frames: usize,
    motion: (i32, i32),
    noise_sigma: f64,
    seed: u64,
) -> Result<FrameSequence> {
    if frames == 0 {
        return Err(Error::InvalidParameter("need at least one frame".into()));
    }
    let span = frames as i64 - 1;
    let (mx, my) = (i64::from(motion.0), i64::from(motion.1));
    let (cw, ch) = (
        width + (mx.abs() * span) as usize,
        height + (my.abs() * span) as usize,
    );
    let canvas = dead_leaves(spec, cw, ch, seed)?;
    // Frame t samples the canvas at an origin moving against the motion.
    let x_start = if mx > 0 { mx * span } else { 0 };
    let y_start = if my > 0 { my * span } else { 0 };
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15);
    let planes = (0..frames as i64)
        .map(|t| {
            let ox = (x_start - t * mx) as usize;
            let oy = (y_start - t * my) as usize;
            let f = canvas.crop(ox, oy, width, height)?;
            Ok(add_noise(&f, noise_sigma, &mut rng))
        })
        .collect::<Result<Vec<_>>>()?;
    FrameSequence::new(planes)
}

/// Constant ground truth for [`translating_sequence`], one field per frame
/// step.
pub fn constant_flows(
    width: usize,
    height: usize,
    steps: usize,
    motion: (i32, i32),
) -> Vec<FlowField> {
    vec![FlowField::constant(width, height, motion.0 as f32, motion.1 as f32); steps]
}
