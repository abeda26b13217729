//! Space-time displacement trajectories and the displaced frame-difference
//! volumes collected along them.
//!
//! A trajectory starts at a traced point `(x, y)` in frame `t0` and records,
//! for each later frame `t0 + t` (`t = 1..=depth`), the integer spatial offset
//! of that point relative to the start. Volumes are collected over a patch
//! centered on the start point, in one of two [`DiffMode`]s:
//!
//! * anchored: slice `t - 1` is `I[t0](p) - I[t0 + t](p + offset[t - 1])`;
//! * adjacent: slice `t - 1` is
//!   `I[t0 + t - 1](p + offset[t - 2]) - I[t0 + t](p + offset[t - 1])`,
//!   with `offset[-1] = (0, 0)`.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Plane, Volume};
use crate::video_io::{FlowField, FrameSequence};

/// Identifies the generator behind random trajectories, recorded in every
/// exported sidecar so the offsets can be regenerated elsewhere.
pub const PRNG_ALGORITHM: &str = "ChaCha8Rng::seed_from_u64 (rand_chacha 0.9) + Rng::random_range(-R..=R) for x then y per step (rand 0.9)";

/// Nearest integer, with halves rounded toward positive infinity.
#[inline]
pub fn round_half_up(x: f64) -> i64 {
    (x + 0.5).floor() as i64
}

/// How the slices of a difference volume pair up frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffMode {
    /// Every slice is differenced against frame `t0`.
    #[default]
    Anchored,
    /// Each slice differences consecutive frames along the trajectory.
    Adjacent,
}

impl DiffMode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiffMode::Anchored => "anchored",
            DiffMode::Adjacent => "adjacent",
        }
    }
}

impl std::fmt::Display for DiffMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DiffMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "anchored" => Ok(DiffMode::Anchored),
            "adjacent" => Ok(DiffMode::Adjacent),
            other => Err(Error::InvalidParameter(format!(
                "unknown difference mode {other:?}"
            ))),
        }
    }
}

/// A space-time displacement `(x, y, t)`: `t` frames ahead, shifted by
/// `(x, y)` pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Displacement {
    pub x: i32,
    pub y: i32,
    pub t: usize,
}

impl Displacement {
    pub fn new(x: i32, y: i32, t: usize) -> Self {
        Displacement { x, y, t }
    }
}

/// An axis-aligned pixel rectangle given by its top-left corner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Patch {
    pub x: i64,
    pub y: i64,
    pub width: usize,
    pub height: usize,
}

impl Patch {
    pub fn new(x: i64, y: i64, width: usize, height: usize) -> Self {
        Patch {
            x,
            y,
            width,
            height,
        }
    }

    pub fn square(x: i64, y: i64, size: usize) -> Self {
        Patch::new(x, y, size, size)
    }

    /// A `size x size` patch whose center pixel is `(cx, cy)`; for even sizes
    /// the center is the lower-right of the middle four.
    pub fn centered(cx: i64, cy: i64, size: usize) -> Self {
        let h = (size / 2) as i64;
        Patch::square(cx - h, cy - h, size)
    }

    pub fn shifted(&self, dx: i64, dy: i64) -> Self {
        Patch::new(self.x + dx, self.y + dy, self.width, self.height)
    }

    pub fn fits(&self, width: usize, height: usize) -> bool {
        self.x >= 0
            && self.y >= 0
            && self.x + self.width as i64 <= width as i64
            && self.y + self.height as i64 <= height as i64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryKind {
    /// Follows ground-truth flow.
    Motion,
    /// Zero spatial offset at every step.
    NonDisplaced,
    /// Accumulates i.i.d. uniform integer steps in `[-R, R]^2`.
    Random,
    /// Straight line from the start to a fixed endpoint.
    Linear,
}

impl std::str::FromStr for TrajectoryKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "motion" => Ok(TrajectoryKind::Motion),
            "non-displaced" | "nondisplaced" | "static" => Ok(TrajectoryKind::NonDisplaced),
            "random" => Ok(TrajectoryKind::Random),
            "linear" => Ok(TrajectoryKind::Linear),
            other => Err(Error::InvalidParameter(format!(
                "unknown trajectory kind {other:?}"
            ))),
        }
    }
}

/// Start point of a trajectory: traced pixel `(x, y)` in frame `t0`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Origin {
    pub x: i64,
    pub y: i64,
    pub t0: usize,
}

impl Origin {
    pub fn new(x: i64, y: i64, t0: usize) -> Self {
        Origin { x, y, t0 }
    }
}

/// What drives the offsets of a new trajectory.
#[derive(Debug, Clone, Copy)]
pub enum TrajectorySource<'a> {
    NonDisplaced,
    /// `flows[k]` maps frame `t0 + k` to `t0 + k + 1`.
    Motion(&'a [FlowField]),
    Random {
        seed: u64,
        drift_bound: u32,
    },
    /// Offsets `round(endpoint * t / depth)`.
    Linear {
        endpoint: (i32, i32),
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub kind: TrajectoryKind,
    pub origin: Origin,
    /// `offsets[t - 1]` is the displacement reached at frame `t0 + t`.
    pub offsets: Vec<(i32, i32)>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_bound: Option<u32>,
}

impl Trajectory {
    pub fn depth(&self) -> usize {
        self.offsets.len()
    }

    /// Displacement of step `t` (1-based).
    pub fn displacement(&self, t: usize) -> Displacement {
        let (x, y) = self.offsets[t - 1];
        Displacement::new(x, y, t)
    }

    /// Per-step increments `offset[t] - offset[t - 1]`.
    pub fn increments(&self) -> Vec<(i32, i32)> {
        let mut prev = (0, 0);
        self.offsets
            .iter()
            .map(|&(x, y)| {
                let inc = (x - prev.0, y - prev.1);
                prev = (x, y);
                inc
            })
            .collect()
    }

    pub fn endpoint(&self) -> (i32, i32) {
        self.offsets.last().copied().unwrap_or((0, 0))
    }
}

pub fn make_trajectory(
    source: TrajectorySource<'_>,
    origin: Origin,
    depth: usize,
) -> Result<Trajectory> {
    if depth == 0 {
        return Err(Error::InvalidParameter(
            "trajectory depth must be positive".into(),
        ));
    }
    let mut traj = Trajectory {
        kind: TrajectoryKind::NonDisplaced,
        origin,
        offsets: Vec::with_capacity(depth),
        seed: None,
        drift_bound: None,
    };
    match source {
        TrajectorySource::NonDisplaced => traj.offsets = vec![(0, 0); depth],
        TrajectorySource::Motion(flows) => {
            traj.kind = TrajectoryKind::Motion;
            if flows.len() < depth {
                return Err(Error::InvalidParameter(format!(
                    "motion trajectory of depth {depth} needs {depth} flow fields, got {}",
                    flows.len()
                )));
            }
            let (mut ax, mut ay) = (0.0f64, 0.0f64);
            for flow in &flows[..depth] {
                let px = origin.x + round_half_up(ax);
                let py = origin.y + round_half_up(ay);
                if px < 0 || py < 0 || px >= flow.width() as i64 || py >= flow.height() as i64 {
                    return Err(Error::OutOfBounds(format!(
                        "traced position ({px}, {py}) left the {}x{} frame",
                        flow.width(),
                        flow.height()
                    )));
                }
                let (u, v) = flow
                    .get(px as usize, py as usize)
                    .ok_or(Error::InvalidFlow { x: px, y: py })?;
                ax += f64::from(u);
                ay += f64::from(v);
                traj.offsets
                    .push((round_half_up(ax) as i32, round_half_up(ay) as i32));
            }
        }
        TrajectorySource::Random { seed, drift_bound } => {
            traj.kind = TrajectoryKind::Random;
            traj.seed = Some(seed);
            traj.drift_bound = Some(drift_bound);
            let r = drift_bound as i32;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let (mut x, mut y) = (0i32, 0i32);
            for _ in 0..depth {
                x += rng.random_range(-r..=r);
                y += rng.random_range(-r..=r);
                traj.offsets.push((x, y));
            }
        }
        TrajectorySource::Linear { endpoint } => {
            traj.kind = TrajectoryKind::Linear;
            let n = depth as f64;
            for t in 1..=depth {
                let f = t as f64 / n;
                traj.offsets.push((
                    round_half_up(f64::from(endpoint.0) * f) as i32,
                    round_half_up(f64::from(endpoint.1) * f) as i32,
                ));
            }
        }
    }
    Ok(traj)
}

/// `I[t0](i, j) - I[t0 + t](i + x, j + y)` over `patch`.
pub fn displaced_frame_difference(
    seq: &FrameSequence,
    t0: usize,
    d: Displacement,
    patch: Patch,
) -> Result<Plane> {
    if d.t == 0 || t0 + d.t >= seq.len() {
        return Err(Error::OutOfBounds(format!(
            "frames {t0} and {} not both in a {}-frame sequence",
            t0 + d.t,
            seq.len()
        )));
    }
    let moved = patch.shifted(d.x.into(), d.y.into());
    if !patch.fits(seq.width(), seq.height()) || !moved.fits(seq.width(), seq.height()) {
        return Err(Error::OutOfBounds(format!(
            "patch {}x{} at ({}, {}) displaced by ({}, {}) leaves the {}x{} frame",
            patch.width,
            patch.height,
            patch.x,
            patch.y,
            d.x,
            d.y,
            seq.width(),
            seq.height()
        )));
    }
    Ok(difference_unchecked(seq, t0, d, patch))
}

fn difference_unchecked(seq: &FrameSequence, t0: usize, d: Displacement, patch: Patch) -> Plane {
    let a = seq.frame(t0);
    let b = seq.frame(t0 + d.t);
    let (x0, y0) = (patch.x as usize, patch.y as usize);
    let (x1, y1) = (
        (patch.x + d.x as i64) as usize,
        (patch.y + d.y as i64) as usize,
    );
    Plane::from_fn(patch.width, patch.height, |i, j| {
        a.get(x0 + i, y0 + j) - b.get(x1 + i, y1 + j)
    })
}

/// Like [`displaced_frame_difference`] but restricted to the part of `patch`
/// whose displaced counterpart lies inside the frame. Returns `None` when
/// that part is empty.
pub fn displaced_frame_difference_clipped(
    seq: &FrameSequence,
    t0: usize,
    d: Displacement,
    patch: Patch,
) -> Result<Option<Plane>> {
    if d.t == 0 || t0 + d.t >= seq.len() {
        return Err(Error::OutOfBounds(format!(
            "frames {t0} and {} not both in a {}-frame sequence",
            t0 + d.t,
            seq.len()
        )));
    }
    if !patch.fits(seq.width(), seq.height()) {
        return Err(Error::OutOfBounds(format!(
            "patch at ({}, {}) leaves the frame",
            patch.x, patch.y
        )));
    }
    let (w, h) = (seq.width() as i64, seq.height() as i64);
    let (dx, dy) = (i64::from(d.x), i64::from(d.y));
    let x_lo = patch.x.max(-dx);
    let x_hi = (patch.x + patch.width as i64).min(w - dx);
    let y_lo = patch.y.max(-dy);
    let y_hi = (patch.y + patch.height as i64).min(h - dy);
    if x_lo >= x_hi || y_lo >= y_hi {
        return Ok(None);
    }
    let clipped = Patch::new(x_lo, y_lo, (x_hi - x_lo) as usize, (y_hi - y_lo) as usize);
    Ok(Some(difference_unchecked(seq, t0, d, clipped)))
}

/// Displaced differences stacked along a trajectory.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameDiffVolume {
    pub diffs: Volume,
    pub trajectory: Trajectory,
    pub patch: Patch,
    pub mode: DiffMode,
}

impl FrameDiffVolume {
    pub fn depth(&self) -> usize {
        self.diffs.depth()
    }

    pub fn mean_abs(&self) -> f64 {
        let xs = self.diffs.as_slice();
        xs.iter().map(|v| v.abs()).sum::<f64>() / xs.len() as f64
    }

    /// JSON sidecar for the raw `f32` export.
    pub fn sidecar(&self) -> serde_json::Value {
        let (w, h, d) = self.diffs.dims();
        let t = &self.trajectory;
        serde_json::json!({
            "format": "f32-le planar, x fastest, then y, then slice",
            "width": w,
            "height": h,
            "depth": d,
            "patch": self.patch,
            "mode": self.mode,
            "origin": t.origin,
            "trajectory_kind": t.kind,
            "offsets": t.offsets[..d],
            "seed": t.seed,
            "drift_bound": t.drift_bound,
            "prng": if t.kind == TrajectoryKind::Random { Some(PRNG_ALGORITHM) } else { None },
        })
    }

    /// Writes `<stem>.raw` and `<stem>.json` into `dir`.
    pub fn export(&self, dir: &Path, stem: &str) -> Result<()> {
        let raw = dir.join(format!("{stem}.raw"));
        fs::write(&raw, self.diffs.to_f32_le_bytes())
            .map_err(|source| Error::Io { path: raw, source })?;
        let json = dir.join(format!("{stem}.json"));
        let text = serde_json::to_string_pretty(&self.sidecar()).expect("json value serializes");
        fs::write(&json, text + "\n").map_err(|source| Error::Io { path: json, source })
    }
}

/// Collects `patch_size x patch_size` anchored differences along `traj`; see
/// [`collect_volume_with`].
pub fn collect_volume(
    seq: &FrameSequence,
    traj: &Trajectory,
    patch_size: usize,
) -> Result<FrameDiffVolume> {
    collect_volume_with(seq, traj, patch_size, DiffMode::Anchored)
}

/// Collects `patch_size x patch_size` differences along `traj`, with the patch
/// centered on the trajectory origin. Collection stops at the last slice whose
/// patches and frames are all available; the returned volume's depth
/// reflects that.
pub fn collect_volume_with(
    seq: &FrameSequence,
    traj: &Trajectory,
    patch_size: usize,
    mode: DiffMode,
) -> Result<FrameDiffVolume> {
    if patch_size == 0 {
        return Err(Error::InvalidParameter(
            "patch size must be positive".into(),
        ));
    }
    let o = traj.origin;
    let patch = Patch::centered(o.x, o.y, patch_size);
    if o.t0 >= seq.len() || !patch.fits(seq.width(), seq.height()) {
        return Err(Error::OutOfBounds(format!(
            "{patch_size}x{patch_size} patch around ({}, {}) in frame {} is outside the sequence",
            o.x, o.y, o.t0
        )));
    }
    let mut planes = Vec::with_capacity(traj.depth());
    let mut prev = (0i32, 0i32);
    for t in 1..=traj.depth() {
        let d = traj.displacement(t);
        let slice = match mode {
            DiffMode::Anchored => displaced_frame_difference(seq, o.t0, d, patch),
            DiffMode::Adjacent => adjacent_difference(
                seq,
                o.t0 + t - 1,
                patch.shifted(prev.0.into(), prev.1.into()),
                d.x - prev.0,
                d.y - prev.1,
            ),
        };
        match slice {
            Ok(p) => planes.push(p),
            Err(Error::OutOfBounds(_)) => break,
            Err(e) => return Err(e),
        }
        prev = (d.x, d.y);
    }
    if planes.is_empty() {
        return Err(Error::OutOfBounds(
            "trajectory leaves the sequence before its first step".into(),
        ));
    }
    let mut trajectory = traj.clone();
    trajectory.offsets.truncate(planes.len());
    Ok(FrameDiffVolume {
        diffs: Volume::from_planes(&planes)?,
        trajectory,
        patch,
        mode,
    })
}

/// `I[t](p) - I[t + 1](p + (dx, dy))` over `patch`.
fn adjacent_difference(
    seq: &FrameSequence,
    t: usize,
    patch: Patch,
    dx: i32,
    dy: i32,
) -> Result<Plane> {
    if !patch.fits(seq.width(), seq.height()) {
        return Err(Error::OutOfBounds(format!(
            "patch at ({}, {}) leaves the frame",
            patch.x, patch.y
        )));
    }
    displaced_frame_difference(seq, t, Displacement::new(dx, dy, 1), patch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synthetic;

    fn static_seq(w: usize, h: usize, t: usize) -> FrameSequence {
        let f = Plane::from_fn(w, h, |x, y| ((x * 7 + y * 13) % 256) as f64);
        FrameSequence::new(vec![f; t]).unwrap()
    }

    #[test]
    fn non_displaced_on_static_scene_is_zero() {
        let seq = static_seq(20, 20, 3);
        let d = displaced_frame_difference(
            &seq,
            0,
            Displacement::new(0, 0, 2),
            Patch::square(2, 3, 10),
        )
        .unwrap();
        assert!(d.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn motion_aligned_difference_cancels() {
        let seq = synthetic::translating_sequence(
            &synthetic::TextureSpec::default(),
            64,
            64,
            3,
            (2, 1),
            0.0,
            11,
        )
        .unwrap();
        let d = displaced_frame_difference(
            &seq,
            0,
            Displacement::new(2, 1, 1),
            Patch::square(10, 10, 30),
        )
        .unwrap();
        assert!(d.as_slice().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn checkerboard_alternates() {
        // Period-2 board, black 0 / white 255, static; d = (1, 0, 1).
        let board = Plane::from_fn(4, 4, |x, y| if (x + y) % 2 == 0 { 0.0 } else { 255.0 });
        let seq = FrameSequence::new(vec![board.clone(), board]).unwrap();
        let d =
            displaced_frame_difference(&seq, 0, Displacement::new(1, 0, 1), Patch::square(0, 0, 3))
                .unwrap();
        for y in 0..3 {
            for x in 0..3 {
                let expected = if (x + y) % 2 == 0 { -255.0 } else { 255.0 };
                assert_eq!(d.get(x, y), expected);
            }
        }
    }

    #[test]
    fn antisymmetry_under_frame_swap() {
        let seq = synthetic::translating_sequence(
            &synthetic::TextureSpec::default(),
            48,
            48,
            2,
            (1, -1),
            2.0,
            5,
        )
        .unwrap();
        let swapped = FrameSequence::new(vec![seq.frame(1).clone(), seq.frame(0).clone()]).unwrap();
        let p = Patch::square(10, 12, 16);
        let fwd = displaced_frame_difference(&seq, 0, Displacement::new(3, 2, 1), p).unwrap();
        let back =
            displaced_frame_difference(&swapped, 0, Displacement::new(-3, -2, 1), p.shifted(3, 2))
                .unwrap();
        for (a, b) in fwd.as_slice().iter().zip(back.as_slice()) {
            assert_eq!(*a, -*b);
        }
    }

    #[test]
    fn out_of_bounds_rejected() {
        let seq = static_seq(20, 20, 2);
        let p = Patch::square(0, 0, 10);
        assert!(displaced_frame_difference(&seq, 0, Displacement::new(-1, 0, 1), p).is_err());
        assert!(displaced_frame_difference(&seq, 0, Displacement::new(0, 0, 2), p).is_err());
        assert!(displaced_frame_difference(&seq, 0, Displacement::new(10, 10, 1), p).is_ok());
    }

    #[test]
    fn clipped_difference_uses_overlap_only() {
        let seq = static_seq(20, 20, 2);
        let p = Patch::square(0, 0, 10);
        let d = displaced_frame_difference_clipped(&seq, 0, Displacement::new(-3, 2, 1), p)
            .unwrap()
            .unwrap();
        assert_eq!(d.dims(), (7, 10));
        assert!(
            displaced_frame_difference_clipped(&seq, 0, Displacement::new(-30, 0, 1), p)
                .unwrap()
                .is_none()
        );
    }

    #[test]
    fn non_displaced_offsets() {
        let t = make_trajectory(TrajectorySource::NonDisplaced, Origin::new(5, 5, 0), 5).unwrap();
        assert_eq!(t.offsets, vec![(0, 0); 5]);
    }

    #[test]
    fn motion_offsets_accumulate() {
        let flows = vec![FlowField::constant(20, 20, -3.0, 2.0); 2];
        let t =
            make_trajectory(TrajectorySource::Motion(&flows), Origin::new(10, 10, 0), 2).unwrap();
        assert_eq!(t.offsets, vec![(-3, 2), (-6, 4)]);
    }

    #[test]
    fn motion_rounding_ties_go_up() {
        let flows = vec![FlowField::constant(20, 20, 0.5, -0.5); 3];
        let t =
            make_trajectory(TrajectorySource::Motion(&flows), Origin::new(10, 10, 0), 3).unwrap();
        assert_eq!(t.offsets, vec![(1, 0), (1, -1), (2, -1)]);
    }

    #[test]
    fn motion_errors() {
        let mut flow = FlowField::constant(8, 8, 5.0, 0.0);
        let flows = vec![flow.clone(); 3];
        let r = make_trajectory(TrajectorySource::Motion(&flows), Origin::new(0, 0, 0), 3);
        assert!(matches!(r, Err(Error::OutOfBounds(_))));
        flow.invalidate(2, 2);
        let flows = vec![flow];
        let r = make_trajectory(TrajectorySource::Motion(&flows), Origin::new(2, 2, 0), 1);
        assert!(matches!(r, Err(Error::InvalidFlow { x: 2, y: 2 })));
    }

    #[test]
    fn random_increments_bounded_and_reproducible() {
        let a = make_trajectory(
            TrajectorySource::Random {
                seed: 9,
                drift_bound: 20,
            },
            Origin::new(0, 0, 0),
            200,
        )
        .unwrap();
        let b = make_trajectory(
            TrajectorySource::Random {
                seed: 9,
                drift_bound: 20,
            },
            Origin::new(0, 0, 0),
            200,
        )
        .unwrap();
        let c = make_trajectory(
            TrajectorySource::Random {
                seed: 10,
                drift_bound: 20,
            },
            Origin::new(0, 0, 0),
            200,
        )
        .unwrap();
        assert_eq!(a, b);
        assert_ne!(a.offsets, c.offsets);
        let inc = a.increments();
        assert!(inc
            .iter()
            .all(|&(x, y)| (-20..=20).contains(&x) && (-20..=20).contains(&y)));
        // Both extremes of the lattice show up over 400 draws.
        assert!(inc.iter().any(|&(x, y)| x.abs() >= 18 || y.abs() >= 18));
    }

    #[test]
    fn linear_offsets() {
        let t = make_trajectory(
            TrajectorySource::Linear {
                endpoint: (-30, 20),
            },
            Origin::new(0, 0, 0),
            10,
        )
        .unwrap();
        assert_eq!(t.offsets[0], (-3, 2));
        assert_eq!(t.offsets[9], (-30, 20));
        let t = make_trajectory(
            TrajectorySource::Linear { endpoint: (5, 0) },
            Origin::new(0, 0, 0),
            10,
        )
        .unwrap();
        assert_eq!(t.offsets[0], (1, 0)); // 0.5 rounds up
        assert_eq!(t.offsets[2], (2, 0)); // 1.5 rounds up
    }

    #[test]
    fn collect_static_non_displaced_is_zero() {
        let seq = static_seq(30, 30, 6);
        let t = make_trajectory(TrajectorySource::NonDisplaced, Origin::new(15, 15, 0), 5).unwrap();
        let v = collect_volume(&seq, &t, 10).unwrap();
        assert_eq!(v.diffs.dims(), (10, 10, 5));
        assert!(v.diffs.as_slice().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn collect_truncates_when_leaving_frame() {
        let seq = static_seq(30, 30, 6);
        let t = make_trajectory(
            TrajectorySource::Linear { endpoint: (25, 0) },
            Origin::new(15, 15, 0),
            5,
        )
        .unwrap();
        // Offsets 5, 10, 15, ...; the 10x10 patch spans x 10..20 so x + 10 fits, x + 15 does not.
        let v = collect_volume(&seq, &t, 10).unwrap();
        assert_eq!(v.depth(), 2);
        assert_eq!(v.trajectory.offsets.len(), 2);
        // Running out of frames also truncates.
        let t = make_trajectory(TrajectorySource::NonDisplaced, Origin::new(15, 15, 3), 5).unwrap();
        assert_eq!(collect_volume(&seq, &t, 10).unwrap().depth(), 2);
    }

    #[test]
    fn sidecar_records_prng() {
        let seq = static_seq(40, 40, 4);
        let t = make_trajectory(
            TrajectorySource::Random {
                seed: 3,
                drift_bound: 1,
            },
            Origin::new(20, 20, 0),
            3,
        )
        .unwrap();
        let v = collect_volume(&seq, &t, 8).unwrap();
        let s = v.sidecar();
        assert_eq!(s["seed"], 3);
        assert_eq!(s["prng"], PRNG_ALGORITHM);
        assert_eq!(s["trajectory_kind"], "random");
    }

    #[test]
    fn adjacent_slices_follow_consecutive_frames() {
        let seq = synthetic::translating_sequence(
            &synthetic::TextureSpec::default(),
            60,
            60,
            5,
            (1, 0),
            0.0,
            3,
        )
        .unwrap();
        let traj = make_trajectory(
            TrajectorySource::Random {
                seed: 9,
                drift_bound: 2,
            },
            Origin::new(30, 30, 0),
            4,
        )
        .unwrap();
        let vol = collect_volume_with(&seq, &traj, 11, DiffMode::Adjacent).unwrap();
        assert_eq!(vol.depth(), 4);
        let mut prev = (0i64, 0i64);
        for t in 1..=4 {
            let (ox, oy) = traj.offsets[t - 1];
            let (ox, oy) = (i64::from(ox), i64::from(oy));
            for j in 0..11 {
                for i in 0..11 {
                    let (x, y) = (25 + i as i64, 25 + j as i64);
                    let want = seq
                        .frame(t - 1)
                        .get((x + prev.0) as usize, (y + prev.1) as usize)
                        - seq.frame(t).get((x + ox) as usize, (y + oy) as usize);
                    assert_eq!(vol.diffs.get(i, j, t - 1), want);
                }
            }
            prev = (ox, oy);
        }
    }

    #[test]
    fn adjacent_motion_aligned_is_zero() {
        let seq = synthetic::translating_sequence(
            &synthetic::TextureSpec::default(),
            50,
            50,
            6,
            (2, -1),
            0.0,
            4,
        )
        .unwrap();
        let flows = synthetic::constant_flows(50, 50, 5, (2, -1));
        let traj =
            make_trajectory(TrajectorySource::Motion(&flows), Origin::new(20, 25, 0), 5).unwrap();
        let vol = collect_volume_with(&seq, &traj, 15, DiffMode::Adjacent).unwrap();
        assert_eq!(vol.depth(), 5);
        assert!(vol.diffs.as_slice().iter().all(|&v| v == 0.0));
        // Both modes agree on the first slice.
        let anchored = collect_volume(&seq, &traj, 15).unwrap();
        assert_eq!(anchored.diffs.slice(0), vol.diffs.slice(0));
    }

    #[test]
    fn diff_mode_parses() {
        assert_eq!("adjacent".parse::<DiffMode>().unwrap(), DiffMode::Adjacent);
        assert_eq!(DiffMode::default().to_string(), "anchored");
        assert!("both".parse::<DiffMode>().is_err());
    }
}
