//! Motion estimation by statistical regularity.
//!
//! A displacement is scored by how Gaussian the divisively normalized
//! displaced frame difference looks: the KL divergence between the histogram
//! of unit-variance coefficients and the discretized standard normal. Along
//! the true motion the difference is reduced to noise and scores low; any
//! other displacement leaves structured, heavy-tailed residue.
//!
//! Two estimators are built on the score:
//!
//! * [`regularity_map`] / [`estimate_patch_motion`]: exhaustive scoring of
//!   every displacement in `[-R, R]^2` between two frames using spatial
//!   normalization, averaged over the lowest-scoring 5%.
//! * [`four_step_trajectory_search`]: coarse-to-fine search over straight
//!   10-frame space-time paths using temporal or space-time normalization.

use std::cmp::Ordering;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Plane, Volume};
use crate::norm::{
    divisive_normalize, unit_variance, GaussianWindow, NormKind, NormalizedVolume, DIVISIVE_C,
    SPATIAL_HALF_WIDTH, TEMPORAL_HALF_WIDTH_SEARCH,
};
use crate::stats::{gaussian_reference, histogram, kld, Binning, Histogram};
use crate::trajectories::{
    collect_volume_with, displaced_frame_difference_clipped, make_trajectory, DiffMode,
    Displacement, Origin, Patch, Trajectory, TrajectorySource,
};
use crate::video_io::{write_pgm, FlowField, FrameSequence};

/// Search radius for an `n x n` patch: `floor(n/6)` rounded down to even.
pub fn displacement_range(n: usize) -> Result<usize> {
    if n < 6 {
        return Err(Error::InvalidParameter(format!(
            "patch size {n} is below 6; the displacement range would be empty"
        )));
    }
    let k = n / 6;
    Ok(k - k % 2)
}

/// How a coefficient set is turned into a regularity score.
#[derive(Debug, Clone, PartialEq)]
pub struct Scorer {
    pub binning: Binning,
    reference: Histogram,
}

impl Default for Scorer {
    fn default() -> Self {
        Scorer::new(Binning::default()).expect("default binning is valid")
    }
}

impl Scorer {
    pub fn new(binning: Binning) -> Result<Self> {
        Ok(Scorer {
            binning,
            reference: gaussian_reference(binning)?,
        })
    }

    pub fn reference(&self) -> &Histogram {
        &self.reference
    }

    /// KLD of unit-variance `coeffs` against the reference. Degenerate
    /// (constant) coefficient sets score `+inf`.
    pub fn score(&self, coeffs: &NormalizedVolume) -> Result<f64> {
        let unit = match unit_variance(coeffs) {
            Ok(u) => u,
            Err(Error::ZeroVariance) => return Ok(f64::INFINITY),
            Err(e) => return Err(e),
        };
        let h = histogram(unit.as_slice(), self.binning)?;
        kld(&h, &self.reference)
    }

    /// Normalizes a raw difference volume and scores it. An identically zero
    /// difference is a perfect match and scores `0`.
    pub fn score_differences(
        &self,
        diffs: &Volume,
        kind: NormKind,
        window: &GaussianWindow,
        c: f64,
    ) -> Result<f64> {
        if diffs.as_slice().iter().all(|&v| v == 0.0) {
            return Ok(0.0);
        }
        self.score(&divisive_normalize(diffs, kind, window, c)?)
    }
}

/// Parameters of the two-frame regularity map.
#[derive(Debug, Clone, PartialEq)]
pub struct MapConfig {
    /// Frame separation `t`.
    pub t: usize,
    pub window: GaussianWindow,
    pub c: f64,
    pub scorer: Scorer,
}

impl Default for MapConfig {
    fn default() -> Self {
        MapConfig {
            t: 1,
            window: GaussianWindow::spatial(SPATIAL_HALF_WIDTH, SPATIAL_HALF_WIDTH)
                .expect("valid half-widths"),
            c: DIVISIVE_C,
            scorer: Scorer::default(),
        }
    }
}

/// KLD scores over displacements `(x, y) in [-R, R]^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularityMap {
    radius: usize,
    kld: Vec<f64>,
    pub patch: Patch,
    pub t0: usize,
    pub t: usize,
    pub norm_kind: NormKind,
}

impl RegularityMap {
    /// Wraps row-major scores (`y` outer, `x` inner, both from `-R`).
    pub fn from_scores(
        radius: usize,
        kld: Vec<f64>,
        patch: Patch,
        t0: usize,
        t: usize,
    ) -> Result<Self> {
        let side = 2 * radius + 1;
        if kld.len() != side * side {
            return Err(Error::Shape(format!(
                "{} scores for a {side}x{side} map",
                kld.len()
            )));
        }
        if kld.iter().any(|v| v.is_nan() || *v < 0.0) {
            return Err(Error::InvalidParameter(
                "map scores must be non-negative".into(),
            ));
        }
        Ok(RegularityMap {
            radius,
            kld,
            patch,
            t0,
            t,
            norm_kind: NormKind::Sdn,
        })
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    pub fn side(&self) -> usize {
        2 * self.radius + 1
    }

    pub fn scores(&self) -> &[f64] {
        &self.kld
    }

    /// Score of displacement `(x, y)`.
    pub fn get(&self, x: i32, y: i32) -> f64 {
        let r = self.radius as i32;
        assert!(x.abs() <= r && y.abs() <= r, "displacement outside the map");
        self.kld[((y + r) as usize) * self.side() + (x + r) as usize]
    }

    /// All `(x, y, kld)` entries in row-major order.
    pub fn entries(&self) -> impl Iterator<Item = (i32, i32, f64)> + '_ {
        let r = self.radius as i32;
        let side = self.side();
        self.kld
            .iter()
            .enumerate()
            .map(move |(i, &k)| ((i % side) as i32 - r, (i / side) as i32 - r, k))
    }

    /// Lowest finite entry; ties go to the shorter vector, then to the
    /// lexicographically smaller `(x, y)`.
    pub fn argmin(&self) -> Option<(i32, i32)> {
        self.entries()
            .filter(|e| e.2.is_finite())
            .min_by(|a, b| candidate_order((a.0, a.1), a.2, (b.0, b.1), b.2))
            .map(|(x, y, _)| (x, y))
    }

    /// One CSV row per map row (`y = -R` first), columns `x = -R..=R`.
    pub fn to_csv(&self) -> String {
        let side = self.side();
        let mut out = String::new();
        for row in self.kld.chunks(side) {
            let cells: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    /// Writes a min-max scaled 16-bit PGM of the finite entries (infinite
    /// entries saturate to white) and returns the scaling as JSON.
    pub fn write_pgm16(&self, path: &Path) -> Result<serde_json::Value> {
        let finite: Vec<f64> = self.kld.iter().copied().filter(|v| v.is_finite()).collect();
        let lo = finite.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = finite.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let span = if hi > lo { hi - lo } else { 1.0 };
        let side = self.side();
        let plane = Plane::from_fn(side, side, |x, y| {
            let v = self.kld[y * side + x];
            if v.is_finite() && !finite.is_empty() {
                (v - lo) / span * 65535.0
            } else {
                65535.0
            }
        });
        write_pgm(&plane, 65535, path)?;
        Ok(serde_json::json!({
            "maxval": 65535,
            "kld_min": if finite.is_empty() { None } else { Some(lo) },
            "kld_max": if finite.is_empty() { None } else { Some(hi) },
            "mapping": "pixel = (kld - kld_min) / (kld_max - kld_min) * 65535; non-finite -> 65535",
            "row_order": "y = -R first",
        }))
    }
}

/// Orders candidates by score, then squared length, then `(x, y)`.
fn candidate_order(a: (i32, i32), ka: f64, b: (i32, i32), kb: f64) -> Ordering {
    ka.total_cmp(&kb)
        .then_with(|| {
            let na = i64::from(a.0).pow(2) + i64::from(a.1).pow(2);
            let nb = i64::from(b.0).pow(2) + i64::from(b.1).pow(2);
            na.cmp(&nb)
        })
        .then_with(|| a.cmp(&b))
}

fn score_displacement(
    seq: &FrameSequence,
    patch: Patch,
    t0: usize,
    d: Displacement,
    config: &MapConfig,
) -> Result<f64> {
    let Some(diff) = displaced_frame_difference_clipped(seq, t0, d, patch)? else {
        return Ok(f64::INFINITY);
    };
    config
        .scorer
        .score_differences(&diff.into_volume(), NormKind::Sdn, &config.window, config.c)
}

/// Scores every displacement in `[-R, R]^2` for `patch` between frames `t0`
/// and `t0 + config.t`.
///
/// Each displaced difference is restricted to the pixels whose displaced
/// counterpart exists; displacements with no overlap, or whose difference is
/// a nonzero constant, score `+inf`.
pub fn regularity_map(
    seq: &FrameSequence,
    patch: Patch,
    t0: usize,
    radius: usize,
    config: &MapConfig,
) -> Result<RegularityMap> {
    if config.t == 0 || t0 + config.t >= seq.len() {
        return Err(Error::OutOfBounds(format!(
            "frames {t0} and {} not both in a {}-frame sequence",
            t0 + config.t,
            seq.len()
        )));
    }
    if !patch.fits(seq.width(), seq.height()) {
        return Err(Error::OutOfBounds(format!(
            "{}x{} patch at ({}, {}) leaves the frame",
            patch.width, patch.height, patch.x, patch.y
        )));
    }
    let r = radius as i32;
    let side = 2 * radius + 1;
    let kld = (0..side * side)
        .into_par_iter()
        .map(|i| {
            let d = Displacement::new((i % side) as i32 - r, (i / side) as i32 - r, config.t);
            score_displacement(seq, patch, t0, d, config)
        })
        .collect::<Result<Vec<f64>>>()?;
    RegularityMap::from_scores(radius, kld, patch, t0, config.t)
}

/// Motion of one patch in pixels per frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotionEstimate {
    pub u: f64,
    pub v: f64,
    pub patch: Patch,
    pub t0: usize,
    /// Number of displacements averaged.
    pub set_size: usize,
}

/// Fraction of finite map entries averaged into the motion estimate.
pub const ESTIMATE_PERCENTILE: f64 = 0.05;

/// Averages the displacements whose score is at or below the nearest-rank
/// 5th percentile of the finite scores, divided by the frame separation.
/// Exact matches (identically zero differences, score 0) take precedence:
/// when any exist, only they are averaged.
pub fn estimate_patch_motion(map: &RegularityMap) -> Result<MotionEstimate> {
    let mut finite: Vec<f64> = map
        .scores()
        .iter()
        .copied()
        .filter(|v| v.is_finite())
        .collect();
    if finite.is_empty() {
        return Err(Error::AllInfinite);
    }
    finite.sort_by(f64::total_cmp);
    let rank = ((ESTIMATE_PERCENTILE * finite.len() as f64).ceil() as usize).max(1);
    let threshold = if finite[0] == 0.0 {
        0.0
    } else {
        finite[rank - 1]
    };
    let (mut sx, mut sy, mut n) = (0i64, 0i64, 0usize);
    for (x, y, k) in map.entries() {
        if k <= threshold {
            sx += i64::from(x);
            sy += i64::from(y);
            n += 1;
        }
    }
    let t = map.t as f64;
    Ok(MotionEstimate {
        u: sx as f64 / n as f64 / t,
        v: sy as f64 / n as f64 / t,
        patch: map.patch,
        t0: map.t0,
        set_size: n,
    })
}

/// Per-tile estimates over a non-overlapping `n x n` tiling from the
/// top-left corner; partial tiles at the right and bottom are skipped.
pub fn estimate_tiles(
    seq: &FrameSequence,
    t0: usize,
    n: usize,
    config: &MapConfig,
) -> Result<Vec<MotionEstimate>> {
    let radius = displacement_range(n)?;
    let (cols, rows) = (seq.width() / n, seq.height() / n);
    if cols == 0 || rows == 0 {
        return Err(Error::InvalidParameter(format!(
            "{}x{} frame is smaller than one {n}x{n} tile",
            seq.width(),
            seq.height()
        )));
    }
    (0..cols * rows)
        .into_par_iter()
        .map(|i| {
            let patch = Patch::square(((i % cols) * n) as i64, ((i / cols) * n) as i64, n);
            let map = regularity_map(seq, patch, t0, radius, config)?;
            estimate_patch_motion(&map)
        })
        .collect()
}

/// Dense flow from frame `t0` to `t0 + config.t`: each tile's estimate is
/// broadcast to its pixels, and the uncovered margin is invalid.
pub fn estimate_flow_field(
    seq: &FrameSequence,
    t0: usize,
    n: usize,
    config: &MapConfig,
) -> Result<FlowField> {
    let tiles = estimate_tiles(seq, t0, n, config)?;
    Ok(broadcast_tiles(seq.width(), seq.height(), &tiles))
}

pub fn broadcast_tiles(width: usize, height: usize, tiles: &[MotionEstimate]) -> FlowField {
    let mut field = FlowField::zeros(width, height);
    let mut covered = vec![false; width * height];
    for est in tiles {
        let p = est.patch;
        for y in p.y as usize..p.y as usize + p.height {
            for x in p.x as usize..p.x as usize + p.width {
                field.set(x, y, est.u as f32, est.v as f32);
                covered[y * width + x] = true;
            }
        }
    }
    for y in 0..height {
        for x in 0..width {
            if !covered[y * width + x] {
                field.invalidate(x, y);
            }
        }
    }
    field
}

/// Parameters of the coarse-to-fine trajectory search.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchConfig {
    pub norm_kind: NormKind,
    pub patch_size: usize,
    /// Frames spanned by each candidate path.
    pub depth: usize,
    /// Grid spacing of each step; the first step covers `[-2s, 2s]^2` with
    /// spacing `s`, later steps the 3x3 neighborhood of the incumbent.
    pub spacings: Vec<i32>,
    pub window: GaussianWindow,
    pub c: f64,
    pub mode: DiffMode,
    pub scorer: Scorer,
}

impl SearchConfig {
    /// 100x100 patches over 10 frames, grid spacings 12, 6, 3, 1, half-widths
    /// of 5 on every windowed axis.
    pub fn new(norm_kind: NormKind) -> Result<Self> {
        let window = match norm_kind {
            NormKind::Tdn => GaussianWindow::temporal(TEMPORAL_HALF_WIDTH_SEARCH)?,
            NormKind::Stdn => GaussianWindow::spatio_temporal(
                SPATIAL_HALF_WIDTH,
                SPATIAL_HALF_WIDTH,
                TEMPORAL_HALF_WIDTH_SEARCH,
            )?,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "trajectory search uses tdn or stdn, not {other}"
                )))
            }
        };
        Ok(SearchConfig {
            norm_kind,
            patch_size: 100,
            depth: 10,
            spacings: vec![12, 6, 3, 1],
            window,
            c: DIVISIVE_C,
            mode: DiffMode::Anchored,
            scorer: Scorer::default(),
        })
    }
}

/// One step of the search.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchStep {
    pub spacing: i32,
    /// `(endpoint, kld)` for every candidate that stayed in the frame.
    pub candidates: Vec<((i32, i32), f64)>,
    pub incumbent: (i32, i32),
    pub incumbent_kld: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub trajectory: Trajectory,
    pub endpoint: (i32, i32),
    pub kld: f64,
    pub steps: Vec<SearchStep>,
}

impl SearchResult {
    /// Mean per-frame motion along the found path.
    pub fn per_frame_motion(&self) -> (f64, f64) {
        let d = self.trajectory.depth() as f64;
        (
            f64::from(self.endpoint.0) / d,
            f64::from(self.endpoint.1) / d,
        )
    }
}

fn score_path(
    seq: &FrameSequence,
    origin: Origin,
    endpoint: (i32, i32),
    config: &SearchConfig,
) -> Result<Option<f64>> {
    let traj = make_trajectory(TrajectorySource::Linear { endpoint }, origin, config.depth)?;
    let vol = match collect_volume_with(seq, &traj, config.patch_size, config.mode) {
        Ok(v) => v,
        Err(Error::OutOfBounds(_)) => return Ok(None),
        Err(e) => return Err(e),
    };
    if vol.depth() < config.depth {
        return Ok(None);
    }
    let k =
        config
            .scorer
            .score_differences(&vol.diffs, config.norm_kind, &config.window, config.c)?;
    Ok(k.is_finite().then_some(k))
}

/// Coarse-to-fine search for the most regular straight space-time path of a
/// patch centered at `origin`.
///
/// The first step scores the 5x5 grid of endpoints at the first spacing; each
/// later step scores the 3x3 neighborhood of the incumbent at the next
/// spacing. The incumbent is kept unless a neighbor scores strictly better
/// (ties broken by shorter endpoint, then `(x, y)`), so scores never increase
/// from step to step.
pub fn four_step_trajectory_search(
    seq: &FrameSequence,
    origin: Origin,
    config: &SearchConfig,
) -> Result<SearchResult> {
    let first = *config
        .spacings
        .first()
        .ok_or_else(|| Error::InvalidParameter("search needs at least one step".into()))?;
    if config.spacings.iter().any(|&s| s <= 0) {
        return Err(Error::InvalidParameter(
            "grid spacings must be positive".into(),
        ));
    }
    if origin.t0 + config.depth >= seq.len() {
        return Err(Error::OutOfBounds(format!(
            "search needs {} frames after frame {}, sequence has {}",
            config.depth,
            origin.t0,
            seq.len()
        )));
    }

    let evaluate = |cands: Vec<(i32, i32)>| -> Result<Vec<((i32, i32), f64)>> {
        let scored = cands
            .into_par_iter()
            .map(|e| Ok(score_path(seq, origin, e, config)?.map(|k| (e, k))))
            .collect::<Result<Vec<_>>>()?;
        Ok(scored.into_iter().flatten().collect())
    };
    let best = |cands: &[((i32, i32), f64)]| {
        cands
            .iter()
            .copied()
            .min_by(|a, b| candidate_order(a.0, a.1, b.0, b.1))
    };

    let grid: Vec<(i32, i32)> = (-2..=2)
        .flat_map(|j| (-2..=2).map(move |i| (i * first, j * first)))
        .collect();
    let scored = evaluate(grid)?;
    let (mut incumbent, mut incumbent_kld) = best(&scored).ok_or(Error::NoCandidates)?;
    let mut steps = vec![SearchStep {
        spacing: first,
        candidates: scored,
        incumbent,
        incumbent_kld,
    }];

    for &s in &config.spacings[1..] {
        let neighbors: Vec<(i32, i32)> = (-1..=1)
            .flat_map(|j| (-1..=1).map(move |i| (i, j)))
            .filter(|&(i, j)| (i, j) != (0, 0))
            .map(|(i, j)| (incumbent.0 + i * s, incumbent.1 + j * s))
            .collect();
        let mut scored = evaluate(neighbors)?;
        scored.push((incumbent, incumbent_kld));
        let (e, k) = best(&scored).expect("incumbent is always a candidate");
        incumbent = e;
        incumbent_kld = k;
        steps.push(SearchStep {
            spacing: s,
            candidates: scored,
            incumbent,
            incumbent_kld,
        });
    }

    let trajectory = make_trajectory(
        TrajectorySource::Linear {
            endpoint: incumbent,
        },
        origin,
        config.depth,
    )?;
    Ok(SearchResult {
        trajectory,
        endpoint: incumbent,
        kld: incumbent_kld,
        steps,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map_with(radius: usize, entries: &[((i32, i32), f64)], fill: f64) -> RegularityMap {
        let side = 2 * radius + 1;
        let mut kld = vec![fill; side * side];
        let r = radius as i32;
        for &((x, y), k) in entries {
            kld[((y + r) as usize) * side + (x + r) as usize] = k;
        }
        RegularityMap::from_scores(radius, kld, Patch::square(0, 0, 10), 0, 1).unwrap()
    }

    #[test]
    fn table_ranges() {
        let got: Vec<usize> = [51, 61, 71, 81, 91, 101]
            .iter()
            .map(|&n| displacement_range(n).unwrap())
            .collect();
        assert_eq!(got, vec![8, 10, 10, 12, 14, 16]);
        assert_eq!(displacement_range(6).unwrap(), 0);
        assert!(displacement_range(5).is_err());
    }

    #[test]
    fn ranges_are_even() {
        for n in 6..500 {
            assert_eq!(displacement_range(n).unwrap() % 2, 0);
        }
    }

    #[test]
    fn unique_minimum_estimate() {
        // Only a handful of finite entries, so the 5% set is the minimum alone.
        let m = map_with(
            4,
            &[((3, -2), 0.001), ((0, 0), 0.5), ((1, 1), 0.6)],
            f64::INFINITY,
        );
        let e = estimate_patch_motion(&m).unwrap();
        assert_eq!((e.u, e.v, e.set_size), (3.0, -2.0, 1));
    }

    #[test]
    fn tied_minima_are_averaged() {
        let m = map_with(
            4,
            &[((2, 0), 0.01), ((4, 0), 0.01), ((-3, 3), 0.9)],
            f64::INFINITY,
        );
        let e = estimate_patch_motion(&m).unwrap();
        assert_eq!((e.u, e.v, e.set_size), (3.0, 0.0, 2));
    }

    #[test]
    fn uniform_map_averages_to_zero() {
        let m = map_with(3, &[], 0.25);
        let e = estimate_patch_motion(&m).unwrap();
        assert_eq!((e.u, e.v, e.set_size), (0.0, 0.0, 49));
    }

    #[test]
    fn percentile_set_size_is_nearest_rank() {
        // 289 distinct finite entries: ceil(0.05 * 289) = 15 are averaged.
        let side = 17;
        let kld: Vec<f64> = (1..=side * side).map(|i| i as f64).collect();
        let m = RegularityMap::from_scores(8, kld, Patch::square(0, 0, 51), 0, 1).unwrap();
        assert_eq!(estimate_patch_motion(&m).unwrap().set_size, 15);
    }

    #[test]
    fn exact_matches_take_precedence() {
        let m = map_with(3, &[((2, -1), 0.0), ((0, 0), 1e-4), ((1, 1), 2e-4)], 0.5);
        let e = estimate_patch_motion(&m).unwrap();
        assert_eq!((e.u, e.v, e.set_size), (2.0, -1.0, 1));
        let all_zero = map_with(2, &[], 0.0);
        assert_eq!(estimate_patch_motion(&all_zero).unwrap().set_size, 25);
    }

    #[test]
    fn all_infinite_map_errors() {
        let m = map_with(2, &[], f64::INFINITY);
        assert!(matches!(estimate_patch_motion(&m), Err(Error::AllInfinite)));
    }

    #[test]
    fn argmin_tie_breaking() {
        let m = map_with(3, &[((2, 1), 0.1), ((-1, 1), 0.1), ((1, -1), 0.1)], 1.0);
        assert_eq!(m.argmin(), Some((-1, 1)));
        let m = map_with(3, &[((0, 2), 0.1), ((2, 0), 0.1)], 1.0);
        assert_eq!(m.argmin(), Some((0, 2)));
    }

    #[test]
    fn map_csv_shape() {
        let m = map_with(1, &[((1, -1), 0.5)], 0.0);
        let csv = m.to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0], "0,0,0.5");
    }
}
