use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use spacetime_stats::norm::{
    GaussianWindow, NormKind, DIVISIVE_C, SPATIAL_HALF_WIDTH, TEMPORAL_HALF_WIDTH_SEARCH,
    TEMPORAL_HALF_WIDTH_STATS,
};
use spacetime_stats::stats::Binning;
use spacetime_stats::trajectories::DiffMode;

use crate::CliError;

/// Parses `X,Y`.
pub fn parse_pair(s: &str) -> Result<(i64, i64), String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("expected X,Y, got {s:?}"))?;
    let x = a.trim().parse().map_err(|_| format!("bad integer {a:?}"))?;
    let y = b.trim().parse().map_err(|_| format!("bad integer {b:?}"))?;
    Ok((x, y))
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SeqArgs {
    /// Frame path template with a printf-style index, e.g. `frames/f_%03d.pgm`.
    #[arg(long)]
    pub frames: String,
    /// Index of the first frame to load.
    #[arg(long, default_value_t = 0)]
    pub first: usize,
    /// Index of the last frame to load; by default frames are read until the
    /// next index is missing.
    #[arg(long)]
    pub last: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct BinArgs {
    /// Histogram bin count.
    #[arg(long, default_value_t = 101)]
    pub bins: usize,
    #[arg(long, default_value_t = -5.0, allow_negative_numbers = true)]
    pub bin_lo: f64,
    #[arg(long, default_value_t = 5.0, allow_negative_numbers = true)]
    pub bin_hi: f64,
}

impl BinArgs {
    pub fn binning(&self) -> Result<Binning, CliError> {
        Ok(Binning::new(self.bins, self.bin_lo, self.bin_hi)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum NormArg {
    Tdn,
    Sdn,
    Stdn,
}

impl From<NormArg> for NormKind {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Tdn => NormKind::Tdn,
            NormArg::Sdn => NormKind::Sdn,
            NormArg::Stdn => NormKind::Stdn,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum DiffModeArg {
    Anchored,
    Adjacent,
}

impl From<DiffModeArg> for DiffMode {
    fn from(m: DiffModeArg) -> Self {
        match m {
            DiffModeArg::Anchored => DiffMode::Anchored,
            DiffModeArg::Adjacent => DiffMode::Adjacent,
        }
    }
}

/// Window half-widths and saturation constant of the divisive normalization.
#[derive(Debug, Clone, Args, Serialize)]
pub struct NormArgs {
    /// Spatial half-width (both axes).
    #[arg(long, default_value_t = SPATIAL_HALF_WIDTH)]
    pub spatial_half_width: usize,
    /// Temporal half-width; defaults to 10 for `stats` and 5 for the
    /// trajectory search.
    #[arg(long)]
    pub temporal_half_width: Option<usize>,
    /// Saturation constant added to the local deviation.
    #[arg(long = "c", default_value_t = DIVISIVE_C)]
    pub c: f64,
}

impl NormArgs {
    pub fn window(&self, kind: NormKind, for_search: bool) -> Result<GaussianWindow, CliError> {
        let s = self.spatial_half_width;
        let t = self.temporal_half_width.unwrap_or(if for_search {
            TEMPORAL_HALF_WIDTH_SEARCH
        } else {
            TEMPORAL_HALF_WIDTH_STATS
        });
        Ok(match kind {
            NormKind::Tdn => GaussianWindow::temporal(t)?,
            NormKind::Sdn | NormKind::Mscn2d => GaussianWindow::spatial(s, s)?,
            NormKind::Stdn => GaussianWindow::spatio_temporal(s, s, t)?,
        })
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct OutArgs {
    /// Output directory (created if missing).
    #[arg(long)]
    #[serde(skip)]
    pub out: PathBuf,
}
