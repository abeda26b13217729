use clap::Args;
use serde::Serialize;
use spacetime_stats::norm::GaussianWindow;
use spacetime_stats::regularity::{
    displacement_range, estimate_patch_motion, regularity_map, MapConfig, Scorer,
};
use spacetime_stats::trajectories::Patch;

use crate::args::{parse_pair, BinArgs, OutArgs, SeqArgs};
use crate::input::load_sequence;
use crate::output::OutDir;
use crate::CliError;

/// Two-frame regularity map of one patch.
#[derive(Debug, Clone, Args, Serialize)]
pub struct RegmapArgs {
    #[command(flatten)]
    pub seq: SeqArgs,
    /// Top-left corner `X,Y` of the patch; defaults to a centered patch.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub patch: Option<(i64, i64)>,
    #[arg(long, default_value_t = 81)]
    pub patch_size: usize,
    /// Displacement range `R`; defaults to the value tied to the patch size.
    #[arg(long)]
    pub range: Option<usize>,
    /// Reference frame, as an offset into the loaded frames.
    #[arg(long, default_value_t = 0)]
    pub t0: usize,
    /// Frame separation.
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    #[arg(long, default_value_t = spacetime_stats::norm::SPATIAL_HALF_WIDTH)]
    pub spatial_half_width: usize,
    #[arg(long = "c", default_value_t = spacetime_stats::norm::DIVISIVE_C)]
    pub c: f64,
    #[command(flatten)]
    pub bins: BinArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

pub fn run(args: &RegmapArgs, argv: &[String]) -> Result<(), CliError> {
    let mut out = OutDir::create(&args.out.out, "regmap", argv)?;
    let seq = load_sequence(&args.seq, &mut out, 2)?;
    let n = args.patch_size;
    let radius = match args.range {
        Some(r) => r,
        None => displacement_range(n)?,
    };
    let (px, py) = args.patch.unwrap_or((
        (seq.width() as i64 - n as i64) / 2,
        (seq.height() as i64 - n as i64) / 2,
    ));
    let config = MapConfig {
        t: args.t,
        window: GaussianWindow::spatial(args.spatial_half_width, args.spatial_half_width)?,
        c: args.c,
        scorer: Scorer::new(args.bins.binning()?)?,
    };
    let map = regularity_map(&seq, Patch::square(px, py, n), args.t0, radius, &config)?;
    let estimate = estimate_patch_motion(&map)?;
    out.write("regmap.csv", map.to_csv())?;
    let scaling = map.write_pgm16(&out.path("regmap.pgm"))?;
    out.write_json(
        "regmap.json",
        &serde_json::json!({
            "patch": map.patch,
            "t0": map.t0,
            "t": map.t,
            "radius": map.radius(),
            "norm": map.norm_kind,
            "argmin": map.argmin(),
            "estimate": estimate,
            "pgm": scaling,
        }),
    )?;
    out.finish(args)?;
    Ok(())
}
