use clap::{Args, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use spacetime_stats::evaluation::{evaluate_field, EvalReport};
use spacetime_stats::horn_schunck::{horn_schunck, HsParams};
use spacetime_stats::norm::{GaussianWindow, NormKind};
use spacetime_stats::regularity::{
    broadcast_tiles, displacement_range, estimate_tiles, four_step_trajectory_search, MapConfig,
    MotionEstimate, Scorer, SearchConfig,
};
use spacetime_stats::trajectories::{Origin, Patch};
use spacetime_stats::video_io::{read_flo, write_flo, FlowField, FrameSequence};
use spacetime_stats::Error;

use crate::args::{BinArgs, DiffModeArg, NormArgs, OutArgs, SeqArgs};
use crate::input::load_sequence;
use crate::output::OutDir;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    RegularitySdn,
    FourstepTdn,
    FourstepStdn,
    HornSchunck,
}

/// Patch sizes visited by `--sweep`.
pub const SWEEP_SIZES: [usize; 6] = [51, 61, 71, 81, 91, 101];

/// Dense flow from frame `t0` to the next one.
#[derive(Debug, Clone, Args, Serialize)]
pub struct FlowArgs {
    #[command(flatten)]
    pub seq: SeqArgs,
    #[arg(long, value_enum)]
    pub method: Method,
    /// Tile size `N`; 81 for the regularity map, 100 for the trajectory search.
    #[arg(long)]
    pub patch_size: Option<usize>,
    /// Run every `N` in 51, 61, ..., 101.
    #[arg(long)]
    pub sweep: bool,
    /// Reference frame, as an offset into the loaded frames.
    #[arg(long, default_value_t = 0)]
    pub t0: usize,
    /// Frame separation of the regularity map.
    #[arg(long, default_value_t = 1)]
    pub t: usize,
    /// Path length of the trajectory search.
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
    #[arg(long, value_enum, default_value = "anchored")]
    pub diff_mode: DiffModeArg,
    #[command(flatten)]
    pub norm_args: NormArgs,
    #[command(flatten)]
    pub bins: BinArgs,
    /// Horn–Schunck iterations.
    #[arg(long, default_value_t = 100)]
    pub iterations: usize,
    /// Horn–Schunck smoothness weight.
    #[arg(long, default_value_t = 1.0)]
    pub alpha: f64,
    /// Gaussian presmoothing before Horn–Schunck.
    #[arg(long)]
    pub prefilter: bool,
    /// Ground-truth `.flo`; adds `eval.csv` with one row per flow.
    #[arg(long)]
    pub gt: Option<std::path::PathBuf>,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

#[derive(Debug, Serialize)]
struct SearchTile {
    patch: Patch,
    endpoint: Option<(i32, i32)>,
    kld: Option<f64>,
}

fn fourstep_field(
    seq: &FrameSequence,
    args: &FlowArgs,
    n: usize,
    kind: NormKind,
) -> Result<(FlowField, Vec<SearchTile>), CliError> {
    let mut config = SearchConfig::new(kind)?;
    config.patch_size = n;
    config.depth = args.depth;
    config.window = args.norm_args.window(kind, true)?;
    config.c = args.norm_args.c;
    config.mode = args.diff_mode.into();
    config.scorer = Scorer::new(args.bins.binning()?)?;
    let (cols, rows) = (seq.width() / n, seq.height() / n);
    if cols == 0 || rows == 0 {
        return Err(CliError::Data(format!(
            "{}x{} frame is smaller than one {n}x{n} tile",
            seq.width(),
            seq.height()
        )));
    }
    let results = (0..cols * rows)
        .into_par_iter()
        .map(|i| {
            let patch = Patch::square(((i % cols) * n) as i64, ((i / cols) * n) as i64, n);
            let h = (n / 2) as i64;
            let origin = Origin::new(patch.x + h, patch.y + h, args.t0);
            match four_step_trajectory_search(seq, origin, &config) {
                Ok(r) => Ok((patch, Some(r))),
                Err(Error::NoCandidates) => Ok((patch, None)),
                Err(e) => Err(e),
            }
        })
        .collect::<Result<Vec<_>, Error>>()?;
    let mut estimates = Vec::new();
    let mut tiles = Vec::new();
    for (patch, r) in results {
        if let Some(r) = &r {
            let (u, v) = r.per_frame_motion();
            estimates.push(MotionEstimate {
                u,
                v,
                patch,
                t0: args.t0,
                set_size: 1,
            });
        }
        tiles.push(SearchTile {
            patch,
            endpoint: r.as_ref().map(|r| r.endpoint),
            kld: r.as_ref().map(|r| r.kld),
        });
    }
    Ok((
        broadcast_tiles(seq.width(), seq.height(), &estimates),
        tiles,
    ))
}

pub fn run(args: &FlowArgs, argv: &[String]) -> Result<(), CliError> {
    if args.sweep && args.method == Method::HornSchunck {
        return Err(CliError::Usage(
            "--sweep does not apply to horn-schunck".into(),
        ));
    }
    if args.sweep && args.patch_size.is_some() {
        return Err(CliError::Usage(
            "--sweep and --patch-size are exclusive".into(),
        ));
    }
    let mut out = OutDir::create(&args.out.out, "flow", argv)?;
    let gt = match &args.gt {
        Some(p) => {
            out.record_input(p)?;
            Some(read_flo(p)?)
        }
        None => None,
    };
    let needed = match args.method {
        Method::RegularitySdn => args.t0 + args.t + 1,
        Method::FourstepTdn | Method::FourstepStdn => args.t0 + args.depth + 1,
        Method::HornSchunck => args.t0 + 2,
    };
    let seq = load_sequence(&args.seq, &mut out, needed)?;
    let default_n = if args.method == Method::RegularitySdn {
        81
    } else {
        100
    };
    let sizes: Vec<usize> = if args.sweep {
        SWEEP_SIZES.to_vec()
    } else {
        vec![args.patch_size.unwrap_or(default_n)]
    };

    // (file name, N, range, field)
    let mut fields: Vec<(String, Option<usize>, Option<usize>, FlowField)> = Vec::new();
    match args.method {
        Method::HornSchunck => {
            let params = HsParams {
                smoothness_weight: args.alpha,
                iterations: args.iterations,
                prefilter: args.prefilter,
            };
            let r = horn_schunck(seq.frame(args.t0), seq.frame(args.t0 + 1), &params)?;
            out.write("residuals.csv", r.residual_csv())?;
            fields.push(("flow.flo".into(), None, None, r.flow));
        }
        Method::RegularitySdn => {
            let s = args.norm_args.spatial_half_width;
            let config = MapConfig {
                t: args.t,
                window: GaussianWindow::spatial(s, s)?,
                c: args.norm_args.c,
                scorer: Scorer::new(args.bins.binning()?)?,
            };
            let mut all_tiles = Vec::new();
            for &n in &sizes {
                let tiles = estimate_tiles(&seq, args.t0, n, &config)?;
                let field = broadcast_tiles(seq.width(), seq.height(), &tiles);
                all_tiles.push(serde_json::json!({ "patch_size": n, "tiles": tiles }));
                fields.push((
                    flow_name(args.sweep, n),
                    Some(n),
                    Some(displacement_range(n)?),
                    field,
                ));
            }
            out.write_json("tiles.json", &all_tiles)?;
        }
        Method::FourstepTdn | Method::FourstepStdn => {
            let kind = if args.method == Method::FourstepTdn {
                NormKind::Tdn
            } else {
                NormKind::Stdn
            };
            let mut all_tiles = Vec::new();
            for &n in &sizes {
                let (field, tiles) = fourstep_field(&seq, args, n, kind)?;
                all_tiles.push(serde_json::json!({ "patch_size": n, "tiles": tiles }));
                fields.push((flow_name(args.sweep, n), Some(n), None, field));
            }
            out.write_json("tiles.json", &all_tiles)?;
        }
    }

    let mut csv = String::from(EvalReport::CSV_HEADER);
    csv.push('\n');
    for (name, n, range, field) in &fields {
        write_flo(field, &out.path(name))?;
        if let Some(gt) = &gt {
            let report = evaluate_field(field, gt)?;
            csv.push_str(&eval_row(*n, *range, &report));
            csv.push('\n');
        }
    }
    if gt.is_some() {
        out.write("eval.csv", csv)?;
    }
    out.finish(args)?;
    Ok(())
}

fn flow_name(sweep: bool, n: usize) -> String {
    if sweep {
        format!("flow_N{n:03}.flo")
    } else {
        "flow.flo".into()
    }
}

/// `N,range,AE,EE` with empty cells for values that do not apply.
pub fn eval_row(n: Option<usize>, range: Option<usize>, r: &EvalReport) -> String {
    let cell = |v: Option<usize>| v.map(|x| x.to_string()).unwrap_or_default();
    format!(
        "{},{},{:.4},{:.4}",
        cell(n),
        cell(range),
        r.mean_ae,
        r.mean_ee
    )
}
