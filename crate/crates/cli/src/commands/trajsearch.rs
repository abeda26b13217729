use clap::Args;
use serde::Serialize;
use spacetime_stats::norm::NormKind;
use spacetime_stats::regularity::{four_step_trajectory_search, Scorer, SearchConfig};
use spacetime_stats::trajectories::Origin;

use crate::args::{parse_pair, BinArgs, DiffModeArg, NormArgs, OutArgs, SeqArgs};
use crate::input::load_sequence;
use crate::output::OutDir;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum SearchNorm {
    Tdn,
    Stdn,
}

/// Coarse-to-fine search for the most regular straight path of one patch.
#[derive(Debug, Clone, Args, Serialize)]
pub struct TrajsearchArgs {
    #[command(flatten)]
    pub seq: SeqArgs,
    /// Patch center `X,Y`; defaults to the frame center.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub origin: Option<(i64, i64)>,
    /// Start frame, as an offset into the loaded frames.
    #[arg(long, default_value_t = 0)]
    pub t0: usize,
    #[arg(long, value_enum, default_value = "tdn")]
    pub norm: SearchNorm,
    #[arg(long, default_value_t = 100)]
    pub patch_size: usize,
    #[arg(long, default_value_t = 10)]
    pub depth: usize,
    /// Grid spacing of each step.
    #[arg(long, value_delimiter = ',', default_values_t = [12, 6, 3, 1])]
    pub spacings: Vec<i32>,
    #[arg(long, value_enum, default_value = "anchored")]
    pub diff_mode: DiffModeArg,
    #[command(flatten)]
    pub norm_args: NormArgs,
    #[command(flatten)]
    pub bins: BinArgs,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

pub fn run(args: &TrajsearchArgs, argv: &[String]) -> Result<(), CliError> {
    let mut out = OutDir::create(&args.out.out, "trajsearch", argv)?;
    let seq = load_sequence(&args.seq, &mut out, args.t0 + args.depth + 1)?;
    let kind = match args.norm {
        SearchNorm::Tdn => NormKind::Tdn,
        SearchNorm::Stdn => NormKind::Stdn,
    };
    let mut config = SearchConfig::new(kind)?;
    config.patch_size = args.patch_size;
    config.depth = args.depth;
    config.spacings = args.spacings.clone();
    config.window = args.norm_args.window(kind, true)?;
    config.c = args.norm_args.c;
    config.mode = args.diff_mode.into();
    config.scorer = Scorer::new(args.bins.binning()?)?;
    let (ox, oy) = args
        .origin
        .unwrap_or(((seq.width() / 2) as i64, (seq.height() / 2) as i64));
    let result = four_step_trajectory_search(&seq, Origin::new(ox, oy, args.t0), &config)?;

    let mut csv = String::from("step,spacing,x,y,kld,selected\n");
    for (i, step) in result.steps.iter().enumerate() {
        for &((x, y), k) in &step.candidates {
            let selected = u8::from((x, y) == step.incumbent);
            csv.push_str(&format!(
                "{},{},{x},{y},{k},{selected}\n",
                i + 1,
                step.spacing
            ));
        }
    }
    out.write("steps.csv", csv)?;
    let (u, v) = result.per_frame_motion();
    out.write_json(
        "search.json",
        &serde_json::json!({
            "endpoint": result.endpoint,
            "kld": result.kld,
            "per_frame_motion": [u, v],
            "trajectory": result.trajectory,
            "steps": result.steps,
        }),
    )?;
    out.finish(args)?;
    Ok(())
}
