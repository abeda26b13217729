use std::path::PathBuf;

use clap::{Args, ValueEnum};
use serde::Serialize;
use spacetime_stats::evaluation::{evaluate_field, evaluate_patches, AngleUnit, EvalReport};
use spacetime_stats::regularity::displacement_range;
use spacetime_stats::trajectories::Patch;
use spacetime_stats::video_io::read_flo;

use crate::args::OutArgs;
use crate::commands::flow::eval_row;
use crate::output::OutDir;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitArg {
    Degrees,
    Radians,
}

/// Angular and endpoint error of an estimated flow against ground truth.
#[derive(Debug, Clone, Args, Serialize)]
pub struct EvalArgs {
    #[arg(long)]
    pub est: PathBuf,
    #[arg(long)]
    pub gt: PathBuf,
    /// Tile size used for the per-patch table and the `N` column.
    #[arg(long)]
    pub patch_size: Option<usize>,
    /// `range` column; defaults to the value tied to the patch size.
    #[arg(long)]
    pub range: Option<usize>,
    #[arg(long, value_enum, default_value = "degrees")]
    pub unit: UnitArg,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

pub fn run(args: &EvalArgs, argv: &[String]) -> Result<(), CliError> {
    let mut out = OutDir::create(&args.out.out, "eval", argv)?;
    out.record_input(&args.est)?;
    out.record_input(&args.gt)?;
    let est = read_flo(&args.est)?;
    let gt = read_flo(&args.gt)?;
    let report = match args.patch_size {
        Some(n) if n > 0 => {
            let (cols, rows) = (est.width() / n, est.height() / n);
            let patches: Vec<Patch> = (0..cols * rows)
                .map(|i| Patch::square(((i % cols) * n) as i64, ((i / cols) * n) as i64, n))
                .collect();
            evaluate_patches(&est, &gt, &patches)?
        }
        Some(_) => return Err(CliError::Usage("--patch-size must be positive".into())),
        None => evaluate_field(&est, &gt)?,
    };
    let report = report.in_unit(match args.unit {
        UnitArg::Degrees => AngleUnit::Degrees,
        UnitArg::Radians => AngleUnit::Radians,
    });
    let range = match (args.range, args.patch_size) {
        (Some(r), _) => Some(r),
        (None, Some(n)) => displacement_range(n).ok(),
        (None, None) => None,
    };
    out.write("eval.json", report.to_json() + "\n")?;
    out.write(
        "eval.csv",
        format!(
            "{}\n{}\n",
            EvalReport::CSV_HEADER,
            eval_row(args.patch_size, range, &report)
        ),
    )?;
    out.finish(args)?;
    Ok(())
}
