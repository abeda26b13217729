use clap::{Args, ValueEnum};
use serde::Serialize;
use spacetime_stats::norm::{divisive_normalize, unit_variance, NormKind};
use spacetime_stats::stats::{gaussian_reference, ggd_fit, histogram, kld};
use spacetime_stats::trajectories::{
    collect_volume_with, make_trajectory, Origin, TrajectorySource, PRNG_ALGORITHM,
};

use crate::args::{parse_pair, BinArgs, DiffModeArg, NormArg, NormArgs, OutArgs, SeqArgs};
use crate::input::{load_flows, load_sequence};
use crate::output::OutDir;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum TrajectoryArg {
    Motion,
    NonDisplaced,
    Random,
}

/// Histogram, GGD fit and KLD of normalized differences along one trajectory.
#[derive(Debug, Clone, Args, Serialize)]
pub struct StatsArgs {
    #[command(flatten)]
    pub seq: SeqArgs,
    #[arg(long, value_enum)]
    pub trajectory: TrajectoryArg,
    /// Ground-truth `.flo` template, indexed like the frames; file `k` maps
    /// frame `k` to `k + 1`. Required for motion trajectories.
    #[arg(long)]
    pub flow: Option<String>,
    /// Traced pixel `X,Y`; defaults to the frame center.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub origin: Option<(i64, i64)>,
    /// Start frame, as an offset into the loaded frames.
    #[arg(long, default_value_t = 0)]
    pub t0: usize,
    /// Number of difference slices.
    #[arg(long, default_value_t = 40)]
    pub depth: usize,
    #[arg(long, default_value_t = 100)]
    pub patch_size: usize,
    /// Per-step drift bound `R` of random trajectories.
    #[arg(long, default_value_t = 20)]
    pub drift_bound: u32,
    /// Seed of random trajectories.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "stdn")]
    pub norm: NormArg,
    #[command(flatten)]
    pub norm_args: NormArgs,
    #[arg(long, value_enum, default_value = "anchored")]
    pub diff_mode: DiffModeArg,
    #[command(flatten)]
    pub bins: BinArgs,
    /// Also write the raw difference volume (`volume.raw` + `volume.json`).
    #[arg(long)]
    pub export_volume: bool,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

pub fn run(args: &StatsArgs, argv: &[String]) -> Result<(), CliError> {
    if args.trajectory == TrajectoryArg::Motion && args.flow.is_none() {
        return Err(CliError::Usage("--trajectory motion needs --flow".into()));
    }
    let mut out = OutDir::create(&args.out.out, "stats", argv)?;
    let seq = load_sequence(&args.seq, &mut out, 2)?;
    let (ox, oy) = args
        .origin
        .unwrap_or(((seq.width() / 2) as i64, (seq.height() / 2) as i64));
    let origin = Origin::new(ox, oy, args.t0);
    let flows;
    let source = match args.trajectory {
        TrajectoryArg::Motion => {
            let pattern = args.flow.as_deref().expect("checked above");
            flows = load_flows(pattern, args.seq.first + args.t0, args.depth, &mut out)?;
            TrajectorySource::Motion(&flows)
        }
        TrajectoryArg::NonDisplaced => TrajectorySource::NonDisplaced,
        TrajectoryArg::Random => TrajectorySource::Random {
            seed: args.seed,
            drift_bound: args.drift_bound,
        },
    };
    let traj = make_trajectory(source, origin, args.depth)?;
    let vol = collect_volume_with(&seq, &traj, args.patch_size, args.diff_mode.into())?;
    if vol.depth() < args.depth {
        eprintln!(
            "warning: trajectory leaves the sequence; volume truncated to {} slices",
            vol.depth()
        );
    }
    let kind: NormKind = args.norm.into();
    let window = args.norm_args.window(kind, false)?;
    let coeffs = unit_variance(&divisive_normalize(
        &vol.diffs,
        kind,
        &window,
        args.norm_args.c,
    )?)?;
    let binning = args.bins.binning()?;
    let hist = histogram(coeffs.as_slice(), binning)?;
    let score = kld(&hist, &gaussian_reference(binning)?)?;
    let fit = ggd_fit(coeffs.as_slice())?;

    out.write("histogram.csv", hist.to_csv())?;
    out.write("ggd.json", fit.to_json() + "\n")?;
    out.write_json(
        "kld.json",
        &serde_json::json!({
            "kld": score,
            "norm": kind,
            "trajectory": vol.trajectory.kind,
            "diff_mode": vol.mode,
            "depth": vol.depth(),
            "samples": coeffs.as_slice().len(),
            "window_half_widths": window.half_widths(),
        }),
    )?;
    out.write_json("trajectory.json", &vol.trajectory)?;
    if args.export_volume {
        out.path("volume.raw");
        out.path("volume.json");
        vol.export(&args.out.out, "volume")?;
    }
    let mut params = serde_json::to_value(args).expect("arguments serialize");
    if args.trajectory == TrajectoryArg::Random {
        params["prng"] = PRNG_ALGORITHM.into();
    }
    out.finish(&params)?;
    Ok(())
}
