use clap::Args;
use serde::Serialize;
use spacetime_stats::synthetic::{constant_flows, quantize, translating_sequence, TextureSpec};
use spacetime_stats::video_io::{write_flo, write_pgm};

use crate::args::{parse_pair, OutArgs};
use crate::output::OutDir;
use crate::CliError;

/// Writes a translating dead-leaves sequence (8-bit PGM frames) and its
/// ground-truth flow.
#[derive(Debug, Clone, Args, Serialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 256)]
    pub width: usize,
    #[arg(long, default_value_t = 256)]
    pub height: usize,
    #[arg(long, default_value_t = 12)]
    pub frames: usize,
    /// Integer motion `DX,DY` in pixels per frame.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "1,0")]
    pub motion: (i64, i64),
    /// Standard deviation of the additive noise, before rounding to 8 bits.
    #[arg(long, default_value_t = 8.0)]
    pub noise: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1.0)]
    pub disc_contrast: f64,
    #[arg(long, default_value_t = 2)]
    pub blur: usize,
    #[arg(long, default_value_t = 6.0)]
    pub grain: f64,
    #[arg(long, default_value_t = 3)]
    pub grain_half_width: usize,
    #[arg(long, default_value_t = 2.0)]
    pub min_radius: f64,
    #[arg(long, default_value_t = 40.0)]
    pub max_radius: f64,
    #[command(flatten)]
    #[serde(skip)]
    pub out: OutArgs,
}

pub fn run(args: &SynthArgs, argv: &[String]) -> Result<(), CliError> {
    let motion = (
        i32::try_from(args.motion.0).map_err(|_| CliError::Usage("motion out of range".into()))?,
        i32::try_from(args.motion.1).map_err(|_| CliError::Usage("motion out of range".into()))?,
    );
    let spec = TextureSpec {
        disc_contrast: args.disc_contrast,
        blur: args.blur,
        grain: args.grain,
        grain_half_width: args.grain_half_width,
        min_radius: args.min_radius,
        max_radius: args.max_radius,
        ..TextureSpec::default()
    };
    let mut out = OutDir::create(&args.out.out, "synth", argv)?;
    let seq = translating_sequence(
        &spec,
        args.width,
        args.height,
        args.frames,
        motion,
        args.noise,
        args.seed,
    )?;
    for (t, frame) in seq.frames().iter().enumerate() {
        write_pgm(
            &quantize(frame),
            255,
            &out.path(&format!("frame_{t:03}.pgm")),
        )?;
    }
    let flows = constant_flows(
        args.width,
        args.height,
        args.frames.saturating_sub(1),
        motion,
    );
    for (t, flow) in flows.iter().enumerate() {
        write_flo(flow, &out.path(&format!("flow_{t:03}.flo")))?;
    }
    out.finish(&serde_json::json!({ "args": args, "texture": spec }))?;
    Ok(())
}
