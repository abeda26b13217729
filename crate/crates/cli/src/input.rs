use spacetime_stats::video_io::{
    format_frame_path, load_frame, read_flo, FlowField, FrameSequence,
};

use crate::args::SeqArgs;
use crate::output::OutDir;
use crate::CliError;

/// Loads the frames named by `args`, recording each file in the manifest.
pub fn load_sequence(
    args: &SeqArgs,
    out: &mut OutDir,
    min_frames: usize,
) -> Result<FrameSequence, CliError> {
    let mut frames = Vec::new();
    let mut index = args.first;
    loop {
        if args.last.is_some_and(|last| index > last) {
            break;
        }
        let path = format_frame_path(&args.frames, index)?;
        if args.last.is_none() && !path.exists() {
            break;
        }
        out.record_input(&path)?;
        frames.push(load_frame(&path)?);
        index += 1;
    }
    if frames.len() < min_frames {
        return Err(CliError::Data(format!(
            "need at least {min_frames} frames from {:?} starting at index {}, found {}",
            args.frames,
            args.first,
            frames.len()
        )));
    }
    Ok(FrameSequence::new(frames)?)
}

/// Reads `count` flow files starting at index `first`.
pub fn load_flows(
    pattern: &str,
    first: usize,
    count: usize,
    out: &mut OutDir,
) -> Result<Vec<FlowField>, CliError> {
    (first..first + count)
        .map(|i| {
            let path = format_frame_path(pattern, i)?;
            out.record_input(&path)?;
            Ok(read_flo(&path)?)
        })
        .collect()
}
