//! Frame loading and ground-truth flow files.

mod flo;
mod frames;

pub use flo::{read_flo, write_flo, FlowField, FLO_MAGIC, UNKNOWN_FLOW, UNKNOWN_THRESHOLD};
pub use frames::{format_frame_path, load_frame, load_frame_sequence, write_pgm, FrameSequence};
