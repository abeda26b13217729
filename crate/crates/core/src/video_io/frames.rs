use std::fs;
use std::io::Write;
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use image::{ColorType, ImageReader};

use crate::error::{Error, Result};
use crate::grid::Plane;

/// An ordered run of luminance frames sharing one size.
///
/// Frame `0` of the sequence is whatever index the caller loaded first; all
/// frame indices used by the rest of the crate are offsets into `frames`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    frames: Vec<Plane>,
    width: usize,
    height: usize,
}

impl FrameSequence {
    /// Validates that there is at least one frame, that all frames share a
    /// size, and that every sample is finite and inside `[0, 255]`.
    pub fn new(frames: Vec<Plane>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::InvalidParameter("a sequence needs at least one frame".into()))?;
        let (width, height) = first.dims();
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter("frames must be non-empty".into()));
        }
        for (t, f) in frames.iter().enumerate() {
            if f.dims() != (width, height) {
                return Err(Error::DimensionMismatch {
                    path: PathBuf::from(format!("<frame {t}>")),
                    want_w: width,
                    want_h: height,
                    got_w: f.width(),
                    got_h: f.height(),
                });
            }
            if f.as_slice()
                .iter()
                .any(|v| !v.is_finite() || *v < 0.0 || *v > 255.0)
            {
                return Err(Error::InvalidParameter(format!(
                    "frame {t} has luminance outside [0, 255]"
                )));
            }
        }
        Ok(FrameSequence {
            frames,
            width,
            height,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn frame(&self, t: usize) -> &Plane {
        &self.frames[t]
    }

    pub fn get(&self, t: usize) -> Option<&Plane> {
        self.frames.get(t)
    }

    pub fn frames(&self) -> &[Plane] {
        &self.frames
    }

    /// Returns a new sequence with every sample multiplied by `k`, clamped to
    /// the luminance range.
    pub fn scaled(&self, k: f64) -> Result<Self> {
        let frames = self
            .frames
            .iter()
            .map(|f| f.map(|v| (v * k).clamp(0.0, 255.0)))
            .collect();
        FrameSequence::new(frames)
    }
}

/// Expands a printf-style frame template: `%d`, `%5d` and `%05d` are
/// replaced by `index`, `%%` by a literal percent sign.
pub fn format_frame_path(pattern: &str, index: usize) -> Result<PathBuf> {
    let mut out = String::with_capacity(pattern.len() + 8);
    let mut chars = pattern.chars().peekable();
    let mut substituted = false;
    while let Some(c) = chars.next() {
        if c != '%' {
            out.push(c);
            continue;
        }
        if chars.peek() == Some(&'%') {
            chars.next();
            out.push('%');
            continue;
        }
        let mut spec = String::new();
        while let Some(&d) = chars.peek() {
            if d.is_ascii_digit() {
                spec.push(d);
                chars.next();
            } else {
                break;
            }
        }
        match chars.next() {
            Some('d') => {}
            _ => {
                return Err(Error::InvalidParameter(format!(
                    "unsupported conversion in frame pattern {pattern:?}"
                )))
            }
        }
        let zero_pad = spec.starts_with('0');
        let width: usize = if spec.is_empty() {
            0
        } else {
            spec.parse().map_err(|_| {
                Error::InvalidParameter(format!("bad field width in frame pattern {pattern:?}"))
            })?
        };
        if zero_pad {
            out.push_str(&format!("{index:0width$}"));
        } else {
            out.push_str(&format!("{index:width$}"));
        }
        substituted = true;
    }
    if !substituted {
        return Err(Error::InvalidParameter(format!(
            "frame pattern {pattern:?} has no %d field"
        )));
    }
    Ok(PathBuf::from(out))
}

/// Reads one 8-bit grayscale PGM (P5) or PNG as a plane of `f64` luminance.
pub fn load_frame(path: &Path) -> Result<Plane> {
    if !path.exists() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let reader = ImageReader::open(path)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?
        .with_guessed_format()
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    let img = reader.decode().map_err(|e| Error::Decode {
        path: path.to_path_buf(),
        detail: e.to_string(),
    })?;
    if img.color() != ColorType::L8 {
        return Err(Error::UnsupportedPixel {
            path: path.to_path_buf(),
            detail: format!("{:?}", img.color()),
        });
    }
    let gray = img.into_luma8();
    let (w, h) = gray.dimensions();
    let data = gray.into_raw().into_iter().map(f64::from).collect();
    Plane::from_vec(w as usize, h as usize, data)
}

/// Loads frames `range` (inclusive) of `pattern`, in index order.
pub fn load_frame_sequence(pattern: &str, range: RangeInclusive<usize>) -> Result<FrameSequence> {
    if range.is_empty() {
        return Err(Error::InvalidParameter("empty frame range".into()));
    }
    let mut frames = Vec::new();
    let mut dims: Option<(usize, usize)> = None;
    for index in range {
        let path = format_frame_path(pattern, index)?;
        let frame = load_frame(&path)?;
        match dims {
            None => dims = Some(frame.dims()),
            Some((w, h)) if frame.dims() != (w, h) => {
                return Err(Error::DimensionMismatch {
                    path,
                    want_w: w,
                    want_h: h,
                    got_w: frame.width(),
                    got_h: frame.height(),
                })
            }
            Some(_) => {}
        }
        frames.push(frame);
    }
    FrameSequence::new(frames)
}

/// Writes a binary PGM. Samples are rounded and clamped to `[0, maxval]`;
/// `maxval` above 255 produces big-endian 16-bit samples.
pub fn write_pgm(plane: &Plane, maxval: u16, path: &Path) -> Result<()> {
    if maxval == 0 {
        return Err(Error::InvalidParameter(
            "PGM maxval must be positive".into(),
        ));
    }
    let mut buf = format!("P5\n{} {}\n{}\n", plane.width(), plane.height(), maxval).into_bytes();
    let top = f64::from(maxval);
    for &v in plane.as_slice() {
        let q = v.round().clamp(0.0, top) as u16;
        if maxval > 255 {
            buf.extend_from_slice(&q.to_be_bytes());
        } else {
            buf.push(q as u8);
        }
    }
    let mut f = fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    f.write_all(&buf).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pattern_expansion() {
        assert_eq!(
            format_frame_path("f_%03d.pgm", 7).unwrap(),
            PathBuf::from("f_007.pgm")
        );
        assert_eq!(
            format_frame_path("dir/%d.png", 12).unwrap(),
            PathBuf::from("dir/12.png")
        );
        assert_eq!(
            format_frame_path("a%%b%4d", 3).unwrap(),
            PathBuf::from("a%b   3")
        );
        assert!(format_frame_path("nothing.pgm", 1).is_err());
        assert!(format_frame_path("f_%s.pgm", 1).is_err());
    }

    #[test]
    fn sequence_rejects_out_of_range_luminance() {
        let bad = Plane::filled(2, 2, 300.0);
        assert!(FrameSequence::new(vec![bad]).is_err());
        assert!(FrameSequence::new(vec![]).is_err());
    }

    #[test]
    fn sequence_rejects_size_mismatch() {
        let r = FrameSequence::new(vec![Plane::new(4, 4), Plane::new(4, 5)]);
        assert!(matches!(r, Err(Error::DimensionMismatch { .. })));
    }
}
