//! Depth-sequence data model, file formats, synthetic scenes and
//! robustness perturbations.

mod format;
mod perturb;
mod synth;

use std::path::PathBuf;

use thiserror::Error;

pub use format::{
    decode_dseq, encode_dseq, load_sequence, read_pgm, save_sequence, write_pgm, DSEQ_MAGIC,
    DSEQ_VERSION,
};
pub use perturb::{add_pepper_noise, apply_occlusion, OcclusionType};
pub use synth::{synth_action, Blob, BlobShape, HeldObject, SynthOutput, SynthSpec};

#[derive(Debug, Error)]
pub enum DepthIoError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("bad magic bytes, expected \"DSEQ\"")]
    BadMagic,
    #[error("unsupported DSEQ version {0}")]
    UnsupportedVersion(u16),
    #[error("malformed header: {0}")]
    MalformedHeader(String),
    #[error("empty sequence")]
    EmptySequence,
    #[error("a sequence needs at least 2 frames, got {0}")]
    TooFewFrames(usize),
    #[error("frame {frame} is {found_w}x{found_h}, expected {expected_w}x{expected_h}")]
    DimensionMismatch {
        frame: usize,
        expected_w: usize,
        expected_h: usize,
        found_w: usize,
        found_h: usize,
    },
    #[error("truncated payload: expected {expected} bytes, found {found}")]
    Truncated { expected: usize, found: usize },
    #[error("{extra} unexpected trailing bytes after payload")]
    TrailingData { extra: usize },
    #[error("frame buffer holds {len} values, expected {width}x{height}")]
    FrameSize {
        width: usize,
        height: usize,
        len: usize,
    },
    #[error("invalid PGM {path}: {reason}")]
    InvalidPgm { path: PathBuf, reason: String },
    #[error("no PGM frames found in {0}")]
    NoFrames(PathBuf),
    #[error("invalid synthetic scene: {0}")]
    InvalidSynthSpec(String),
    #[error("noise fraction {0} outside [0, 1]")]
    FractionOutOfRange(f64),
    #[error("occlusion index {0} outside 1..=8")]
    InvalidOcclusion(u8),
}

/// One depth image: millimeters per pixel, row-major, 0 meaning no reading.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthFrame {
    width: usize,
    height: usize,
    depth: Vec<u16>,
}

impl DepthFrame {
    pub fn new(width: usize, height: usize, depth: Vec<u16>) -> Result<Self, DepthIoError> {
        if depth.len() != width * height {
            return Err(DepthIoError::FrameSize {
                width,
                height,
                len: depth.len(),
            });
        }
        Ok(Self {
            width,
            height,
            depth,
        })
    }

    pub fn filled(width: usize, height: usize, value: u16) -> Self {
        Self {
            width,
            height,
            depth: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.depth[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: u16) {
        self.depth[y * self.width + x] = value;
    }

    pub fn as_slice(&self) -> &[u16] {
        &self.depth
    }

    pub fn as_mut_slice(&mut self) -> &mut [u16] {
        &mut self.depth
    }

    pub fn same_grid(&self, other: &DepthFrame) -> bool {
        self.width == other.width && self.height == other.height
    }
}

/// Ordered depth frames of one performed action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DepthSequence {
    frames: Vec<DepthFrame>,
    pub subject_id: i32,
    pub action_label: i32,
    pub name: String,
}

impl DepthSequence {
    pub fn new(
        frames: Vec<DepthFrame>,
        subject_id: i32,
        action_label: i32,
        name: impl Into<String>,
    ) -> Result<Self, DepthIoError> {
        match frames.len() {
            0 => return Err(DepthIoError::EmptySequence),
            1 => return Err(DepthIoError::TooFewFrames(1)),
            _ => {}
        }
        let (w, h) = (frames[0].width, frames[0].height);
        for (i, f) in frames.iter().enumerate() {
            if f.width != w || f.height != h {
                return Err(DepthIoError::DimensionMismatch {
                    frame: i,
                    expected_w: w,
                    expected_h: h,
                    found_w: f.width,
                    found_h: f.height,
                });
            }
        }
        Ok(Self {
            frames,
            subject_id,
            action_label,
            name: name.into(),
        })
    }

    pub fn frames(&self) -> &[DepthFrame] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    /// Always false for a constructed sequence; present for API symmetry.
    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width
    }

    pub fn height(&self) -> usize {
        self.frames[0].height
    }

    /// Depth at (x, y, f).
    #[inline]
    pub fn at(&self, x: usize, y: usize, f: usize) -> u16 {
        self.frames[f].get(x, y)
    }

    /// Same metadata, new frames of identical geometry.
    pub(crate) fn with_frames(&self, frames: Vec<DepthFrame>) -> Self {
        debug_assert_eq!(frames.len(), self.frames.len());
        Self {
            frames,
            subject_id: self.subject_id,
            action_label: self.action_label,
            name: self.name.clone(),
        }
    }
}
