//! Spatio-temporal interest points.
//!
//! Candidates come from the silhouettes of each foreground frame projected
//! onto the xy, xz and zy planes: contours are sampled every `lambda` pixels
//! of arc length and lifted back to `(x, y, z, f)`. Inter-frame motion on
//! each plane yields per-frame motion boxes (motion-based points) and the
//! motion accumulated over the sequence yields one box per plane
//! (shape-based points).

mod contour;
mod detector;
mod motion;
mod projection;
mod select;

use std::fmt;
use std::io::Write;
use std::path::Path;

use thiserror::Error;

pub use contour::{sample_contour_candidates, trace_outer_contours, sample_contour};
pub use detector::{detect_stips, FrameStips, SequenceStips, StipParams};
pub use motion::{accumulate_motion, close_disk, disk_offsets, motion_region, refine_motion, AccumulatedMotion, RefinedMotion};
pub use projection::{project_foreground, PlaneSet};
pub use select::{select_stips, MotionBoxes};

use crate::background::BackgroundError;

#[derive(Debug, Error, PartialEq)]
pub enum StipError {
    #[error("foreground mask is empty")]
    EmptyMask,
    #[error("silhouette is empty")]
    EmptySilhouette,
    #[error("plane views differ: {0:?} vs {1:?}")]
    ViewMismatch(View, View),
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("lambda must be at least 1, got {0}")]
    InvalidLambda(f64),
    #[error("z bin size must be positive, got {0}")]
    InvalidZBin(f64),
    #[error(transparent)]
    Background(#[from] BackgroundError),
}

/// Projection plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum View {
    /// Columns x, rows y, value depth (mm).
    Xy,
    /// Columns x, rows z-bin, value the largest foreground y.
    Xz,
    /// Columns z-bin, rows y, value the largest foreground x.
    Zy,
}

impl View {
    pub const ALL: [View; 3] = [View::Xy, View::Xz, View::Zy];

    pub fn name(self) -> &'static str {
        match self {
            View::Xy => "xy",
            View::Xz => "xz",
            View::Zy => "zy",
        }
    }
}

/// Quantization of depth onto plane-map pixels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZAxis {
    pub bin_mm: f64,
    pub bins: usize,
}

impl ZAxis {
    /// Smallest axis holding depths up to `max_depth_mm`.
    pub fn covering(max_depth_mm: u16, bin_mm: f64) -> Result<Self, StipError> {
        if !(bin_mm > 0.0) {
            return Err(StipError::InvalidZBin(bin_mm));
        }
        Ok(Self {
            bin_mm,
            bins: (max_depth_mm as f64 / bin_mm).floor() as usize + 1,
        })
    }

    #[inline]
    pub fn bin(&self, z_mm: u32) -> usize {
        ((z_mm as f64 / self.bin_mm).floor() as usize).min(self.bins - 1)
    }

    /// Depth in mm represented by a bin index.
    #[inline]
    pub fn depth_of(&self, bin: usize) -> u32 {
        (bin as f64 * self.bin_mm).round() as u32
    }
}

/// A projected map of one foreground frame.
///
/// `values` follow the [`View`] conventions; `occupied` marks cells that hold
/// a projected (or interpolated) foreground voxel. Empty cells hold 0.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneMap {
    pub view: View,
    pub width: usize,
    pub height: usize,
    pub values: Vec<u16>,
    pub occupied: Vec<bool>,
    pub z_bin_mm: f64,
}

impl PlaneMap {
    pub fn empty(view: View, width: usize, height: usize, z_bin_mm: f64) -> Self {
        Self {
            view,
            width,
            height,
            values: vec![0; width * height],
            occupied: vec![false; width * height],
            z_bin_mm,
        }
    }

    #[inline]
    pub fn get(&self, col: usize, row: usize) -> u16 {
        self.values[row * self.width + col]
    }

    #[inline]
    pub fn is_occupied(&self, col: usize, row: usize) -> bool {
        self.occupied[row * self.width + col]
    }

    pub fn silhouette(&self) -> crate::mask::BinaryMask {
        crate::mask::BinaryMask::from_vec(self.width, self.height, self.occupied.clone())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StipKind {
    Candidate,
    Motion,
    Shape,
}

impl StipKind {
    pub fn name(self) -> &'static str {
        match self {
            StipKind::Candidate => "candidate",
            StipKind::Motion => "motion",
            StipKind::Shape => "shape",
        }
    }
}

/// An interest point `(x, y, z, f)`: pixel column and row, depth in mm and
/// frame index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Stip {
    pub x: usize,
    pub y: usize,
    pub z: u32,
    pub f: usize,
    pub kind: StipKind,
}

impl Stip {
    pub fn same_point(&self, other: &Stip) -> bool {
        (self.x, self.y, self.z, self.f) == (other.x, other.y, other.z, other.f)
    }

    pub fn as_f64(&self) -> [f64; 4] {
        [self.x as f64, self.y as f64, self.z as f64, self.f as f64]
    }

    /// Cell of this point on `view`.
    pub fn project(&self, view: View, z_axis: &ZAxis) -> (usize, usize) {
        match view {
            View::Xy => (self.x, self.y),
            View::Xz => (self.x, z_axis.bin(self.z)),
            View::Zy => (z_axis.bin(self.z), self.y),
        }
    }
}

impl fmt::Display for Stip {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {} {} {}", self.f, self.x, self.y, self.z, self.kind.name())
    }
}

/// Writes one `f x y z kind` line per point.
pub fn write_stips<'a>(
    path: impl AsRef<Path>,
    stips: impl IntoIterator<Item = &'a Stip>,
) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    for s in stips {
        writeln!(out, "{s}")?;
    }
    out.flush()
}
