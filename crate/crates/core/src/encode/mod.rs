//! Bag-of-visual-words encoding.
//!
//! Descriptors are quantized against k-means codebooks and pooled into
//! normalized histograms. Per-scale motion histograms and the shape
//! histogram are concatenated into one representation.

mod codebook;
mod pooling;

use thiserror::Error;

pub use codebook::{
    kmeans, nearest_centroid, read_codebook, write_codebook, Codebook, KMeansParams,
    CDBK_MAGIC, CDBK_VERSION,
};
pub use pooling::{stp_dimension, stp_encode, stw_encode, vq_histogram, StpLevel, VolumeExtent};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("no descriptors to cluster")]
    EmptyInput,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("descriptor length {found} does not match codebook dimension {expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("segment lengths differ: {0}")]
    LengthMismatch(String),
    #[error("point and descriptor counts differ ({points} vs {descriptors})")]
    CountMismatch { points: usize, descriptors: usize },
    #[error("no points to weight")]
    EmptyStipSet,
    #[error("codebook file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Segment {
    pub name: String,
    pub offset: usize,
    pub len: usize,
}

/// Concatenated histograms with a record of where each one sits.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Representation {
    pub values: Vec<f64>,
    pub layout: Vec<Segment>,
}

impl Representation {
    pub fn push_segment(&mut self, name: impl Into<String>, values: &[f64]) {
        self.layout.push(Segment {
            name: name.into(),
            offset: self.values.len(),
            len: values.len(),
        });
        self.values.extend_from_slice(values);
    }

    pub fn segment(&self, name: &str) -> Option<&[f64]> {
        self.layout
            .iter()
            .find(|s| s.name == name)
            .map(|s| &self.values[s.offset..s.offset + s.len])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// `[H_motion scale 1, ..., H_motion scale L, H_shape]`.
pub fn fuse(motion_hists: &[Vec<f64>], shape_hist: &[f64]) -> Result<Representation, EncodeError> {
    if let Some(first) = motion_hists.first() {
        if let Some(bad) = motion_hists.iter().find(|h| h.len() != first.len()) {
            return Err(EncodeError::LengthMismatch(format!(
                "motion histograms of length {} and {}",
                first.len(),
                bad.len()
            )));
        }
    }
    let mut rep = Representation::default();
    for (l, h) in motion_hists.iter().enumerate() {
        rep.push_segment(format!("motion_scale_{}", l + 1), h);
    }
    rep.push_segment("shape", shape_hist);
    Ok(rep)
}
