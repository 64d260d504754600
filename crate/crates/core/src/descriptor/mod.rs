//! Interest point descriptors.
//!
//! Motion-based points are described by 3D local steering kernels computed
//! on depth cuboids whose extent adapts to the point's depth, at several
//! scales. Shape-based points are described by their 4-D offset from the
//! sequence origin.

mod cuboid;
mod io;
mod lsk;
mod stv;

use rayon::prelude::*;
use thiserror::Error;

pub use cuboid::{adaptive_scale, extract_cuboid, mean_foreground_depth, Cube, MIN_ADAPTIVE_SCALE};
pub use io::{read_descriptors, write_descriptors, DescriptorMatrix, DESC_MAGIC, DESC_VERSION};
pub use lsk::{gradients, lsk3d};
pub use stv::{stv, stv_origin, StvDescriptor};

use crate::depthio::DepthSequence;
use crate::stip::Stip;

#[derive(Debug, Error)]
pub enum DescriptorError {
    #[error("depths must be positive (z0 = {z_bar0}, z = {z_bar})")]
    NonPositiveDepth { z_bar0: f64, z_bar: f64 },
    #[error("cube side {0} is below 3")]
    DegenerateCube(usize),
    #[error("invalid descriptor parameters: {0}")]
    InvalidParams(String),
    #[error("no shape-based points to describe")]
    EmptyStipSet,
    #[error("descriptor file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorParams {
    /// Base half-widths of the cuboids, one per scale.
    pub scales: Vec<usize>,
    /// Half-width of the cuboid averaged for the point's depth.
    pub probe_radius: usize,
    /// Steering kernel bandwidth.
    pub h: f64,
    /// Half-width of the gradient covariance window.
    pub cov_window: usize,
    /// Added to the covariance diagonal.
    pub reg_lambda: f64,
}

impl Default for DescriptorParams {
    fn default() -> Self {
        Self {
            scales: vec![7],
            probe_radius: 3,
            h: 1.0,
            cov_window: 1,
            reg_lambda: 1e-3,
        }
    }
}

impl DescriptorParams {
    pub fn validate(&self) -> Result<(), DescriptorError> {
        let bad = |m: &str| Err(DescriptorError::InvalidParams(m.to_string()));
        if self.scales.is_empty() {
            return bad("at least one scale is required");
        }
        if self.scales.contains(&0) {
            return bad("scales must be at least 1");
        }
        if !(self.h > 0.0) {
            return bad("h must be positive");
        }
        if !(self.reg_lambda > 0.0) {
            return bad("reg_lambda must be positive");
        }
        Ok(())
    }

    /// Descriptor length at scale `r`.
    pub fn dim(r: usize) -> usize {
        (2 * r + 1).pow(3)
    }
}

/// Steering-kernel descriptor of one cuboid: nonnegative, sums to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct LskDescriptor {
    pub scale_index: usize,
    pub values: Vec<f64>,
}

/// Descriptors of the motion-based points of one sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct MultiScaleDescriptors {
    /// Indices (into the input points) of the points that were described;
    /// points whose probe cuboid held no depth are skipped.
    pub kept: Vec<usize>,
    /// Probe depth of every kept point.
    pub z_bars: Vec<f64>,
    /// `per_scale[l][i]` describes point `kept[i]` at scale `l`.
    pub per_scale: Vec<Vec<LskDescriptor>>,
}

/// Probe depth of each point, `None` where the probe cuboid is all zeros.
pub fn probe_depths(seq: &DepthSequence, stips: &[Stip], probe_radius: usize) -> Vec<Option<f64>> {
    stips
        .par_iter()
        .map(|p| mean_foreground_depth(seq, p, probe_radius))
        .collect()
}

/// Multi-scale steering-kernel description of motion-based points.
///
/// For each scale `r` and each point with a usable probe depth `z`, the
/// cuboid of half-width `z_bar0 / z * r` is resampled to `(2r+1)^3` voxels and
/// described by [`lsk3d`]. Output order follows the input order.
pub fn m3dlsk(
    seq: &DepthSequence,
    stips: &[Stip],
    params: &DescriptorParams,
    z_bar0: f64,
) -> Result<MultiScaleDescriptors, DescriptorError> {
    params.validate()?;
    if !(z_bar0 > 0.0) {
        return Err(DescriptorError::NonPositiveDepth { z_bar0, z_bar: 1.0 });
    }
    let probes = probe_depths(seq, stips, params.probe_radius);
    let (kept, z_bars): (Vec<usize>, Vec<f64>) = probes
        .iter()
        .enumerate()
        .filter_map(|(i, z)| z.map(|z| (i, z)))
        .unzip();

    let mut per_scale = Vec::with_capacity(params.scales.len());
    for (scale_index, &r) in params.scales.iter().enumerate() {
        let descs = kept
            .par_iter()
            .zip(&z_bars)
            .map(|(&i, &z)| {
                let r_hat = adaptive_scale(z_bar0, z, r as f64)?;
                let cube = extract_cuboid(seq, &stips[i], r_hat, r);
                let mut d = lsk3d(&cube, params)?;
                d.scale_index = scale_index;
                Ok(d)
            })
            .collect::<Result<Vec<_>, DescriptorError>>()?;
        per_scale.push(descs);
    }
    Ok(MultiScaleDescriptors {
        kept,
        z_bars,
        per_scale,
    })
}
