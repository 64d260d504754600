//! Projection of a foreground frame onto the three orthogonal planes.

use super::{PlaneMap, StipError, View, ZAxis};
use crate::depthio::DepthFrame;
use crate::mask::BinaryMask;

/// The xy, xz and zy maps of one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneSet {
    pub xy: PlaneMap,
    pub xz: PlaneMap,
    pub zy: PlaneMap,
    pub z_axis: ZAxis,
}

impl PlaneSet {
    /// Maps of a frame without foreground.
    pub fn empty(width: usize, height: usize, z_axis: ZAxis) -> Self {
        Self {
            xy: PlaneMap::empty(View::Xy, width, height, z_axis.bin_mm),
            xz: PlaneMap::empty(View::Xz, width, z_axis.bins, z_axis.bin_mm),
            zy: PlaneMap::empty(View::Zy, z_axis.bins, height, z_axis.bin_mm),
            z_axis,
        }
    }

    pub fn get(&self, view: View) -> &PlaneMap {
        match view {
            View::Xy => &self.xy,
            View::Xz => &self.xz,
            View::Zy => &self.zy,
        }
    }
}

/// Projects the masked depth of `frame` onto three planes.
///
/// The xy map holds depth. The xz map holds, per (x, z-bin), the largest y of
/// the foreground voxels there; the zy map holds the largest x per
/// (z-bin, y). Side maps are then filled along the z axis by linear
/// interpolation between occupied bins, closing the gaps that discontinuous
/// depth leaves between strips.
pub fn project_foreground(
    frame: &DepthFrame,
    mask: &BinaryMask,
    z_axis: ZAxis,
) -> Result<PlaneSet, StipError> {
    if frame.width() != mask.width() || frame.height() != mask.height() {
        return Err(StipError::GridMismatch(format!(
            "frame {}x{} vs mask {}x{}",
            frame.width(),
            frame.height(),
            mask.width(),
            mask.height()
        )));
    }
    if mask.is_empty() {
        return Err(StipError::EmptyMask);
    }
    let (w, h) = (frame.width(), frame.height());
    let mut planes = PlaneSet::empty(w, h, z_axis);

    for y in 0..h {
        for x in 0..w {
            let z = frame.get(x, y);
            if !mask.get(x, y) || z == 0 {
                continue;
            }
            let i = y * w + x;
            planes.xy.values[i] = z;
            planes.xy.occupied[i] = true;

            let bin = z_axis.bin(z as u32);
            let xz = bin * planes.xz.width + x;
            if !planes.xz.occupied[xz] || planes.xz.values[xz] < y as u16 {
                planes.xz.values[xz] = y as u16;
                planes.xz.occupied[xz] = true;
            }
            let zy = y * planes.zy.width + bin;
            if !planes.zy.occupied[zy] || planes.zy.values[zy] < x as u16 {
                planes.zy.values[zy] = x as u16;
                planes.zy.occupied[zy] = true;
            }
        }
    }
    if !planes.xy.occupied.iter().any(|&b| b) {
        return Err(StipError::EmptyMask);
    }

    // xz: the z axis runs down the rows of each column
    for x in 0..w {
        interpolate_line(&mut planes.xz, |bin| bin * w + x, z_axis.bins);
    }
    // zy: the z axis runs along the columns of each row
    let zw = planes.zy.width;
    for y in 0..h {
        interpolate_line(&mut planes.zy, |bin| y * zw + bin, z_axis.bins);
    }
    Ok(planes)
}

/// Fills unoccupied cells lying between two occupied cells of one line by
/// linear interpolation of their stored coordinates.
fn interpolate_line(map: &mut PlaneMap, index: impl Fn(usize) -> usize, len: usize) {
    let mut prev: Option<usize> = None;
    for pos in 0..len {
        let i = index(pos);
        if !map.occupied[i] {
            continue;
        }
        if let Some(p) = prev {
            if pos - p > 1 {
                let v0 = map.values[index(p)] as f64;
                let v1 = map.values[i] as f64;
                let span = (pos - p) as f64;
                for q in p + 1..pos {
                    let t = (q - p) as f64 / span;
                    let j = index(q);
                    map.values[j] = (v0 + (v1 - v0) * t).round() as u16;
                    map.occupied[j] = true;
                }
            }
        }
        prev = Some(pos);
    }
}
