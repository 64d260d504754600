//! Inter-frame motion regions, morphological closing and motion boxes.

use super::{PlaneMap, StipError};
use crate::background::{label_components, Connectivity};
use crate::mask::{BinaryMask, BoxRect};

/// `|map_f - map_prev| > epsilon`, element-wise. Empty cells count as 0.
pub fn motion_region(
    map_f: &PlaneMap,
    map_prev: &PlaneMap,
    epsilon: f64,
) -> Result<BinaryMask, StipError> {
    if map_f.view != map_prev.view {
        return Err(StipError::ViewMismatch(map_f.view, map_prev.view));
    }
    if map_f.width != map_prev.width || map_f.height != map_prev.height {
        return Err(StipError::GridMismatch(format!(
            "{}x{} vs {}x{}",
            map_f.width, map_f.height, map_prev.width, map_prev.height
        )));
    }
    let data = map_f
        .values
        .iter()
        .zip(&map_prev.values)
        .map(|(&a, &b)| (a as f64 - b as f64).abs() > epsilon)
        .collect();
    Ok(BinaryMask::from_vec(map_f.width, map_f.height, data))
}

/// Offsets of a disk structuring element: all `(dx, dy)` with
/// `dx^2 + dy^2 <= radius^2`.
pub fn disk_offsets(radius: usize) -> Vec<(i64, i64)> {
    let r = radius as i64;
    let mut out = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            if dx * dx + dy * dy <= r * r {
                out.push((dx, dy));
            }
        }
    }
    out
}

fn dilate(mask: &BinaryMask, se: &[(i64, i64)]) -> BinaryMask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let mut out = BinaryMask::new(mask.width(), mask.height());
    for y in 0..h {
        for x in 0..w {
            if !mask.get(x as usize, y as usize) {
                continue;
            }
            for &(dx, dy) in se {
                let (nx, ny) = (x + dx, y + dy);
                if nx >= 0 && ny >= 0 && nx < w && ny < h {
                    out.set(nx as usize, ny as usize, true);
                }
            }
        }
    }
    out
}

/// Erosion that only inspects in-bounds neighbors, so the image border does
/// not eat into shapes touching it.
fn erode(mask: &BinaryMask, se: &[(i64, i64)]) -> BinaryMask {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    BinaryMask::from_fn(mask.width(), mask.height(), |x, y| {
        let (x, y) = (x as i64, y as i64);
        se.iter().all(|&(dx, dy)| {
            let (nx, ny) = (x + dx, y + dy);
            nx < 0 || ny < 0 || nx >= w || ny >= h || mask.get(nx as usize, ny as usize)
        })
    })
}

/// Morphological closing (dilation then erosion) with a disk.
pub fn close_disk(mask: &BinaryMask, radius: usize) -> BinaryMask {
    if radius == 0 {
        return mask.clone();
    }
    let se = disk_offsets(radius);
    erode(&dilate(mask, &se), &se)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinedMotion {
    /// Union of the kept components.
    pub mask: BinaryMask,
    /// Tight box around `mask`; `None` when there was no motion.
    pub bbox: Option<BoxRect>,
    /// Areas of the kept components.
    pub kept_areas: Vec<usize>,
}

/// Closes `region` with a disk, labels the result and keeps every component
/// whose area exceeds `keep_ratio` times the largest area.
pub fn refine_motion(region: &BinaryMask, disk_radius: usize, keep_ratio: f64) -> RefinedMotion {
    let closed = close_disk(region, disk_radius);
    let lab = label_components(&closed, Connectivity::Eight);
    let Some(largest) = lab.largest() else {
        return RefinedMotion {
            mask: BinaryMask::new(region.width(), region.height()),
            bbox: None,
            kept_areas: Vec::new(),
        };
    };
    let cutoff = keep_ratio * lab.area(largest) as f64;
    let keep: Vec<bool> = lab.areas().iter().map(|&a| a as f64 > cutoff).collect();
    let mask = lab.mask_where(|l| keep[l as usize - 1]);
    let kept_areas = lab
        .areas()
        .iter()
        .zip(&keep)
        .filter(|(_, &k)| k)
        .map(|(&a, _)| a)
        .collect();
    RefinedMotion {
        bbox: mask.bounding_box(),
        mask,
        kept_areas,
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccumulatedMotion {
    pub width: usize,
    pub height: usize,
    /// Number of frames in which each cell moved.
    pub counts: Vec<u32>,
    /// [`refine_motion`] of `counts > 0`.
    pub refined: RefinedMotion,
}

/// Sums per-frame motion regions of one view and fits a box to `A > 0`.
/// Returns `None` for an empty list.
pub fn accumulate_motion(
    regions: &[BinaryMask],
    disk_radius: usize,
    keep_ratio: f64,
) -> Result<Option<AccumulatedMotion>, StipError> {
    let Some(first) = regions.first() else {
        return Ok(None);
    };
    let mut counts = vec![0u32; first.width() * first.height()];
    for r in regions {
        if !r.same_grid(first) {
            return Err(StipError::GridMismatch("motion regions differ in size".into()));
        }
        for (c, &b) in counts.iter_mut().zip(r.as_slice()) {
            *c += b as u32;
        }
    }
    let any = BinaryMask::from_vec(
        first.width(),
        first.height(),
        counts.iter().map(|&c| c > 0).collect(),
    );
    Ok(Some(AccumulatedMotion {
        width: first.width(),
        height: first.height(),
        counts,
        refined: refine_motion(&any, disk_radius, keep_ratio),
    }))
}
