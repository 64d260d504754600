//! Depth cuboids around interest points.

use super::DescriptorError;
use crate::depthio::DepthSequence;
use crate::stip::Stip;

/// Smallest cuboid half-width used for resampling.
pub const MIN_ADAPTIVE_SCALE: f64 = 0.5;

/// Cube of voxels stored with x fastest, then y, then t.
#[derive(Debug, Clone, PartialEq)]
pub struct Cube {
    pub side: usize,
    pub data: Vec<f64>,
}

impl Cube {
    pub fn new(side: usize, data: Vec<f64>) -> Self {
        assert_eq!(data.len(), side * side * side, "cube data length");
        Self { side, data }
    }

    pub fn from_fn(side: usize, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(side * side * side);
        for t in 0..side {
            for y in 0..side {
                for x in 0..side {
                    data.push(f(x, y, t));
                }
            }
        }
        Self { side, data }
    }

    pub fn index(&self, x: usize, y: usize, t: usize) -> usize {
        (t * self.side + y) * self.side + x
    }

    pub fn get(&self, x: usize, y: usize, t: usize) -> f64 {
        self.data[self.index(x, y, t)]
    }
}

/// Mean of the nonzero depths in the cuboid of half-width `probe_radius`
/// around `p`, clamped to the sequence. `None` when every depth is zero.
pub fn mean_foreground_depth(seq: &DepthSequence, p: &Stip, probe_radius: usize) -> Option<f64> {
    let r = probe_radius;
    let (mut sum, mut n) = (0u64, 0u64);
    let f1 = (p.f + r).min(seq.len() - 1);
    let y1 = (p.y + r).min(seq.height() - 1);
    let x1 = (p.x + r).min(seq.width() - 1);
    for frame in &seq.frames()[p.f.saturating_sub(r)..=f1] {
        for y in p.y.saturating_sub(r)..=y1 {
            for x in p.x.saturating_sub(r)..=x1 {
                let z = frame.get(x, y);
                if z > 0 {
                    sum += z as u64;
                    n += 1;
                }
            }
        }
    }
    (n > 0).then(|| sum as f64 / n as f64)
}

/// `z_bar0 / z_bar * r`.
pub fn adaptive_scale(z_bar0: f64, z_bar: f64, r: f64) -> Result<f64, DescriptorError> {
    if !(z_bar0 > 0.0 && z_bar > 0.0) {
        return Err(DescriptorError::NonPositiveDepth { z_bar0, z_bar });
    }
    Ok(z_bar0 / z_bar * r)
}

fn sample(seq: &DepthSequence, x: f64, y: f64, t: f64) -> f64 {
    // replicate padding: clamp the continuous position, then interpolate
    let axis = |v: f64, n: usize| {
        let v = v.clamp(0.0, (n - 1) as f64);
        let i0 = v.floor() as usize;
        let i1 = (i0 + 1).min(n - 1);
        (i0, i1, v - i0 as f64)
    };
    let (x0, x1, fx) = axis(x, seq.width());
    let (y0, y1, fy) = axis(y, seq.height());
    let (t0, t1, ft) = axis(t, seq.len());
    let at = |x, y, t| seq.at(x, y, t) as f64;
    let lerp = |a: f64, b: f64, w: f64| if w == 0.0 { a } else { a + (b - a) * w };
    let plane = |t| {
        lerp(
            lerp(at(x0, y0, t), at(x1, y0, t), fx),
            lerp(at(x0, y1, t), at(x1, y1, t), fx),
            fy,
        )
    };
    lerp(plane(t0), plane(t1), ft)
}

/// Resamples the cuboid of half-width `r_hat` (in x, y and frames) around
/// `p` onto a `(2r+1)^3` grid by trilinear interpolation, replicating the
/// sequence borders. `r_hat` is clamped to [`MIN_ADAPTIVE_SCALE`].
pub fn extract_cuboid(seq: &DepthSequence, p: &Stip, r_hat: f64, r: usize) -> Cube {
    let r_hat = r_hat.max(MIN_ADAPTIVE_SCALE);
    let step = r_hat / r as f64;
    let offset = |i: usize| (i as f64 - r as f64) * step;
    Cube::from_fn(2 * r + 1, |i, j, k| {
        sample(
            seq,
            p.x as f64 + offset(i),
            p.y as f64 + offset(j),
            p.f as f64 + offset(k),
        )
    })
}
