//! Occlusion and pepper-noise perturbations for robustness sweeps.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{DepthIoError, DepthSequence};

/// One octant of the (x, y, t) volume.
///
/// Numbering is `1 + bit_x + 2 * bit_y + 4 * bit_t`, where a bit is 0 for the
/// lower half `[0, mid)` and 1 for the upper half `[mid, dim)`, with
/// `mid = dim / 2` (floor).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct OcclusionType(u8);

impl OcclusionType {
    pub fn new(index: u8) -> Result<Self, DepthIoError> {
        if (1..=8).contains(&index) {
            Ok(Self(index))
        } else {
            Err(DepthIoError::InvalidOcclusion(index))
        }
    }

    pub fn all() -> impl Iterator<Item = OcclusionType> {
        (1..=8).map(OcclusionType)
    }

    pub fn index(self) -> u8 {
        self.0
    }

    fn bits(self) -> (bool, bool, bool) {
        let b = self.0 - 1;
        (b & 1 != 0, b & 2 != 0, b & 4 != 0)
    }

    /// Whether the voxel (x, y, t) of a `w x h x n` volume lies in this octant.
    pub fn contains(self, x: usize, y: usize, t: usize, w: usize, h: usize, n: usize) -> bool {
        let (bx, by, bt) = self.bits();
        (x >= w / 2) == bx && (y >= h / 2) == by && (t >= n / 2) == bt
    }
}

/// Zeroes every depth value inside the octant selected by `t`.
pub fn apply_occlusion(seq: &DepthSequence, t: OcclusionType) -> DepthSequence {
    let (w, h, n) = (seq.width(), seq.height(), seq.len());
    let frames = seq
        .frames()
        .iter()
        .enumerate()
        .map(|(f, frame)| {
            let mut out = frame.clone();
            for y in 0..h {
                for x in 0..w {
                    if t.contains(x, y, f, w, h, n) {
                        out.set(x, y, 0);
                    }
                }
            }
            out
        })
        .collect();
    seq.with_frames(frames)
}

/// Sets exactly `round(fraction * width * height)` distinct pixels of every
/// frame to 0, chosen uniformly with a generator seeded by `seed`.
pub fn add_pepper_noise(
    seq: &DepthSequence,
    fraction: f64,
    seed: u64,
) -> Result<DepthSequence, DepthIoError> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(DepthIoError::FractionOutOfRange(fraction));
    }
    let px = seq.width() * seq.height();
    let count = (fraction * px as f64).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let frames = seq
        .frames()
        .iter()
        .map(|frame| {
            let mut out = frame.clone();
            let depth = out.as_mut_slice();
            for i in rand::seq::index::sample(&mut rng, px, count) {
                depth[i] = 0;
            }
            out
        })
        .collect();
    Ok(seq.with_frames(frames))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::depthio::DepthFrame;

    fn uniform(w: usize, h: usize, n: usize, v: u16) -> DepthSequence {
        DepthSequence::new(vec![DepthFrame::filled(w, h, v); n], 1, 1, "u").unwrap()
    }

    #[test]
    fn type_one_zeroes_the_low_octant_only() {
        let seq = uniform(6, 4, 5, 900);
        let out = apply_occlusion(&seq, OcclusionType::new(1).unwrap());
        for f in 0..5 {
            for y in 0..4 {
                for x in 0..6 {
                    let inside = x < 3 && y < 2 && f < 2;
                    assert_eq!(out.at(x, y, f) == 0, inside, "({x},{y},{f})");
                }
            }
        }
    }

    #[test]
    fn octants_partition_the_volume() {
        let seq = uniform(7, 5, 3, 1);
        let mut zeroed = vec![0u32; 7 * 5 * 3];
        for t in OcclusionType::all() {
            let out = apply_occlusion(&seq, t);
            for f in 0..3 {
                for (i, &v) in out.frames()[f].as_slice().iter().enumerate() {
                    if v == 0 {
                        zeroed[f * 35 + i] += 1;
                    }
                }
            }
        }
        assert!(zeroed.iter().all(|&c| c == 1));
    }

    #[test]
    fn occlusion_is_idempotent_and_commutes() {
        let seq = uniform(8, 6, 4, 1234);
        let a = OcclusionType::new(3).unwrap();
        let b = OcclusionType::new(6).unwrap();
        let once = apply_occlusion(&seq, a);
        assert_eq!(apply_occlusion(&once, a), once);
        assert_eq!(
            apply_occlusion(&apply_occlusion(&seq, a), b),
            apply_occlusion(&apply_occlusion(&seq, b), a)
        );
    }

    #[test]
    fn zero_pixels_stay_zero() {
        let seq = uniform(4, 4, 2, 0);
        assert_eq!(apply_occlusion(&seq, OcclusionType::new(8).unwrap()), seq);
    }

    #[test]
    fn invalid_occlusion_index() {
        assert!(OcclusionType::new(0).is_err());
        assert!(OcclusionType::new(9).is_err());
    }

    #[test]
    fn pepper_extremes() {
        let seq = uniform(10, 10, 3, 500);
        assert_eq!(add_pepper_noise(&seq, 0.0, 1).unwrap(), seq);
        let all = add_pepper_noise(&seq, 1.0, 1).unwrap();
        assert!(all.frames().iter().all(|f| f.as_slice().iter().all(|&v| v == 0)));
        assert!(matches!(
            add_pepper_noise(&seq, 1.5, 1),
            Err(DepthIoError::FractionOutOfRange(_))
        ));
        assert!(add_pepper_noise(&seq, -0.1, 1).is_err());
    }

    #[test]
    fn pepper_zeroes_exact_count_per_frame() {
        let seq = uniform(100, 100, 4, 2500);
        let out = add_pepper_noise(&seq, 0.1, 77).unwrap();
        for (a, b) in seq.frames().iter().zip(out.frames()) {
            let changed = a
                .as_slice()
                .iter()
                .zip(b.as_slice())
                .filter(|(x, y)| x != y)
                .count();
            assert_eq!(changed, 1000);
        }
        assert_eq!(add_pepper_noise(&seq, 0.1, 77).unwrap(), out);
    }
}
