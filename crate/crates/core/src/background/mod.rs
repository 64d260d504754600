//! Depth background modeling and foreground extraction.
//!
//! The background of a depth sequence has two parts. Far-field pixels lie
//! beyond sensor range and read as 0 most of the time; the probability map
//! records how often each pixel reads 0. Near-field pixels are in range but
//! always behind the actor, so the maximal depth observed at each pixel
//! recovers them. The background model keeps the maximal depth except where
//! the zero-probability exceeds `t1`, where it is 0.

mod labeling;

use thiserror::Error;

pub use labeling::{label_components, Connectivity, Labeling};

use crate::depthio::DepthFrame;
use crate::mask::BinaryMask;

#[derive(Debug, Error, PartialEq)]
pub enum BackgroundError {
    #[error("no frames supplied")]
    EmptyFrames,
    #[error("grid mismatch: {0}")]
    GridMismatch(String),
    #[error("threshold {0} outside [0, 1]")]
    ThresholdOutOfRange(f64),
}

/// Fraction of frames in which each pixel reads 0.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbabilityMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

/// Per-pixel maximum depth over a frame history.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxDepthMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<u16>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundModel {
    pub width: usize,
    pub height: usize,
    pub depth: Vec<u16>,
    pub t1: f64,
}

fn check_frames(frames: &[DepthFrame]) -> Result<(usize, usize), BackgroundError> {
    let first = frames.first().ok_or(BackgroundError::EmptyFrames)?;
    if let Some((i, _)) = frames.iter().enumerate().find(|(_, f)| !f.same_grid(first)) {
        return Err(BackgroundError::GridMismatch(format!(
            "frame {i} differs from frame 0"
        )));
    }
    Ok((first.width(), first.height()))
}

pub fn probability_map(frames: &[DepthFrame]) -> Result<ProbabilityMap, BackgroundError> {
    let (width, height) = check_frames(frames)?;
    let mut zeros = vec![0u32; width * height];
    for frame in frames {
        for (c, &v) in zeros.iter_mut().zip(frame.as_slice()) {
            *c += (v == 0) as u32;
        }
    }
    let n = frames.len() as f64;
    Ok(ProbabilityMap {
        width,
        height,
        values: zeros.into_iter().map(|c| c as f64 / n).collect(),
    })
}

pub fn max_depth_map(frames: &[DepthFrame]) -> Result<MaxDepthMap, BackgroundError> {
    let (width, height) = check_frames(frames)?;
    let mut values = vec![0u16; width * height];
    for frame in frames {
        for (m, &v) in values.iter_mut().zip(frame.as_slice()) {
            *m = (*m).max(v);
        }
    }
    Ok(MaxDepthMap {
        width,
        height,
        values,
    })
}

/// `B = 0` where `P > t1` (strictly), else the maximal depth.
pub fn build_background(
    p: &ProbabilityMap,
    m: &MaxDepthMap,
    t1: f64,
) -> Result<BackgroundModel, BackgroundError> {
    if !(0.0..=1.0).contains(&t1) {
        return Err(BackgroundError::ThresholdOutOfRange(t1));
    }
    if p.width != m.width || p.height != m.height {
        return Err(BackgroundError::GridMismatch(format!(
            "probability map {}x{} vs max-depth map {}x{}",
            p.width, p.height, m.width, m.height
        )));
    }
    let depth = p
        .values
        .iter()
        .zip(&m.values)
        .map(|(&prob, &max)| if prob > t1 { 0 } else { max })
        .collect();
    Ok(BackgroundModel {
        width: p.width,
        height: p.height,
        depth,
        t1,
    })
}

/// Background model of a whole frame history.
pub fn model_background(frames: &[DepthFrame], t1: f64) -> Result<BackgroundModel, BackgroundError> {
    build_background(&probability_map(frames)?, &max_depth_map(frames)?, t1)
}

/// Foreground of one frame: pixels with a reading that lie more than `T2`
/// in front of the background, reduced to the largest 8-connected component.
///
/// `T2 = t2_factor * max(B - depth)` over the candidate pixels (positive
/// difference). Where the background is far-field (`B == 0`) any reading is a
/// candidate. Returns an empty mask when there is no candidate.
pub fn extract_foreground(
    background: &BackgroundModel,
    frame: &DepthFrame,
    t2_factor: f64,
) -> Result<BinaryMask, BackgroundError> {
    if background.width != frame.width() || background.height != frame.height() {
        return Err(BackgroundError::GridMismatch(format!(
            "background {}x{} vs frame {}x{}",
            background.width,
            background.height,
            frame.width(),
            frame.height()
        )));
    }
    let diff = |b: u16, d: u16| b as i32 - d as i32;

    let max_diff = background
        .depth
        .iter()
        .zip(frame.as_slice())
        .filter(|&(&b, &d)| d > 0 && b > 0)
        .map(|(&b, &d)| diff(b, d))
        .filter(|&v| v > 0)
        .max()
        .unwrap_or(0);
    let t2 = t2_factor * max_diff as f64;

    let raw: Vec<bool> = background
        .depth
        .iter()
        .zip(frame.as_slice())
        .map(|(&b, &d)| d > 0 && (b == 0 || (diff(b, d) > 0 && diff(b, d) as f64 > t2)))
        .collect();
    let raw = BinaryMask::from_vec(frame.width(), frame.height(), raw);
    Ok(largest_component(&raw, Connectivity::Eight))
}

/// Keeps only the largest connected component (ties: first in raster order).
pub fn largest_component(mask: &BinaryMask, connectivity: Connectivity) -> BinaryMask {
    let lab = label_components(mask, connectivity);
    match lab.largest() {
        Some(keep) => lab.mask_where(|l| l == keep),
        None => BinaryMask::new(mask.width(), mask.height()),
    }
}

impl ProbabilityMap {
    /// 16-bit rendering with P scaled by 65535.
    pub fn to_frame(&self) -> DepthFrame {
        let v = self
            .values
            .iter()
            .map(|&p| (p * 65535.0).round() as u16)
            .collect();
        DepthFrame::new(self.width, self.height, v).expect("grid size is consistent")
    }
}

impl MaxDepthMap {
    pub fn to_frame(&self) -> DepthFrame {
        DepthFrame::new(self.width, self.height, self.values.clone()).expect("grid size is consistent")
    }
}

impl BackgroundModel {
    pub fn to_frame(&self) -> DepthFrame {
        DepthFrame::new(self.width, self.height, self.depth.clone()).expect("grid size is consistent")
    }
}

/// 16-bit rendering of a mask: set pixels become 65535.
pub fn mask_to_frame(mask: &BinaryMask) -> DepthFrame {
    let v = mask.as_slice().iter().map(|&b| if b { u16::MAX } else { 0 }).collect();
    DepthFrame::new(mask.width(), mask.height(), v).expect("grid size is consistent")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn history(values: &[u16]) -> Vec<DepthFrame> {
        values.iter().map(|&v| DepthFrame::filled(1, 1, v)).collect()
    }

    #[test]
    fn probability_examples() {
        assert_eq!(probability_map(&history(&[0, 0])).unwrap().values, vec![1.0]);
        assert_eq!(probability_map(&history(&[0, 5])).unwrap().values, vec![0.5]);
        assert_eq!(probability_map(&history(&[3, 7, 9])).unwrap().values, vec![0.0]);
        assert_eq!(probability_map(&[]), Err(BackgroundError::EmptyFrames));
    }

    #[test]
    fn max_depth_examples() {
        assert_eq!(max_depth_map(&history(&[3, 0, 7])).unwrap().values, vec![7]);
        assert_eq!(max_depth_map(&history(&[0, 0, 0])).unwrap().values, vec![0]);
        let single = DepthFrame::new(2, 2, vec![1, 2, 3, 4]).unwrap();
        assert_eq!(max_depth_map(&[single]).unwrap().values, vec![1, 2, 3, 4]);
        assert!(max_depth_map(&[]).is_err());
    }

    fn one_pixel(p: f64, m: u16, t1: f64) -> u16 {
        let p = ProbabilityMap {
            width: 1,
            height: 1,
            values: vec![p],
        };
        let m = MaxDepthMap {
            width: 1,
            height: 1,
            values: vec![m],
        };
        build_background(&p, &m, t1).unwrap().depth[0]
    }

    #[test]
    fn background_threshold_is_strict() {
        assert_eq!(one_pixel(0.9, 4321, 0.8), 0);
        assert_eq!(one_pixel(0.5, 1234, 0.8), 1234);
        assert_eq!(one_pixel(0.8, 1234, 0.8), 1234);
    }

    #[test]
    fn background_rejects_bad_threshold() {
        let p = ProbabilityMap {
            width: 1,
            height: 1,
            values: vec![0.0],
        };
        let m = MaxDepthMap {
            width: 1,
            height: 1,
            values: vec![1],
        };
        assert_eq!(
            build_background(&p, &m, 1.5),
            Err(BackgroundError::ThresholdOutOfRange(1.5))
        );
    }

    fn scene(blobs: &[(usize, usize, usize, usize)]) -> (BackgroundModel, DepthFrame) {
        let (w, h) = (60, 40);
        let bg = BackgroundModel {
            width: w,
            height: h,
            depth: vec![4000; w * h],
            t1: 0.8,
        };
        let mut frame = DepthFrame::filled(w, h, 4000);
        for &(x0, y0, bw, bh) in blobs {
            for y in y0..y0 + bh {
                for x in x0..x0 + bw {
                    frame.set(x, y, 2000);
                }
            }
        }
        (bg, frame)
    }

    #[test]
    fn foreground_of_identical_frame_is_empty() {
        let (bg, _) = scene(&[]);
        let frame = bg.to_frame();
        assert!(extract_foreground(&bg, &frame, 0.01).unwrap().is_empty());
    }

    #[test]
    fn foreground_keeps_largest_blob() {
        let (bg, frame) = scene(&[(2, 2, 20, 20), (40, 30, 10, 5)]);
        let fg = extract_foreground(&bg, &frame, 0.01).unwrap();
        assert_eq!(fg.count(), 400);
        assert!(fg.get(10, 10));
        assert!(!fg.get(45, 32));
    }

    #[test]
    fn far_field_pixels_with_reading_are_candidates() {
        let (mut bg, mut frame) = scene(&[]);
        for x in 0..5 {
            bg.depth[x] = 0;
            frame.set(x, 0, 1500);
        }
        let fg = extract_foreground(&bg, &frame, 0.01).unwrap();
        assert_eq!(fg.count(), 5);
    }

    #[test]
    fn t2_is_relative_to_the_largest_difference() {
        // 20x20 blob 2000 mm in front; a 30x30 ring region only 15 mm in front
        let (bg, mut frame) = scene(&[(2, 2, 20, 20)]);
        for y in 0..40 {
            for x in 28..58 {
                frame.set(x, y, 3985);
            }
        }
        // T2 = 0.01 * 2000 = 20 > 15, so the shallow region is rejected
        let fg = extract_foreground(&bg, &frame, 0.01).unwrap();
        assert_eq!(fg.count(), 400);
    }

    #[test]
    fn foreground_rejects_grid_mismatch() {
        let (bg, _) = scene(&[]);
        let frame = DepthFrame::filled(3, 3, 1);
        assert!(matches!(
            extract_foreground(&bg, &frame, 0.01),
            Err(BackgroundError::GridMismatch(_))
        ));
    }
}
