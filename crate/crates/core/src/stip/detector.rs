//! Sequence-level interest point detection.

use rayon::prelude::*;

use super::{
    accumulate_motion, motion_region, project_foreground, refine_motion,
    sample_contour_candidates, select_stips, MotionBoxes, PlaneSet, Stip, StipError, StipKind,
    View, ZAxis,
};
use crate::background::{extract_foreground, model_background, BackgroundModel};
use crate::depthio::{DepthFrame, DepthSequence};
use crate::mask::BinaryMask;

#[derive(Debug, Clone, PartialEq)]
pub struct StipParams {
    /// Contour sampling distance in pixels.
    pub lambda: f64,
    /// Inter-frame motion threshold.
    pub epsilon: f64,
    /// Far-field probability threshold of the background model.
    pub t1: f64,
    /// Foreground threshold as a fraction of the largest background difference.
    pub t2_factor: f64,
    /// Disk radius of the closing applied to motion regions.
    pub disk_radius: usize,
    /// Motion components smaller than this fraction of the largest are dropped.
    pub keep_ratio: f64,
    /// Millimeters per z pixel of the side planes.
    pub z_bin_mm: f64,
}

impl Default for StipParams {
    fn default() -> Self {
        Self {
            lambda: 3.0,
            epsilon: 50.0,
            t1: 0.8,
            t2_factor: 0.01,
            disk_radius: 5,
            keep_ratio: 0.8,
            z_bin_mm: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameStips {
    pub candidates: Vec<Stip>,
    pub motion: Vec<Stip>,
    pub shape: Vec<Stip>,
    /// Boxes of the motion between this frame and the previous one.
    pub motion_boxes: MotionBoxes,
}

#[derive(Debug, Clone)]
pub struct SequenceStips {
    pub background: BackgroundModel,
    pub foreground: Vec<BinaryMask>,
    pub z_axis: ZAxis,
    pub frames: Vec<FrameStips>,
    /// Boxes used for shape-based selection.
    pub shape_boxes: MotionBoxes,
}

impl SequenceStips {
    pub fn motion_stips(&self) -> Vec<Stip> {
        self.frames.iter().flat_map(|f| f.motion.iter().copied()).collect()
    }

    pub fn shape_stips(&self) -> Vec<Stip> {
        self.frames.iter().flat_map(|f| f.shape.iter().copied()).collect()
    }

    pub fn candidate_stips(&self) -> Vec<Stip> {
        self.frames.iter().flat_map(|f| f.candidates.iter().copied()).collect()
    }

    /// The sequence with every non-foreground pixel set to 0.
    pub fn masked_sequence(&self, seq: &DepthSequence) -> DepthSequence {
        let frames = seq
            .frames()
            .iter()
            .zip(&self.foreground)
            .map(|(frame, mask)| {
                let mut out = frame.clone();
                for (v, &keep) in out.as_mut_slice().iter_mut().zip(mask.as_slice()) {
                    if !keep {
                        *v = 0;
                    }
                }
                out
            })
            .collect();
        seq.with_frames(frames)
    }
}

fn foreground_max_depth(frames: &[DepthFrame], masks: &[BinaryMask]) -> u16 {
    frames
        .iter()
        .zip(masks)
        .flat_map(|(f, m)| {
            f.as_slice()
                .iter()
                .zip(m.as_slice())
                .filter(|(_, &k)| k)
                .map(|(&v, _)| v)
        })
        .max()
        .unwrap_or(0)
}

/// Runs background modeling, foreground extraction, candidate sampling and
/// motion/shape selection over a whole sequence.
///
/// Frame 0 has no predecessor and therefore no motion-based points. The
/// shape boxes are the accumulated-motion boxes widened to cover every
/// per-frame motion box, so motion-based points are always a subset of the
/// shape-based points of the same frame.
pub fn detect_stips(seq: &DepthSequence, params: &StipParams) -> Result<SequenceStips, StipError> {
    if !(params.lambda >= 1.0) {
        return Err(StipError::InvalidLambda(params.lambda));
    }
    let frames = seq.frames();
    let background = model_background(frames, params.t1)?;
    let foreground = frames
        .par_iter()
        .map(|f| extract_foreground(&background, f, params.t2_factor))
        .collect::<Result<Vec<_>, _>>()?;
    let z_axis = ZAxis::covering(foreground_max_depth(frames, &foreground), params.z_bin_mm)?;
    let (w, h) = (seq.width(), seq.height());

    let per_frame: Vec<(PlaneSet, Vec<Stip>)> = frames
        .par_iter()
        .zip(&foreground)
        .enumerate()
        .map(|(f, (frame, mask))| {
            if mask.is_empty() {
                return Ok((PlaneSet::empty(w, h, z_axis), Vec::new()));
            }
            let planes = project_foreground(frame, mask, z_axis)?;
            let cands = sample_contour_candidates(&planes, frame, f, params.lambda)?;
            Ok((planes, cands))
        })
        .collect::<Result<_, StipError>>()?;

    // per-frame motion regions and boxes, frame 0 has none
    let regions: Vec<[BinaryMask; 3]> = (1..frames.len())
        .into_par_iter()
        .map(|f| {
            let (cur, prev) = (&per_frame[f].0, &per_frame[f - 1].0);
            Ok([
                motion_region(&cur.xy, &prev.xy, params.epsilon)?,
                motion_region(&cur.xz, &prev.xz, params.epsilon)?,
                motion_region(&cur.zy, &prev.zy, params.epsilon)?,
            ])
        })
        .collect::<Result<_, StipError>>()?;
    let mut frame_boxes = vec![MotionBoxes::default(); frames.len()];
    let refined: Vec<MotionBoxes> = regions
        .par_iter()
        .map(|r| {
            let mut boxes = MotionBoxes::default();
            for (i, v) in View::ALL.into_iter().enumerate() {
                *boxes.get_mut(v) = refine_motion(&r[i], params.disk_radius, params.keep_ratio).bbox;
            }
            boxes
        })
        .collect();
    frame_boxes[1..].copy_from_slice(&refined);

    let mut shape_boxes = MotionBoxes::default();
    for (i, v) in View::ALL.into_iter().enumerate() {
        let view_regions: Vec<BinaryMask> = regions.iter().map(|r| r[i].clone()).collect();
        if let Some(acc) = accumulate_motion(&view_regions, params.disk_radius, params.keep_ratio)? {
            *shape_boxes.get_mut(v) = acc.refined.bbox;
        }
    }
    for b in &frame_boxes {
        shape_boxes = shape_boxes.union(b);
    }

    let frames_out = per_frame
        .into_iter()
        .zip(&frame_boxes)
        .map(|((_, candidates), boxes)| FrameStips {
            motion: select_stips(&candidates, boxes, StipKind::Motion, &z_axis),
            shape: select_stips(&candidates, &shape_boxes, StipKind::Shape, &z_axis),
            candidates,
            motion_boxes: *boxes,
        })
        .collect();

    Ok(SequenceStips {
        background,
        foreground,
        z_axis,
        frames: frames_out,
        shape_boxes,
    })
}
