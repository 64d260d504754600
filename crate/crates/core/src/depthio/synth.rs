//! Synthetic depth scenes with ground truth.
//!
//! A scene is a background plane (optionally with an out-of-range region and
//! a closer piece of furniture), an actor blob following a linear trajectory
//! and an optional held object that appears part way through. Every frame is
//! rendered with a z-buffer; the visible actor/object pixels form the
//! ground-truth foreground mask.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{DepthFrame, DepthIoError, DepthSequence};
use crate::mask::{BinaryMask, BoxRect};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BlobShape {
    Rect,
    Ellipse,
}

/// A moving blob. Position is the top-left corner of its bounding box.
#[derive(Debug, Clone, PartialEq)]
pub struct Blob {
    pub shape: BlobShape,
    pub start: (f64, f64),
    pub size: (usize, usize),
    /// Pixels per frame.
    pub velocity: (f64, f64),
    /// Nearest surface depth at frame 0 (mm).
    pub depth: u16,
    /// Millimeters per frame.
    pub depth_velocity: f64,
    /// The rim sits this many mm behind the blob's center.
    pub bulge_mm: u16,
}

impl Blob {
    pub fn rect(x: f64, y: f64, w: usize, h: usize, depth: u16) -> Self {
        Self {
            shape: BlobShape::Rect,
            start: (x, y),
            size: (w, h),
            velocity: (0.0, 0.0),
            depth,
            depth_velocity: 0.0,
            bulge_mm: 0,
        }
    }

    pub fn with_velocity(mut self, vx: f64, vy: f64) -> Self {
        self.velocity = (vx, vy);
        self
    }

    fn origin_at(&self, f: usize) -> (i64, i64) {
        (
            (self.start.0 + self.velocity.0 * f as f64).round() as i64,
            (self.start.1 + self.velocity.1 * f as f64).round() as i64,
        )
    }

    fn center_depth_at(&self, f: usize) -> f64 {
        self.depth as f64 + self.depth_velocity * f as f64
    }

    fn box_at(&self, f: usize) -> (i64, i64, i64, i64) {
        let (x0, y0) = self.origin_at(f);
        (x0, y0, x0 + self.size.0 as i64 - 1, y0 + self.size.1 as i64 - 1)
    }

    /// Surface depth at pixel (x, y) of frame f, if the blob covers it.
    fn depth_at(&self, f: usize, x: i64, y: i64) -> Option<f64> {
        let (x0, y0, x1, y1) = self.box_at(f);
        if x < x0 || x > x1 || y < y0 || y > y1 {
            return None;
        }
        let hw = self.size.0 as f64 / 2.0;
        let hh = self.size.1 as f64 / 2.0;
        let dx = (x as f64 + 0.5 - (x0 as f64 + hw)) / hw;
        let dy = (y as f64 + 0.5 - (y0 as f64 + hh)) / hh;
        let rho2 = dx * dx + dy * dy;
        if self.shape == BlobShape::Ellipse && rho2 > 1.0 {
            return None;
        }
        Some(self.center_depth_at(f) + self.bulge_mm as f64 * rho2.min(1.0))
    }

    fn max_depth_at(&self, f: usize) -> f64 {
        self.center_depth_at(f) + self.bulge_mm as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HeldObject {
    pub blob: Blob,
    /// First frame in which the object is rendered.
    pub appear_frame: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthSpec {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub background_depth: u16,
    /// Region beyond sensor range (renders as 0).
    pub far_field: Option<BoxRect>,
    /// Static furniture in front of the background plane.
    pub near_field: Option<(BoxRect, u16)>,
    pub actor: Blob,
    pub held_object: Option<HeldObject>,
    /// Uniform per-pixel jitter in [-noise_mm, noise_mm] on actor/object pixels.
    pub noise_mm: u16,
}

impl SynthSpec {
    /// A plain scene: flat background, one actor, nothing else.
    pub fn simple(width: usize, height: usize, frames: usize, background: u16, actor: Blob) -> Self {
        Self {
            width,
            height,
            frames,
            background_depth: background,
            far_field: None,
            near_field: None,
            actor,
            held_object: None,
            noise_mm: 0,
        }
    }
}

/// Rendered scene plus its ground truth.
#[derive(Debug, Clone)]
pub struct SynthOutput {
    pub sequence: DepthSequence,
    /// Static scene without actor or object.
    pub background: DepthFrame,
    /// Visible actor/object pixels per frame.
    pub masks: Vec<BinaryMask>,
    pub actor_boxes: Vec<BoxRect>,
    pub object_boxes: Vec<Option<BoxRect>>,
}

fn validate_blob(spec: &SynthSpec, blob: &Blob, frames: std::ops::Range<usize>, what: &str) -> Result<(), DepthIoError> {
    if blob.size.0 == 0 || blob.size.1 == 0 {
        return Err(DepthIoError::InvalidSynthSpec(format!("{what} has zero size")));
    }
    for f in frames {
        let (x0, y0, x1, y1) = blob.box_at(f);
        if x0 < 0 || y0 < 0 || x1 >= spec.width as i64 || y1 >= spec.height as i64 {
            return Err(DepthIoError::InvalidSynthSpec(format!(
                "{what} leaves the frame at frame {f}"
            )));
        }
        if blob.center_depth_at(f) < 1.0 {
            return Err(DepthIoError::InvalidSynthSpec(format!(
                "{what} depth is not positive at frame {f}"
            )));
        }
        if blob.max_depth_at(f) + spec.noise_mm as f64 >= spec.background_depth as f64 {
            return Err(DepthIoError::InvalidSynthSpec(format!(
                "{what} depth reaches the background at frame {f}"
            )));
        }
    }
    Ok(())
}

fn to_box((x0, y0, x1, y1): (i64, i64, i64, i64)) -> BoxRect {
    BoxRect {
        x0: x0 as usize,
        y0: y0 as usize,
        x1: x1 as usize,
        y1: y1 as usize,
    }
}

/// Renders `spec`; identical `(spec, seed)` pairs give identical output.
pub fn synth_action(spec: &SynthSpec, seed: u64) -> Result<SynthOutput, DepthIoError> {
    let (w, h) = (spec.width, spec.height);
    if w == 0 || h == 0 || w > u16::MAX as usize || h > u16::MAX as usize {
        return Err(DepthIoError::InvalidSynthSpec(format!("bad frame size {w}x{h}")));
    }
    if spec.frames < 2 {
        return Err(DepthIoError::TooFewFrames(spec.frames));
    }
    if spec.background_depth == 0 {
        return Err(DepthIoError::InvalidSynthSpec(
            "background depth must be positive".into(),
        ));
    }
    validate_blob(spec, &spec.actor, 0..spec.frames, "actor")?;
    if let Some(obj) = &spec.held_object {
        validate_blob(spec, &obj.blob, obj.appear_frame..spec.frames, "held object")?;
    }

    let mut background = DepthFrame::filled(w, h, spec.background_depth);
    if let Some((b, depth)) = spec.near_field {
        for y in b.y0..=b.y1.min(h - 1) {
            for x in b.x0..=b.x1.min(w - 1) {
                background.set(x, y, depth);
            }
        }
    }
    if let Some(b) = spec.far_field {
        for y in b.y0..=b.y1.min(h - 1) {
            for x in b.x0..=b.x1.min(w - 1) {
                background.set(x, y, 0);
            }
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = spec.noise_mm as i32;
    let mut frames = Vec::with_capacity(spec.frames);
    let mut masks = Vec::with_capacity(spec.frames);
    let mut actor_boxes = Vec::with_capacity(spec.frames);
    let mut object_boxes = Vec::with_capacity(spec.frames);

    for f in 0..spec.frames {
        let mut frame = background.clone();
        let mut mask = BinaryMask::new(w, h);
        let object = spec
            .held_object
            .as_ref()
            .filter(|o| f >= o.appear_frame)
            .map(|o| &o.blob);
        for y in 0..h {
            for x in 0..w {
                let surfaces = [
                    spec.actor.depth_at(f, x as i64, y as i64),
                    object.and_then(|b| b.depth_at(f, x as i64, y as i64)),
                ];
                let nearest = surfaces.into_iter().flatten().fold(None, |acc: Option<f64>, d| {
                    Some(acc.map_or(d, |a| a.min(d)))
                });
                let Some(d) = nearest else { continue };
                let bg = background.get(x, y);
                if bg != 0 && d >= bg as f64 {
                    continue;
                }
                let jitter = if noise > 0 {
                    rng.random_range(-noise..=noise)
                } else {
                    0
                };
                let v = (d.round() as i32 + jitter).clamp(1, u16::MAX as i32) as u16;
                frame.set(x, y, v);
                mask.set(x, y, true);
            }
        }
        frames.push(frame);
        masks.push(mask);
        actor_boxes.push(to_box(spec.actor.box_at(f)));
        object_boxes.push(object.map(|b| to_box(b.box_at(f))));
    }

    Ok(SynthOutput {
        sequence: DepthSequence::new(frames, 0, 0, "synth")?,
        background,
        masks,
        actor_boxes,
        object_boxes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn moving(vx: f64) -> SynthSpec {
        SynthSpec::simple(64, 48, 10, 4000, Blob::rect(4.0, 10.0, 12, 16, 2000).with_velocity(vx, 0.0))
    }

    #[test]
    fn static_blob_gives_identical_frames() {
        let out = synth_action(&moving(0.0), 1).unwrap();
        let first = &out.sequence.frames()[0];
        assert!(out.sequence.frames().iter().all(|f| f == first));
    }

    #[test]
    fn centroid_advances_with_velocity() {
        let out = synth_action(&moving(2.0), 5).unwrap();
        let centroids: Vec<f64> = out
            .masks
            .iter()
            .map(|m| {
                let mut sum = 0.0;
                let mut n = 0.0;
                for y in 0..m.height() {
                    for x in 0..m.width() {
                        if m.get(x, y) {
                            sum += x as f64;
                            n += 1.0;
                        }
                    }
                }
                sum / n
            })
            .collect();
        for pair in centroids.windows(2) {
            assert!((pair[1] - pair[0] - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn mask_matches_nonbackground_pixels() {
        let out = synth_action(&moving(2.0), 5).unwrap();
        for (frame, mask) in out.sequence.frames().iter().zip(&out.masks) {
            for y in 0..48 {
                for x in 0..64 {
                    assert_eq!(mask.get(x, y), frame.get(x, y) != out.background.get(x, y));
                }
            }
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let mut spec = moving(1.5);
        spec.noise_mm = 4;
        let a = synth_action(&spec, 42).unwrap();
        let b = synth_action(&spec, 42).unwrap();
        assert_eq!(a.sequence, b.sequence);
        let c = synth_action(&spec, 43).unwrap();
        assert_ne!(a.sequence, c.sequence);
    }

    #[test]
    fn rejects_blob_leaving_frame() {
        let spec = moving(8.0);
        assert!(matches!(
            synth_action(&spec, 0),
            Err(DepthIoError::InvalidSynthSpec(_))
        ));
    }

    #[test]
    fn rejects_actor_behind_background() {
        let mut spec = moving(0.0);
        spec.actor.depth = 4000;
        assert!(synth_action(&spec, 0).is_err());
    }

    #[test]
    fn held_object_appears_on_schedule() {
        let mut spec = moving(0.0);
        spec.held_object = Some(HeldObject {
            blob: Blob::rect(40.0, 30.0, 6, 6, 1500),
            appear_frame: 4,
        });
        let out = synth_action(&spec, 0).unwrap();
        assert!(out.object_boxes[..4].iter().all(Option::is_none));
        assert!(out.object_boxes[4..].iter().all(Option::is_some));
        assert_eq!(out.masks[3].count(), 12 * 16);
        assert_eq!(out.masks[4].count(), 12 * 16 + 36);
        assert_eq!(out.sequence.at(42, 32, 5), 1500);
    }

    #[test]
    fn far_field_renders_zero_but_actor_covers_it() {
        let mut spec = moving(2.0);
        spec.far_field = Some(BoxRect {
            x0: 0,
            y0: 0,
            x1: 63,
            y1: 11,
        });
        let out = synth_action(&spec, 0).unwrap();
        assert_eq!(out.background.get(30, 5), 0);
        assert_eq!(out.sequence.at(30, 5, 0), 0);
        // actor spans rows 10..26, so rows 10 and 11 overlap the far field
        assert_eq!(out.sequence.at(5, 10, 0), 2000);
    }
}
