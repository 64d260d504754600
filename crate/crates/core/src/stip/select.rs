//! Selection of motion- and shape-based points by their plane projections.

use super::{Stip, StipKind, View, ZAxis};
use crate::mask::BoxRect;

/// One box per plane; `None` where that plane saw no motion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct MotionBoxes {
    pub xy: Option<BoxRect>,
    pub xz: Option<BoxRect>,
    pub zy: Option<BoxRect>,
}

impl MotionBoxes {
    pub fn get(&self, view: View) -> Option<BoxRect> {
        match view {
            View::Xy => self.xy,
            View::Xz => self.xz,
            View::Zy => self.zy,
        }
    }

    pub fn get_mut(&mut self, view: View) -> &mut Option<BoxRect> {
        match view {
            View::Xy => &mut self.xy,
            View::Xz => &mut self.xz,
            View::Zy => &mut self.zy,
        }
    }

    pub fn is_complete(&self) -> bool {
        self.xy.is_some() && self.xz.is_some() && self.zy.is_some()
    }

    pub fn is_empty(&self) -> bool {
        self.xy.is_none() && self.xz.is_none() && self.zy.is_none()
    }

    /// Per-plane union; a plane present on either side stays present.
    pub fn union(&self, other: &MotionBoxes) -> MotionBoxes {
        let merge = |a: Option<BoxRect>, b: Option<BoxRect>| match (a, b) {
            (Some(a), Some(b)) => Some(a.union(b)),
            (a, None) => a,
            (None, b) => b,
        };
        MotionBoxes {
            xy: merge(self.xy, other.xy),
            xz: merge(self.xz, other.xz),
            zy: merge(self.zy, other.zy),
        }
    }
}

/// Keeps the candidates whose projections fall inside the boxes (inclusive)
/// on all three planes and relabels them with `kind`.
///
/// For [`StipKind::Motion`] a missing box on any plane selects nothing. For
/// [`StipKind::Shape`] a missing box leaves that plane unconstrained, so a
/// sequence without any motion keeps every candidate.
pub fn select_stips(
    candidates: &[Stip],
    boxes: &MotionBoxes,
    kind: StipKind,
    z_axis: &ZAxis,
) -> Vec<Stip> {
    if kind == StipKind::Motion && !boxes.is_complete() {
        return Vec::new();
    }
    candidates
        .iter()
        .filter(|s| {
            View::ALL.iter().all(|&v| match boxes.get(v) {
                Some(b) => {
                    let (c, r) = s.project(v, z_axis);
                    b.contains(c, r)
                }
                None => true,
            })
        })
        .map(|s| Stip { kind, ..*s })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn stip(x: usize, y: usize, z: u32) -> Stip {
        Stip {
            x,
            y,
            z,
            f: 1,
            kind: StipKind::Candidate,
        }
    }

    fn b(x0: usize, y0: usize, x1: usize, y1: usize) -> Option<BoxRect> {
        Some(BoxRect { x0, y0, x1, y1 })
    }

    fn setup() -> (MotionBoxes, ZAxis) {
        let z = ZAxis::covering(3000, 10.0).unwrap();
        let boxes = MotionBoxes {
            xy: b(10, 10, 20, 20),
            xz: b(10, 100, 20, 150),
            zy: b(100, 10, 150, 20),
        };
        (boxes, z)
    }

    #[test]
    fn inside_all_three_is_selected() {
        let (boxes, z) = setup();
        let out = select_stips(&[stip(15, 15, 1200)], &boxes, StipKind::Motion, &z);
        assert_eq!(out.len(), 1);
        assert_eq!(out[0].kind, StipKind::Motion);
        // inclusive edges
        let edge = select_stips(&[stip(10, 20, 1000)], &boxes, StipKind::Motion, &z);
        assert_eq!(edge.len(), 1);
    }

    #[test]
    fn outside_xz_only_is_rejected() {
        let (mut boxes, z) = setup();
        // the xz box excludes depth 1200 but xy and zy accept it
        boxes.xz = b(10, 130, 20, 150);
        boxes.zy = b(100, 10, 150, 20);
        assert!(select_stips(&[stip(15, 15, 1200)], &boxes, StipKind::Motion, &z).is_empty());
    }

    #[test]
    fn missing_box_semantics() {
        let (mut boxes, z) = setup();
        boxes.xz = None;
        let c = [stip(15, 15, 1200), stip(40, 15, 1200)];
        assert!(select_stips(&c, &boxes, StipKind::Motion, &z).is_empty());
        assert_eq!(select_stips(&c, &boxes, StipKind::Shape, &z).len(), 1);
        let all = select_stips(&c, &MotionBoxes::default(), StipKind::Shape, &z);
        assert_eq!(all.len(), 2);
        assert!(all.iter().all(|s| s.kind == StipKind::Shape));
    }
}
