//! Moore-neighbor contour tracing and equal-arc-length sampling.

use super::{PlaneSet, Stip, StipError, StipKind, View};
use crate::background::{label_components, Connectivity};
use crate::depthio::DepthFrame;
use crate::mask::BinaryMask;

/// Clockwise (screen coordinates, y down) starting east.
const DIRS: [(i64, i64); 8] = [
    (1, 0),
    (1, 1),
    (0, 1),
    (-1, 1),
    (-1, 0),
    (-1, -1),
    (0, -1),
    (1, -1),
];
const WEST: usize = 4;

fn dir_index(dx: i64, dy: i64) -> usize {
    DIRS.iter()
        .position(|&d| d == (dx, dy))
        .expect("offset is an 8-neighbor step")
}

/// Outer boundary of the 8-connected component containing `start`, which
/// must be the component's first pixel in raster order. The closed contour
/// is returned without repeating the start pixel.
fn trace_from(mask: &BinaryMask, start: (usize, usize)) -> Vec<(usize, usize)> {
    let (w, h) = (mask.width() as i64, mask.height() as i64);
    let fg = |x: i64, y: i64| x >= 0 && y >= 0 && x < w && y < h && mask.get(x as usize, y as usize);

    let s = (start.0 as i64, start.1 as i64);
    // scan clockwise from just after the backtrack direction
    let step = |c: (i64, i64), back: usize| -> Option<((i64, i64), usize)> {
        for k in 1..=8 {
            let d = (back + k) % 8;
            let n = (c.0 + DIRS[d].0, c.1 + DIRS[d].1);
            if fg(n.0, n.1) {
                let prev = (back + k + 7) % 8;
                let b = (c.0 + DIRS[prev].0, c.1 + DIRS[prev].1);
                return Some((n, dir_index(b.0 - n.0, b.1 - n.1)));
            }
        }
        None
    };

    let mut contour = vec![start];
    let Some((first, first_back)) = step(s, WEST) else {
        return contour;
    };
    let (mut cur, mut back) = (first, first_back);
    // Jacob's stopping rule: done when the start pixel is about to be left
    // by the same move that began the trace.
    let limit = 4 * (w * h) as usize + 8;
    while contour.len() <= limit {
        if cur == s {
            let (next, next_back) = step(cur, back).expect("start has a neighbor");
            if next == first && next_back == first_back {
                break;
            }
            contour.push((cur.0 as usize, cur.1 as usize));
            cur = next;
            back = next_back;
            continue;
        }
        contour.push((cur.0 as usize, cur.1 as usize));
        let (next, next_back) = step(cur, back).expect("contour pixel has a neighbor");
        cur = next;
        back = next_back;
    }
    contour
}

/// Outer contours of every 8-connected component, in raster order of their
/// first pixels. Holes are not traced.
pub fn trace_outer_contours(mask: &BinaryMask) -> Vec<Vec<(usize, usize)>> {
    let lab = label_components(mask, Connectivity::Eight);
    let mut starts: Vec<Option<(usize, usize)>> = vec![None; lab.num_components()];
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            let l = lab.label(x, y);
            if l != 0 && starts[l as usize - 1].is_none() {
                starts[l as usize - 1] = Some((x, y));
            }
        }
    }
    starts
        .into_iter()
        .flatten()
        .map(|s| trace_from(mask, s))
        .collect()
}

/// Walks a closed contour and keeps its first pixel plus one pixel each time
/// the arc length since the last kept pixel reaches `lambda`. Axis steps
/// count 1, diagonal steps `sqrt(2)`.
pub fn sample_contour(contour: &[(usize, usize)], lambda: f64) -> Vec<(usize, usize)> {
    let Some(&first) = contour.first() else {
        return Vec::new();
    };
    let mut out = vec![first];
    let mut acc = 0.0;
    for pair in contour.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let diagonal = a.0 != b.0 && a.1 != b.1;
        acc += if diagonal { std::f64::consts::SQRT_2 } else { 1.0 };
        if acc >= lambda - 1e-9 {
            out.push(b);
            acc = 0.0;
        }
    }
    out
}

/// Contour samples of all three planes lifted to 4-D candidates.
///
/// xy samples take the frame depth; xz samples `(x, bin)` take the stored
/// y and the bin depth; zy samples `(bin, y)` take the stored x and the bin
/// depth. Lifted points whose `(x, y)` is not a foreground pixel (possible
/// for interpolated side-view cells) are dropped, and duplicates are merged
/// keeping the first occurrence in xy, xz, zy order.
pub fn sample_contour_candidates(
    planes: &PlaneSet,
    frame: &DepthFrame,
    frame_index: usize,
    lambda: f64,
) -> Result<Vec<Stip>, StipError> {
    if !(lambda >= 1.0) {
        return Err(StipError::InvalidLambda(lambda));
    }
    if !planes.xy.occupied.iter().any(|&b| b) {
        return Err(StipError::EmptySilhouette);
    }
    let on_foreground = |x: usize, y: usize| planes.xy.is_occupied(x, y);
    let mut out: Vec<Stip> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    let mut push = |x: usize, y: usize, z: u32| {
        if on_foreground(x, y) && seen.insert((x, y, z)) {
            out.push(Stip {
                x,
                y,
                z,
                f: frame_index,
                kind: StipKind::Candidate,
            });
        }
    };

    for view in View::ALL {
        let map = planes.get(view);
        for contour in trace_outer_contours(&map.silhouette()) {
            for (c, r) in sample_contour(&contour, lambda) {
                match view {
                    View::Xy => push(c, r, frame.get(c, r) as u32),
                    View::Xz => push(c, map.get(c, r) as usize, planes.z_axis.depth_of(r)),
                    View::Zy => push(map.get(c, r) as usize, r, planes.z_axis.depth_of(c)),
                }
            }
        }
    }
    Ok(out)
}
