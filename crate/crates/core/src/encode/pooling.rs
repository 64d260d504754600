//! Histogram pooling: plain, pyramid and distance-weighted.

use rayon::prelude::*;

use super::{nearest_centroid, Codebook, EncodeError, Representation};
use crate::descriptor::DescriptorMatrix;
use crate::stip::Stip;

fn assignments(descs: &DescriptorMatrix, cb: &Codebook) -> Result<Vec<usize>, EncodeError> {
    if descs.dim != cb.d && descs.count() > 0 {
        return Err(EncodeError::DimensionMismatch {
            expected: cb.d,
            found: descs.dim,
        });
    }
    (0..descs.count())
        .into_par_iter()
        .map(|i| nearest_centroid(cb, descs.row(i)).map(|(c, _)| c))
        .collect()
}

fn l1_normalize(h: &mut [f64]) {
    let total: f64 = h.iter().sum();
    if total > 0.0 {
        for v in h {
            *v /= total;
        }
    }
}

/// Hard-assignment histogram of `descs`, L1-normalized; all zeros when
/// there are no descriptors.
pub fn vq_histogram(descs: &DescriptorMatrix, cb: &Codebook) -> Result<Vec<f64>, EncodeError> {
    let mut h = vec![0.0; cb.k];
    for c in assignments(descs, cb)? {
        h[c] += 1.0;
    }
    l1_normalize(&mut h);
    Ok(h)
}

/// Grid of one pyramid level: cells along t, y and x.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StpLevel {
    pub nt: usize,
    pub ny: usize,
    pub nx: usize,
}

impl StpLevel {
    pub fn new(nt: usize, ny: usize, nx: usize) -> Self {
        Self { nt, ny, nx }
    }

    pub fn cells(&self) -> usize {
        self.nt * self.ny * self.nx
    }
}

/// Size of the sequence volume the pyramid partitions.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct VolumeExtent {
    pub frames: usize,
    pub height: usize,
    pub width: usize,
}

pub fn stp_dimension(levels: &[StpLevel], k: usize) -> usize {
    levels.iter().map(|l| l.cells() * k).sum()
}

fn cell(coord: usize, extent: usize, n: usize) -> usize {
    (coord * n / extent.max(1)).min(n - 1)
}

/// Per-cell histograms over every pyramid level, concatenated level by
/// level with cells in (t, y, x) raster order.
pub fn stp_encode(
    points: &[Stip],
    descs: &DescriptorMatrix,
    cb: &Codebook,
    levels: &[StpLevel],
    extent: VolumeExtent,
) -> Result<Representation, EncodeError> {
    if points.len() != descs.count() {
        return Err(EncodeError::CountMismatch {
            points: points.len(),
            descriptors: descs.count(),
        });
    }
    let words = assignments(descs, cb)?;
    let mut rep = Representation::default();
    for (li, lvl) in levels.iter().enumerate() {
        let mut hists = vec![vec![0.0; cb.k]; lvl.cells()];
        for (p, &w) in points.iter().zip(&words) {
            let ct = cell(p.f, extent.frames, lvl.nt);
            let cy = cell(p.y, extent.height, lvl.ny);
            let cx = cell(p.x, extent.width, lvl.nx);
            hists[(ct * lvl.ny + cy) * lvl.nx + cx][w] += 1.0;
        }
        for (ci, h) in hists.iter_mut().enumerate() {
            l1_normalize(h);
            let (t, y, x) = (ci / (lvl.ny * lvl.nx), (ci / lvl.nx) % lvl.ny, ci % lvl.nx);
            rep.push_segment(format!("stp_{li}_t{t}_y{y}_x{x}"), h);
        }
    }
    Ok(rep)
}

/// Histogram in which every point votes with its distance to `origin`
/// divided by the largest such distance. All zeros when every point sits
/// on the origin.
pub fn stw_encode(
    points: &[Stip],
    descs: &DescriptorMatrix,
    cb: &Codebook,
    origin: [f64; 4],
) -> Result<Vec<f64>, EncodeError> {
    if points.is_empty() {
        return Err(EncodeError::EmptyStipSet);
    }
    if points.len() != descs.count() {
        return Err(EncodeError::CountMismatch {
            points: points.len(),
            descriptors: descs.count(),
        });
    }
    let dist: Vec<f64> = points
        .iter()
        .map(|p| {
            let v = p.as_f64();
            (0..4).map(|d| (v[d] - origin[d]).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let max = dist.iter().cloned().fold(0.0, f64::max);
    let mut h = vec![0.0; cb.k];
    if max > 0.0 {
        for (&w, d) in assignments(descs, cb)?.iter().zip(&dist) {
            h[w] += d / max;
        }
    }
    l1_normalize(&mut h);
    Ok(h)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stip::StipKind;
    use proptest::prelude::*;

    fn cb(k: usize, d: usize, centroids: Vec<f32>) -> Codebook {
        Codebook {
            k,
            d,
            seed: 0,
            centroids,
            label: String::new(),
            distortion: Vec::new(),
        }
    }

    fn m(dim: usize, rows: &[&[f64]]) -> DescriptorMatrix {
        DescriptorMatrix::from_rows(dim, rows.iter().copied())
    }

    fn pt(x: usize, y: usize, f: usize) -> Stip {
        Stip {
            x,
            y,
            z: 1000,
            f,
            kind: StipKind::Motion,
        }
    }

    #[test]
    fn all_near_first_centroid() {
        let c = cb(3, 1, vec![0.0, 10.0, 20.0]);
        let h = vq_histogram(&m(1, &[&[1.0], &[-2.0], &[4.9]]), &c).unwrap();
        assert_eq!(h, vec![1.0, 0.0, 0.0]);
        assert_eq!(vq_histogram(&DescriptorMatrix::new(1), &c).unwrap(), vec![0.0; 3]);
        // equidistant goes to the lower index
        assert_eq!(vq_histogram(&m(1, &[&[5.0]]), &c).unwrap(), vec![1.0, 0.0, 0.0]);
        assert!(vq_histogram(&m(2, &[&[1.0, 1.0]]), &c).is_err());
    }

    #[test]
    fn pyramid_dimensions() {
        let lv = [StpLevel::new(1, 1, 1), StpLevel::new(1, 2, 2), StpLevel::new(1, 4, 4)];
        assert_eq!(stp_dimension(&lv, 10), 210);
        let lv = [StpLevel::new(1, 1, 1), StpLevel::new(1, 2, 2), StpLevel::new(2, 3, 3)];
        assert_eq!(stp_dimension(&lv, 10), 230);
    }

    #[test]
    fn single_level_pyramid_is_plain_histogram() {
        let c = cb(2, 1, vec![0.0, 1.0]);
        let d = m(1, &[&[0.1], &[0.9], &[0.8]]);
        let pts = [pt(1, 1, 0), pt(5, 2, 3), pt(9, 9, 9)];
        let ext = VolumeExtent { frames: 10, height: 10, width: 10 };
        let rep = stp_encode(&pts, &d, &c, &[StpLevel::new(1, 1, 1)], ext).unwrap();
        assert_eq!(rep.values, vq_histogram(&d, &c).unwrap());
    }

    #[test]
    fn points_in_one_cell() {
        let c = cb(2, 1, vec![0.0, 1.0]);
        let d = m(1, &[&[0.1], &[0.9]]);
        let pts = [pt(7, 1, 0), pt(8, 3, 5)];
        let ext = VolumeExtent { frames: 10, height: 10, width: 10 };
        let rep = stp_encode(&pts, &d, &c, &[StpLevel::new(1, 2, 2)], ext).unwrap();
        let nonzero: Vec<&str> = rep
            .layout
            .iter()
            .filter(|s| rep.values[s.offset..s.offset + s.len].iter().any(|&v| v > 0.0))
            .map(|s| s.name.as_str())
            .collect();
        assert_eq!(nonzero, vec!["stp_0_t0_y0_x1"]);
    }

    #[test]
    fn distance_weighting() {
        let c = cb(2, 1, vec![0.0, 1.0]);
        let d = m(1, &[&[0.0], &[0.0]]);
        let o = [0.0; 4];
        let h = stw_encode(&[pt(3, 4, 0), pt(6, 8, 0)], &d, &c, o).unwrap();
        assert_eq!(h, vec![1.0, 0.0]);
        let at_origin = Stip { z: 0, ..pt(0, 0, 0) };
        assert_eq!(stw_encode(&[at_origin, at_origin], &d, &c, o).unwrap(), vec![0.0, 0.0]);
        assert!(stw_encode(&[], &DescriptorMatrix::new(1), &c, o).is_err());
    }

    fn oracle_hist(rows: &[Vec<f64>], cents: &[Vec<f64>], weights: &[f64]) -> Vec<f64> {
        let mut h = vec![0.0; cents.len()];
        for (r, w) in rows.iter().zip(weights) {
            let dists: Vec<f64> = cents
                .iter()
                .map(|c| r.iter().zip(c).map(|(a, b)| (a - b) * (a - b)).sum())
                .collect();
            let best = (0..cents.len()).fold(0, |b, i| if dists[i] < dists[b] { i } else { b });
            h[best] += w;
        }
        let t: f64 = h.iter().sum();
        if t > 0.0 {
            h.iter_mut().for_each(|v| *v /= t);
        }
        h
    }

    fn f32_grid(v: Vec<Vec<f64>>) -> Vec<Vec<f64>> {
        v.into_iter().map(|r| r.into_iter().map(|x| x as f32 as f64).collect()).collect()
    }

    proptest! {
        #[test]
        fn histogram_matches_brute_force(
            rows in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 0..40),
            cents in prop::collection::vec(prop::collection::vec(-5.0f64..5.0, 3), 1..8),
        ) {
            let (rows, cents) = (f32_grid(rows), f32_grid(cents));
            let c = cb(cents.len(), 3, cents.iter().flatten().map(|&v| v as f32).collect());
            let d = DescriptorMatrix::from_rows(3, rows.iter().map(|r| r.as_slice()));
            let h = vq_histogram(&d, &c).unwrap();
            let want = oracle_hist(&rows, &cents, &vec![1.0; rows.len()]);
            for (a, b) in h.iter().zip(&want) {
                prop_assert!((a - b).abs() < 1e-12);
            }
            let total: f64 = h.iter().sum();
            prop_assert!(h.iter().all(|&v| v >= 0.0));
            let ok = if rows.is_empty() { total == 0.0 } else { (total - 1.0).abs() < 1e-9 };
            prop_assert!(ok);
        }

        #[test]
        fn weighted_histogram_matches_oracle(
            pts in prop::collection::vec((0usize..50, 0usize..50, 0usize..20, -3.0f64..3.0), 1..30),
            cents in prop::collection::vec(-3.0f64..3.0, 1..6),
        ) {
            let cents: Vec<Vec<f64>> = cents.into_iter().map(|v| vec![v as f32 as f64]).collect();
            let c = cb(cents.len(), 1, cents.iter().map(|v| v[0] as f32).collect());
            let rows: Vec<Vec<f64>> = pts.iter().map(|p| vec![p.3 as f32 as f64]).collect();
            let stips: Vec<Stip> = pts.iter().map(|p| pt(p.0, p.1, p.2)).collect();
            let d = DescriptorMatrix::from_rows(1, rows.iter().map(|r| r.as_slice()));
            let origin = [0.0, 0.0, 500.0, 0.0];
            let dist: Vec<f64> = stips.iter().map(|s| {
                let v = s.as_f64();
                ((v[0]).powi(2) + v[1].powi(2) + (v[2] - 500.0).powi(2) + v[3].powi(2)).sqrt()
            }).collect();
            let max = dist.iter().cloned().fold(0.0, f64::max);
            let w: Vec<f64> = dist.iter().map(|d| d / max).collect();
            let h = stw_encode(&stips, &d, &c, origin).unwrap();
            for (a, b) in h.iter().zip(oracle_hist(&rows, &cents, &w)) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }

        #[test]
        fn pyramid_cells_partition_points(
            pts in prop::collection::vec((0usize..64, 0usize..48, 0usize..30), 1..60),
        ) {
            let c = cb(1, 1, vec![0.0]);
            let rows = vec![vec![0.0]; pts.len()];
            let d = DescriptorMatrix::from_rows(1, rows.iter().map(|r| r.as_slice()));
            let stips: Vec<Stip> = pts.iter().map(|p| pt(p.0, p.1, p.2)).collect();
            let ext = VolumeExtent { frames: 30, height: 48, width: 64 };
            for lvl in [StpLevel::new(1, 2, 2), StpLevel::new(2, 3, 3)] {
                let mut counts = vec![0; lvl.cells()];
                for s in &stips {
                    let i = (cell(s.f, 30, lvl.nt) * lvl.ny + cell(s.y, 48, lvl.ny)) * lvl.nx + cell(s.x, 64, lvl.nx);
                    counts[i] += 1;
                }
                prop_assert_eq!(counts.iter().sum::<usize>(), stips.len());
                let rep = stp_encode(&stips, &d, &c, &[lvl], ext).unwrap();
                let occupied = rep.values.iter().filter(|&&v| v == 1.0).count();
                prop_assert_eq!(occupied, counts.iter().filter(|&&n| n > 0).count());
            }
        }
    }
}
