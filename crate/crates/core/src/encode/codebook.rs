//! k-means codebooks and their binary format.

use std::collections::HashSet;
use std::path::Path;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::EncodeError;
use crate::binio::{LeReader, LeWriter};
use crate::descriptor::DescriptorMatrix;

pub const CDBK_MAGIC: &[u8; 4] = b"CDBK";
pub const CDBK_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansParams {
    pub k: usize,
    pub seed: u64,
    pub max_iters: usize,
    /// Stop once the relative distortion improvement falls below this.
    pub tol: f64,
    /// Independent runs with seeds `seed, seed + 1, ...`; the lowest final
    /// distortion wins.
    pub restarts: usize,
}

impl KMeansParams {
    pub fn new(k: usize, seed: u64) -> Self {
        Self {
            k,
            seed,
            max_iters: 100,
            tol: 1e-4,
            restarts: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Codebook {
    pub k: usize,
    pub d: usize,
    /// Seed of the run that produced the centroids.
    pub seed: u64,
    /// Row-major `k x d`.
    pub centroids: Vec<f32>,
    /// What was clustered, e.g. `motion_scale_1` or `shape`.
    pub label: String,
    /// Total squared distance after each assignment step.
    pub distortion: Vec<f64>,
}

impl Codebook {
    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.d..(i + 1) * self.d]
    }

    pub fn encode(&self) -> Vec<u8> {
        let mut w = LeWriter::new();
        w.bytes(CDBK_MAGIC)
            .u16(CDBK_VERSION)
            .u32(self.k as u32)
            .u32(self.d as u32)
            .u64(self.seed);
        for &v in &self.centroids {
            w.f32(v);
        }
        w.into_inner()
    }

    pub fn decode(bytes: &[u8]) -> Result<Self, EncodeError> {
        let bad = |m: &str| EncodeError::Format(m.to_string());
        let mut r = LeReader::new(bytes);
        if r.take(4) != Some(&CDBK_MAGIC[..]) {
            return Err(bad("bad magic"));
        }
        let version = r.u16().ok_or_else(|| bad("truncated header"))?;
        if version != CDBK_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let k = r.u32().ok_or_else(|| bad("truncated header"))? as usize;
        let d = r.u32().ok_or_else(|| bad("truncated header"))? as usize;
        let seed = r.u64().ok_or_else(|| bad("truncated header"))?;
        let n = k.checked_mul(d).ok_or_else(|| bad("size overflow"))?;
        if r.remaining() != n * 4 {
            return Err(bad(&format!("expected {} value bytes, found {}", n * 4, r.remaining())));
        }
        let centroids = (0..n).map(|_| r.f32().expect("length checked")).collect();
        Ok(Self {
            k,
            d,
            seed,
            centroids,
            label: String::new(),
            distortion: Vec::new(),
        })
    }
}

pub fn write_codebook(path: &Path, cb: &Codebook) -> Result<(), EncodeError> {
    std::fs::write(path, cb.encode())?;
    Ok(())
}

pub fn read_codebook(path: &Path) -> Result<Codebook, EncodeError> {
    Codebook::decode(&std::fs::read(path)?)
}

fn sq_dist<C: Copy + Into<f64>>(a: &[f32], c: &[C]) -> f64 {
    // eight independent partial sums keep the order fixed and let the loop vectorize
    let mut acc = [0.0f64; 8];
    let (ha, ta) = a.split_at(a.len() - a.len() % 8);
    let (hc, tc) = c.split_at(ha.len());
    for (xa, xc) in ha.chunks_exact(8).zip(hc.chunks_exact(8)) {
        for l in 0..8 {
            let d = xa[l] as f64 - xc[l].into();
            acc[l] += d * d;
        }
    }
    for (l, (&x, &y)) in ta.iter().zip(tc).enumerate() {
        let d = x as f64 - y.into();
        acc[l] += d * d;
    }
    acc.iter().sum()
}

fn nearest<C: Copy + Into<f64>>(row: &[f32], centroids: &[C], d: usize) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (i, c) in centroids.chunks_exact(d).enumerate() {
        let dist = sq_dist(row, c);
        if dist < best.1 {
            best = (i, dist);
        }
    }
    best
}

/// Index of the closest centroid and the squared distance to it; ties go to
/// the lowest index.
pub fn nearest_centroid(cb: &Codebook, row: &[f32]) -> Result<(usize, f64), EncodeError> {
    if row.len() != cb.d {
        return Err(EncodeError::DimensionMismatch {
            expected: cb.d,
            found: row.len(),
        });
    }
    Ok(nearest(row, &cb.centroids, cb.d))
}

fn initial_centroids(data: &DescriptorMatrix, k: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut seen = HashSet::new();
    let distinct: Vec<usize> = (0..data.count())
        .filter(|&i| seen.insert(data.row(i).iter().map(|v| v.to_bits()).collect::<Vec<_>>()))
        .collect();
    let mut out = Vec::with_capacity(k * data.dim);
    if distinct.len() >= k {
        for i in sample(rng, distinct.len(), k) {
            out.extend(data.row(distinct[i]).iter().map(|&v| v as f64));
        }
    } else {
        for j in 0..k {
            let base = data.row(distinct[j % distinct.len()]);
            let copy = j >= distinct.len();
            out.extend(base.iter().map(|&v| {
                let jitter = if copy { rng.random_range(-1e-6..1e-6) } else { 0.0 };
                v as f64 + jitter
            }));
        }
    }
    out
}

fn lloyd(data: &DescriptorMatrix, params: &KMeansParams, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let (k, d) = (params.k, data.dim);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centroids = initial_centroids(data, k, &mut rng);
    let mut history: Vec<f64> = Vec::new();
    for it in 0..params.max_iters.max(1) {
        let assign: Vec<(usize, f64)> = (0..data.count())
            .into_par_iter()
            .map(|i| nearest(data.row(i), &centroids, d))
            .collect();
        let total: f64 = assign.iter().map(|a| a.1).sum();
        let prev = history.last().copied();
        if let Some(p) = prev {
            debug_assert!(total <= p * (1.0 + 1e-9) + 1e-9, "distortion rose from {p} to {total}");
        }
        history.push(total);
        let converged = prev.is_some_and(|p| p - total <= params.tol * p);
        if converged || it + 1 == params.max_iters {
            break;
        }

        let mut sums = vec![0.0f64; k * d];
        let mut counts = vec![0usize; k];
        for (i, &(c, _)) in assign.iter().enumerate() {
            counts[c] += 1;
            for (s, &v) in sums[c * d..(c + 1) * d].iter_mut().zip(data.row(i)) {
                *s += v as f64;
            }
        }
        for c in 0..k {
            if counts[c] > 0 {
                let n = counts[c] as f64;
                for (dst, s) in centroids[c * d..(c + 1) * d].iter_mut().zip(&sums[c * d..(c + 1) * d]) {
                    *dst = s / n;
                }
            }
        }
        // empty clusters move onto the points worst served by their centroid
        let empty: Vec<usize> = (0..k).filter(|&c| counts[c] == 0).collect();
        if !empty.is_empty() {
            let mut order: Vec<usize> = (0..assign.len()).collect();
            order.sort_by(|&a, &b| assign[b].1.total_cmp(&assign[a].1).then(a.cmp(&b)));
            for (&c, &i) in empty.iter().zip(&order) {
                for (dst, &v) in centroids[c * d..(c + 1) * d].iter_mut().zip(data.row(i)) {
                    *dst = v as f64;
                }
            }
        }
    }
    (centroids, history)
}

/// Lloyd's algorithm with Euclidean distance, seeded initialization on
/// distinct points and farthest-point reseeding of empty clusters.
pub fn kmeans(data: &DescriptorMatrix, params: &KMeansParams) -> Result<Codebook, EncodeError> {
    if data.count() == 0 {
        return Err(EncodeError::EmptyInput);
    }
    if params.k == 0 {
        return Err(EncodeError::InvalidK);
    }
    let mut best: Option<(u64, Vec<f64>, Vec<f64>)> = None;
    for r in 0..params.restarts.max(1) {
        let seed = params.seed.wrapping_add(r as u64);
        let (c, h) = lloyd(data, params, seed);
        let last = *h.last().expect("at least one iteration");
        if best.as_ref().is_none_or(|b| last < *b.2.last().expect("nonempty")) {
            best = Some((seed, c, h));
        }
    }
    let (seed, centroids, distortion) = best.expect("at least one restart");
    Ok(Codebook {
        k: params.k,
        d: data.dim,
        seed,
        centroids: centroids.into_iter().map(|v| v as f32).collect(),
        label: String::new(),
        distortion,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::rand_core::RngCore;

    fn matrix(dim: usize, rows: &[Vec<f64>]) -> DescriptorMatrix {
        DescriptorMatrix::from_rows(dim, rows.iter().map(|r| r.as_slice()))
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let m = matrix(2, &[vec![0.0, 0.0], vec![2.0, 4.0], vec![4.0, 2.0]]);
        let cb = kmeans(&m, &KMeansParams::new(1, 3)).unwrap();
        assert!((cb.centroid(0)[0] - 2.0).abs() < 1e-6);
        assert!((cb.centroid(0)[1] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn k_equal_to_distinct_points_has_zero_distortion() {
        let pts = vec![vec![0.0, 1.0], vec![5.0, 5.0], vec![9.0, 0.0], vec![5.0, 5.0]];
        let cb = kmeans(&matrix(2, &pts), &KMeansParams::new(3, 11)).unwrap();
        assert_eq!(*cb.distortion.last().unwrap(), 0.0);
        let mut rows: Vec<Vec<f32>> = (0..3).map(|i| cb.centroid(i).to_vec()).collect();
        rows.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(rows, vec![vec![0.0, 1.0], vec![5.0, 5.0], vec![9.0, 0.0]]);
    }

    #[test]
    fn fewer_distinct_points_than_k() {
        let pts = vec![vec![1.0, 1.0]; 5];
        let cb = kmeans(&matrix(2, &pts), &KMeansParams::new(3, 0)).unwrap();
        assert_eq!(cb.k, 3);
        assert!(cb.centroids.iter().all(|v| v.is_finite()));
    }

    fn blobs(seed: u64) -> (DescriptorMatrix, [f64; 4]) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut gauss = || {
            // Box-Muller
            let u1 = (rng.next_u32() as f64 + 1.0) / (u32::MAX as f64 + 2.0);
            let u2 = rng.next_u32() as f64 / u32::MAX as f64;
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        };
        let mut rows = Vec::new();
        for c in [(0.0, 0.0), (10.0, 10.0)] {
            for _ in 0..200 {
                rows.push(vec![c.0 + 0.5 * gauss(), c.1 + 0.5 * gauss()]);
            }
        }
        let mean = |lo: usize, dim: usize| rows[lo..lo + 200].iter().map(|r| r[dim]).sum::<f64>() / 200.0;
        let means = [mean(0, 0), mean(0, 1), mean(200, 0), mean(200, 1)];
        (matrix(2, &rows), means)
    }

    #[test]
    fn separated_blobs_are_recovered() {
        let (m, means) = blobs(5);
        let cb = kmeans(&m, &KMeansParams::new(2, 1)).unwrap();
        let mut c: Vec<&[f32]> = (0..2).map(|i| cb.centroid(i)).collect();
        c.sort_by(|a, b| a[0].partial_cmp(&b[0]).unwrap());
        assert!((c[0][0] as f64 - means[0]).abs() < 0.1 && (c[0][1] as f64 - means[1]).abs() < 0.1);
        assert!((c[1][0] as f64 - means[2]).abs() < 0.1 && (c[1][1] as f64 - means[3]).abs() < 0.1);
    }

    #[test]
    fn distortion_never_increases_and_runs_repeat() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let rows: Vec<Vec<f64>> = (0..300)
            .map(|_| (0..5).map(|_| rng.random_range(0.0..1.0)).collect())
            .collect();
        let m = matrix(5, &rows);
        let mut p = KMeansParams::new(12, 4);
        p.tol = 0.0;
        p.max_iters = 50;
        let a = kmeans(&m, &p).unwrap();
        for w in a.distortion.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-12));
        }
        let b = kmeans(&m, &p).unwrap();
        assert_eq!(a, b);
        p.restarts = 4;
        let best = kmeans(&m, &p).unwrap();
        assert!(best.distortion.last().unwrap() <= a.distortion.last().unwrap());
    }

    #[test]
    fn codebook_file_round_trip() {
        let m = matrix(3, &[vec![1.0, 2.0, 3.0], vec![4.0, 5.0, 6.0]]);
        let cb = kmeans(&m, &KMeansParams::new(2, 77)).unwrap();
        let bytes = cb.encode();
        assert_eq!(&bytes[..4], b"CDBK");
        assert_eq!(bytes.len(), 4 + 2 + 4 + 4 + 8 + 6 * 4);
        assert_eq!(u64::from_le_bytes(bytes[14..22].try_into().unwrap()), 77);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.cdbk");
        write_codebook(&path, &cb).unwrap();
        let back = read_codebook(&path).unwrap();
        assert_eq!((back.k, back.d, back.seed), (2, 3, 77));
        assert_eq!(back.centroids, cb.centroids);
        assert!(Codebook::decode(&bytes[..bytes.len() - 2]).is_err());
    }

    #[test]
    fn errors() {
        assert!(matches!(kmeans(&DescriptorMatrix::new(2), &KMeansParams::new(2, 0)), Err(EncodeError::EmptyInput)));
        let m = matrix(1, &[vec![1.0]]);
        assert!(matches!(kmeans(&m, &KMeansParams::new(0, 0)), Err(EncodeError::InvalidK)));
    }
}
