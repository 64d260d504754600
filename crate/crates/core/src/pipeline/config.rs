//! Plain-text pipeline configuration.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use sha2::{Digest, Sha256};

use super::PipelineError;
use crate::classify::{KernelParams, SvmParams};
use crate::descriptor::DescriptorParams;
use crate::encode::{KMeansParams, StpLevel};
use crate::stip::StipParams;

/// How a sequence is turned into one vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoding {
    /// Per-scale motion histograms followed by the shape histogram.
    Fused,
    /// Per-scale motion histograms only.
    Motion,
    /// Shape histogram only.
    Shape,
    /// Pyramid of per-cell motion histograms.
    Stp,
    /// Distance-weighted motion histograms.
    Stw,
}

impl Encoding {
    pub fn name(self) -> &'static str {
        match self {
            Encoding::Fused => "fused",
            Encoding::Motion => "motion",
            Encoding::Shape => "shape",
            Encoding::Stp => "stp",
            Encoding::Stw => "stw",
        }
    }
}

impl FromStr for Encoding {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Ok(match s {
            "fused" => Encoding::Fused,
            "motion" => Encoding::Motion,
            "shape" => Encoding::Shape,
            "stp" => Encoding::Stp,
            "stw" => Encoding::Stw,
            _ => return Err(format!("unknown encoding {s:?}")),
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub lambda: f64,
    pub epsilon: f64,
    pub t1: f64,
    pub t2_factor: f64,
    pub disk_radius: usize,
    pub keep_ratio: f64,
    pub z_bin_mm: f64,
    pub probe_radius: usize,
    pub scales: Vec<usize>,
    pub lsk_h: f64,
    pub cov_window: usize,
    pub reg_lambda: f64,
    pub k1: usize,
    pub k2: usize,
    pub kmeans_iters: usize,
    pub kmeans_tol: f64,
    pub kmeans_restarts: usize,
    /// Training descriptors per codebook beyond this are subsampled.
    pub kmeans_max_points: usize,
    pub encoding: Encoding,
    pub stp_levels: Vec<StpLevel>,
    pub gamma: f64,
    pub c: f64,
    pub svm_epochs: usize,
    pub seed: u64,
    pub folds: usize,
    pub grid_k1: Vec<usize>,
    pub grid_k2: Vec<usize>,
    pub grid_scales: Vec<Vec<usize>>,
    pub grid_c: Vec<f64>,
    /// Percentages.
    pub pepper_levels: Vec<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            lambda: 3.0,
            epsilon: 50.0,
            t1: 0.8,
            t2_factor: 0.01,
            disk_radius: 5,
            keep_ratio: 0.8,
            z_bin_mm: 10.0,
            probe_radius: 3,
            scales: vec![7],
            lsk_h: 1.0,
            cov_window: 1,
            reg_lambda: 1e-3,
            k1: 2000,
            k2: 1000,
            kmeans_iters: 100,
            kmeans_tol: 1e-4,
            kmeans_restarts: 1,
            kmeans_max_points: 100_000,
            encoding: Encoding::Fused,
            stp_levels: vec![StpLevel::new(1, 1, 1), StpLevel::new(2, 2, 1), StpLevel::new(3, 3, 2)],
            gamma: 0.8,
            c: 1.0,
            svm_epochs: 200,
            seed: 0,
            folds: 5,
            grid_k1: vec![1000, 2000, 3000, 4000],
            grid_k2: vec![500, 1000, 1500, 2000],
            grid_scales: vec![vec![3], vec![5], vec![7], vec![9], vec![11]],
            grid_c: vec![1.0],
            pepper_levels: vec![0.0, 1.0, 2.5, 5.0, 7.5, 10.0, 20.0],
        }
    }
}

fn join<T: ToString>(v: &[T], sep: &str) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(sep)
}

fn parse_list<T: FromStr>(s: &str, sep: char) -> Result<Vec<T>, String> {
    s.split(sep)
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| p.parse().map_err(|_| format!("bad list entry {p:?}")))
        .collect()
}

fn parse_levels(s: &str) -> Result<Vec<StpLevel>, String> {
    s.split(',')
        .map(str::trim)
        .filter(|p| !p.is_empty())
        .map(|p| {
            let n: Vec<usize> = parse_list(p, 'x')?;
            match n[..] {
                [nt, ny, nx] if nt > 0 && ny > 0 && nx > 0 => Ok(StpLevel::new(nt, ny, nx)),
                _ => Err(format!("bad pyramid level {p:?}, expected TxYxX")),
            }
        })
        .collect()
}

fn scalar<T: FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("bad value {v:?}"))
}

impl PipelineConfig {
    /// Reads `key = value` lines; `#` starts a comment. Unlisted keys keep
    /// their defaults.
    pub fn parse(text: &str) -> Result<Self, PipelineError> {
        let mut cfg = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| PipelineError::Config { line: i + 1, msg };
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| err("expected key = value".into()))?;
            cfg.set(key.trim(), value.trim()).map_err(err)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, PipelineError> {
        let text = std::fs::read_to_string(path).map_err(|source| PipelineError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "lambda" => self.lambda = scalar(v)?,
            "epsilon" => self.epsilon = scalar(v)?,
            "t1" => self.t1 = scalar(v)?,
            "t2_factor" => self.t2_factor = scalar(v)?,
            "disk_radius" => self.disk_radius = scalar(v)?,
            "keep_ratio" => self.keep_ratio = scalar(v)?,
            "z_bin_mm" => self.z_bin_mm = scalar(v)?,
            "probe_radius" => self.probe_radius = scalar(v)?,
            "scales" => self.scales = parse_list(v, ',')?,
            "lsk_h" => self.lsk_h = scalar(v)?,
            "cov_window" => self.cov_window = scalar(v)?,
            "reg_lambda" => self.reg_lambda = scalar(v)?,
            "k1" => self.k1 = scalar(v)?,
            "k2" => self.k2 = scalar(v)?,
            "kmeans_iters" => self.kmeans_iters = scalar(v)?,
            "kmeans_tol" => self.kmeans_tol = scalar(v)?,
            "kmeans_restarts" => self.kmeans_restarts = scalar(v)?,
            "kmeans_max_points" => self.kmeans_max_points = scalar(v)?,
            "encoding" => self.encoding = v.parse()?,
            "stp_levels" => self.stp_levels = parse_levels(v)?,
            "gamma" => self.gamma = scalar(v)?,
            "C" | "c" => self.c = scalar(v)?,
            "svm_epochs" => self.svm_epochs = scalar(v)?,
            "seed" => self.seed = scalar(v)?,
            "folds" => self.folds = scalar(v)?,
            "grid_k1" => self.grid_k1 = parse_list(v, ',')?,
            "grid_k2" => self.grid_k2 = parse_list(v, ',')?,
            "grid_scales" => {
                self.grid_scales = v
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|s| parse_list(s, ','))
                    .collect::<Result<_, _>>()?
            }
            "grid_c" => self.grid_c = parse_list(v, ',')?,
            "pepper_levels" => self.pepper_levels = parse_list(v, ',')?,
            _ => return Err(format!("unknown key {key:?}")),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let bad = |m: &str| Err(PipelineError::InvalidConfig(m.to_string()));
        if !(self.lambda >= 1.0) {
            return bad("lambda must be at least 1");
        }
        if !(self.epsilon >= 0.0) {
            return bad("epsilon must be nonnegative");
        }
        if !(0.0..=1.0).contains(&self.t1) || !(0.0..=1.0).contains(&self.t2_factor) {
            return bad("t1 and t2_factor must lie in [0, 1]");
        }
        if !(0.0..=1.0).contains(&self.keep_ratio) {
            return bad("keep_ratio must lie in [0, 1]");
        }
        if !(self.z_bin_mm > 0.0) {
            return bad("z_bin_mm must be positive");
        }
        if self.scales.is_empty() || self.scales.contains(&0) {
            return bad("scales must be a nonempty list of positive radii");
        }
        if !(self.lsk_h > 0.0 && self.reg_lambda > 0.0) {
            return bad("lsk_h and reg_lambda must be positive");
        }
        if self.k1 == 0 || self.k2 == 0 {
            return bad("k1 and k2 must be positive");
        }
        if self.stp_levels.is_empty() {
            return bad("stp_levels must not be empty");
        }
        if !(self.gamma > 0.0 && self.c > 0.0) {
            return bad("gamma and C must be positive");
        }
        if self.folds < 2 {
            return bad("folds must be at least 2");
        }
        if self.grid_scales.iter().any(|s| s.is_empty() || s.contains(&0)) {
            return bad("grid_scales entries must be nonempty lists of positive radii");
        }
        if self.pepper_levels.iter().any(|p| !(0.0..=100.0).contains(p)) {
            return bad("pepper_levels are percentages in [0, 100]");
        }
        Ok(())
    }

    /// Every key in canonical form; parsing the result gives back `self`.
    pub fn to_text(&self) -> String {
        let levels = self
            .stp_levels
            .iter()
            .map(|l| format!("{}x{}x{}", l.nt, l.ny, l.nx))
            .collect::<Vec<_>>()
            .join(",");
        let grid_scales = self
            .grid_scales
            .iter()
            .map(|s| join(s, ","))
            .collect::<Vec<_>>()
            .join(";");
        let mut out = String::new();
        for (k, v) in [
            ("lambda", self.lambda.to_string()),
            ("epsilon", self.epsilon.to_string()),
            ("t1", self.t1.to_string()),
            ("t2_factor", self.t2_factor.to_string()),
            ("disk_radius", self.disk_radius.to_string()),
            ("keep_ratio", self.keep_ratio.to_string()),
            ("z_bin_mm", self.z_bin_mm.to_string()),
            ("probe_radius", self.probe_radius.to_string()),
            ("scales", join(&self.scales, ",")),
            ("lsk_h", self.lsk_h.to_string()),
            ("cov_window", self.cov_window.to_string()),
            ("reg_lambda", self.reg_lambda.to_string()),
            ("k1", self.k1.to_string()),
            ("k2", self.k2.to_string()),
            ("kmeans_iters", self.kmeans_iters.to_string()),
            ("kmeans_tol", self.kmeans_tol.to_string()),
            ("kmeans_restarts", self.kmeans_restarts.to_string()),
            ("kmeans_max_points", self.kmeans_max_points.to_string()),
            ("encoding", self.encoding.name().to_string()),
            ("stp_levels", levels),
            ("gamma", self.gamma.to_string()),
            ("C", self.c.to_string()),
            ("svm_epochs", self.svm_epochs.to_string()),
            ("seed", self.seed.to_string()),
            ("folds", self.folds.to_string()),
            ("grid_k1", join(&self.grid_k1, ",")),
            ("grid_k2", join(&self.grid_k2, ",")),
            ("grid_scales", grid_scales),
            ("grid_c", join(&self.grid_c, ",")),
            ("pepper_levels", join(&self.pepper_levels, ",")),
        ] {
            let _ = writeln!(out, "{k} = {v}");
        }
        out
    }

    /// `(key, value)` pairs of [`Self::to_text`].
    pub fn pairs(&self) -> Vec<(String, String)> {
        self.to_text()
            .lines()
            .filter_map(|l| l.split_once(" = "))
            .map(|(k, v)| (k.to_string(), v.to_string()))
            .collect()
    }

    pub fn stip_params(&self) -> StipParams {
        StipParams {
            lambda: self.lambda,
            epsilon: self.epsilon,
            t1: self.t1,
            t2_factor: self.t2_factor,
            disk_radius: self.disk_radius,
            keep_ratio: self.keep_ratio,
            z_bin_mm: self.z_bin_mm,
        }
    }

    pub fn descriptor_params(&self) -> DescriptorParams {
        DescriptorParams {
            scales: self.scales.clone(),
            probe_radius: self.probe_radius,
            h: self.lsk_h,
            cov_window: self.cov_window,
            reg_lambda: self.reg_lambda,
        }
    }

    pub fn kmeans_params(&self, k: usize, seed: u64) -> KMeansParams {
        KMeansParams {
            k,
            seed,
            max_iters: self.kmeans_iters,
            tol: self.kmeans_tol,
            restarts: self.kmeans_restarts,
        }
    }

    pub fn svm_params(&self) -> SvmParams {
        SvmParams {
            c: self.c,
            kernel: KernelParams { gamma: self.gamma },
            seed: self.seed,
            max_epochs: self.svm_epochs,
            gap_tol: 1e-3,
        }
    }

    /// Hex digest of the settings that determine the descriptors at one
    /// scale, given the reference depth.
    pub fn descriptor_key(&self, scale: usize, z_bar0: f64) -> String {
        let text = format!(
            "lambda={} epsilon={} t1={} t2={} disk={} keep={} zbin={} probe={} h={} cov={} reg={} r={} z0={:016x}",
            self.lambda,
            self.epsilon,
            self.t1,
            self.t2_factor,
            self.disk_radius,
            self.keep_ratio,
            self.z_bin_mm,
            self.probe_radius,
            self.lsk_h,
            self.cov_window,
            self.reg_lambda,
            scale,
            z_bar0.to_bits()
        );
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }

    /// Hex digest of the settings that determine the detected points.
    pub fn detection_key(&self) -> String {
        let text = format!(
            "lambda={} epsilon={} t1={} t2={} disk={} keep={} zbin={} probe={}",
            self.lambda,
            self.epsilon,
            self.t1,
            self.t2_factor,
            self.disk_radius,
            self.keep_ratio,
            self.z_bin_mm,
            self.probe_radius
        );
        hex::encode(&Sha256::digest(text.as_bytes())[..8])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_the_reference_values() {
        let c = PipelineConfig::default();
        assert_eq!((c.lambda, c.epsilon, c.t1, c.t2_factor), (3.0, 50.0, 0.8, 0.01));
        assert_eq!((c.disk_radius, c.probe_radius, c.gamma), (5, 3, 0.8));
        assert_eq!((c.k1, c.k2, c.scales.clone()), (2000, 1000, vec![7]));
    }

    #[test]
    fn parse_and_round_trip() {
        let text = "# small run\nk1 = 64\nk2=32 # shape words\nscales = 3, 5\n\nencoding = stp\nstp_levels = 1x1x1,1x2x2\ngrid_scales = 3;3,5\nC = 10\n";
        let c = PipelineConfig::parse(text).unwrap();
        assert_eq!((c.k1, c.k2, c.c), (64, 32, 10.0));
        assert_eq!(c.scales, vec![3, 5]);
        assert_eq!(c.encoding, Encoding::Stp);
        assert_eq!(c.stp_levels[1], StpLevel::new(1, 2, 2));
        assert_eq!(c.grid_scales, vec![vec![3], vec![3, 5]]);
        assert_eq!(PipelineConfig::parse(&c.to_text()).unwrap(), c);
    }

    #[test]
    fn errors_name_the_line() {
        let e = PipelineConfig::parse("k1 = 5\nbogus = 1\n").unwrap_err();
        assert!(matches!(e, PipelineError::Config { line: 2, .. }), "{e}");
        assert!(PipelineConfig::parse("k1 = many").is_err());
        assert!(PipelineConfig::parse("just words").is_err());
        assert!(matches!(PipelineConfig::parse("t1 = 2"), Err(PipelineError::InvalidConfig(_))));
        assert!(PipelineConfig::parse("scales = ").is_err());
    }

    #[test]
    fn keys_track_relevant_settings() {
        let a = PipelineConfig::default();
        let mut b = a.clone();
        b.k1 = 5;
        assert_eq!(a.descriptor_key(7, 2000.0), b.descriptor_key(7, 2000.0));
        b.lambda = 4.0;
        assert_ne!(a.descriptor_key(7, 2000.0), b.descriptor_key(7, 2000.0));
        assert_ne!(a.descriptor_key(7, 2000.0), a.descriptor_key(5, 2000.0));
        assert_ne!(a.detection_key(), b.detection_key());
    }
}
