//! Per-sequence interest points and the on-disk descriptor cache.

use std::path::{Path, PathBuf};
use std::sync::Mutex;

use sha2::{Digest, Sha256};

use super::{io_err, seq_err, PipelineConfig, PipelineError, SequenceName, Stage};
use crate::depthio::{encode_dseq, DepthSequence};
use crate::descriptor::{
    m3dlsk, probe_depths, read_descriptors, stv, write_descriptors, DescriptorMatrix, DescriptorParams,
};
use crate::encode::VolumeExtent;
use crate::stip::{detect_stips, Stip, StipKind};

/// Interest points of one sequence, ready for description.
#[derive(Debug, Clone)]
pub struct Detected {
    pub name: SequenceName,
    /// Cache file stem: sequence name plus a digest of the depth data.
    pub id: String,
    pub extent: VolumeExtent,
    pub motion: Vec<Stip>,
    pub shape: Vec<Stip>,
    /// The sequence with background pixels zeroed.
    pub masked: DepthSequence,
    /// Probe depth of each motion point, `None` for points that get no
    /// descriptor.
    pub z_bars: Vec<Option<f64>>,
}

impl Detected {
    pub fn label(&self) -> u32 {
        self.name.action.max(0) as u32
    }

    pub fn subject(&self) -> u32 {
        self.name.subject.max(0) as u32
    }
}

pub fn detect(name: SequenceName, seq: &DepthSequence, cfg: &PipelineConfig) -> Result<Detected, PipelineError> {
    let stem = name.file_stem();
    let det = detect_stips(seq, &cfg.stip_params()).map_err(seq_err(Stage::Detect, &stem))?;
    let masked = det.masked_sequence(seq);
    let motion = det.motion_stips();
    let z_bars = probe_depths(&masked, &motion, cfg.probe_radius);
    let digest = Sha256::digest(encode_dseq(seq));
    Ok(Detected {
        name,
        id: format!("{stem}-{}", hex::encode(&digest[..6])),
        extent: VolumeExtent {
            frames: seq.len(),
            height: seq.height(),
            width: seq.width(),
        },
        motion,
        shape: det.shape_stips(),
        masked,
        z_bars,
    })
}

/// Mean probe depth over the motion points of `train`, falling back to the
/// shape points when no motion point has depth.
pub fn reference_depth(train: &[Detected], probe_radius: usize) -> Option<f64> {
    let mean = |v: Vec<f64>| (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64);
    mean(train.iter().flat_map(|d| d.z_bars.iter().flatten().copied()).collect()).or_else(|| {
        mean(
            train
                .iter()
                .flat_map(|d| probe_depths(&d.masked, &d.shape, probe_radius))
                .flatten()
                .collect(),
        )
    })
}

fn points_matrix(points: &[Stip]) -> DescriptorMatrix {
    let rows: Vec<[f64; 4]> = points.iter().map(Stip::as_f64).collect();
    DescriptorMatrix::from_rows(4, rows.iter().map(|r| &r[..]))
}

/// Points stored by [`FeatureCache`] as 4-column matrices.
pub fn matrix_points(m: &DescriptorMatrix, kind: StipKind) -> Vec<Stip> {
    m.rows()
        .take(m.count())
        .map(|r| Stip {
            x: r[0] as usize,
            y: r[1] as usize,
            z: r[2] as u32,
            f: r[3] as usize,
            kind,
        })
        .collect()
}

/// Descriptor files under `<root>/<settings digest>/`, with a log of every
/// read tagged by the stage that asked for it.
#[derive(Debug)]
pub struct FeatureCache {
    root: PathBuf,
    reads: Mutex<Vec<(String, String)>>,
}

impl FeatureCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self {
            root: root.into(),
            reads: Mutex::new(Vec::new()),
        }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn motion_path(&self, cfg: &PipelineConfig, scale: usize, z_bar0: f64, id: &str) -> PathBuf {
        self.root.join(cfg.descriptor_key(scale, z_bar0)).join(format!("{id}.r{scale}.desc"))
    }

    fn motion_points_path(&self, cfg: &PipelineConfig, z_bar0: f64, id: &str) -> PathBuf {
        self.root
            .join(cfg.descriptor_key(0, z_bar0))
            .join(format!("{id}.points.desc"))
    }

    fn shape_path(&self, cfg: &PipelineConfig, id: &str) -> PathBuf {
        self.root.join(cfg.detection_key()).join(format!("{id}.stv.desc"))
    }

    fn store(path: &Path, m: &DescriptorMatrix, name: &str) -> Result<(), PipelineError> {
        let dir = path.parent().expect("cache files live in a directory");
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
        let tmp = path.with_extension("tmp");
        write_descriptors(&tmp, m).map_err(seq_err(Stage::Describe, name))?;
        std::fs::rename(&tmp, path).map_err(io_err(path))
    }

    /// Computes and stores whatever descriptors of `det` are not cached yet.
    pub fn describe(&self, det: &Detected, cfg: &PipelineConfig, z_bar0: f64) -> Result<(), PipelineError> {
        let name = det.name.file_stem();
        let points = self.motion_points_path(cfg, z_bar0, &det.id);
        if !points.exists() {
            let kept: Vec<Stip> = det
                .motion
                .iter()
                .zip(&det.z_bars)
                .filter(|(_, z)| z.is_some())
                .map(|(s, _)| *s)
                .collect();
            Self::store(&points, &points_matrix(&kept), &name)?;
        }
        for &r in &cfg.scales {
            let path = self.motion_path(cfg, r, z_bar0, &det.id);
            if path.exists() {
                continue;
            }
            let params = DescriptorParams {
                scales: vec![r],
                ..cfg.descriptor_params()
            };
            let out = m3dlsk(&det.masked, &det.motion, &params, z_bar0).map_err(seq_err(Stage::Describe, &name))?;
            let m = DescriptorMatrix::from_rows(
                DescriptorParams::dim(r),
                out.per_scale[0].iter().map(|d| d.values.as_slice()),
            );
            Self::store(&path, &m, &name)?;
        }
        let shape = self.shape_path(cfg, &det.id);
        if !shape.exists() {
            let m = if det.shape.is_empty() {
                DescriptorMatrix::new(4)
            } else {
                let d = stv(&det.shape).map_err(seq_err(Stage::Describe, &name))?;
                DescriptorMatrix::from_rows(4, d.iter().map(|v| &v.values[..]))
            };
            Self::store(&shape, &m, &name)?;
        }
        Ok(())
    }

    fn read(&self, stage: Stage, path: &Path, name: &str) -> Result<DescriptorMatrix, PipelineError> {
        let rel = path.strip_prefix(&self.root).unwrap_or(path);
        self.reads
            .lock()
            .expect("read log poisoned")
            .push((stage.to_string(), rel.display().to_string()));
        read_descriptors(path).map_err(seq_err(stage, name))
    }

    pub fn motion(
        &self,
        stage: Stage,
        det: &Detected,
        cfg: &PipelineConfig,
        scale: usize,
        z_bar0: f64,
    ) -> Result<DescriptorMatrix, PipelineError> {
        self.read(stage, &self.motion_path(cfg, scale, z_bar0, &det.id), &det.name.file_stem())
    }

    pub fn motion_points(
        &self,
        stage: Stage,
        det: &Detected,
        cfg: &PipelineConfig,
        z_bar0: f64,
    ) -> Result<Vec<Stip>, PipelineError> {
        let m = self.read(stage, &self.motion_points_path(cfg, z_bar0, &det.id), &det.name.file_stem())?;
        Ok(matrix_points(&m, StipKind::Motion))
    }

    pub fn shape(&self, stage: Stage, det: &Detected, cfg: &PipelineConfig) -> Result<DescriptorMatrix, PipelineError> {
        self.read(stage, &self.shape_path(cfg, &det.id), &det.name.file_stem())
    }

    /// `(stage, path relative to the cache root)` of every read so far, sorted.
    pub fn reads(&self) -> Vec<(String, String)> {
        let mut v = self.reads.lock().expect("read log poisoned").clone();
        v.sort();
        v
    }
}
