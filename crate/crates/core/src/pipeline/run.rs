//! Staged runs: train/test evaluation, robustness sweeps and grid search.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::features::{detect, reference_depth};
use super::{
    io_err, list_dataset, seq_err, stage_err, DatasetEntry, Detected, Encoding, FeatureCache, PipelineConfig,
    PipelineError, SplitSpec, Stage, StageError,
};
use crate::classify::{evaluate, grid_search, train_svm, write_model, Evaluation, Fold, SvmModel, TrainedModel};
use crate::depthio::{add_pepper_noise, apply_occlusion, load_sequence, DepthSequence, OcclusionType};
use crate::descriptor::{stv_origin, DescriptorMatrix};
use crate::encode::{fuse, kmeans, stp_encode, stw_encode, vq_histogram, Codebook, Representation, Segment};

struct Codebooks {
    motion: Vec<Codebook>,
    shape: Option<Codebook>,
}

impl Codebooks {
    fn all(&self) -> Vec<Codebook> {
        self.motion.iter().chain(&self.shape).cloned().collect()
    }
}

fn uses_motion(e: Encoding) -> bool {
    e != Encoding::Shape
}

fn uses_shape(e: Encoding) -> bool {
    matches!(e, Encoding::Fused | Encoding::Shape)
}

fn load_all(entries: &[DatasetEntry]) -> Result<Vec<DepthSequence>, PipelineError> {
    entries
        .par_iter()
        .map(|e| {
            let stem = e.name.file_stem();
            let mut seq = load_sequence(&e.path).map_err(seq_err(Stage::Load, &stem))?;
            seq.subject_id = e.name.subject;
            seq.action_label = e.name.action;
            Ok(seq)
        })
        .collect()
}

fn detect_all(entries: &[DatasetEntry], seqs: &[DepthSequence], cfg: &PipelineConfig) -> Result<Vec<Detected>, PipelineError> {
    entries
        .par_iter()
        .zip(seqs)
        .map(|(e, s)| detect(e.name, s, cfg))
        .collect()
}

fn describe_all(cache: &FeatureCache, dets: &[&Detected], cfg: &PipelineConfig, z_bar0: f64) -> Result<(), PipelineError> {
    dets.par_iter().try_for_each(|d| cache.describe(d, cfg, z_bar0))
}

fn stack(mats: &[DescriptorMatrix], dim: usize) -> DescriptorMatrix {
    let mut out = DescriptorMatrix::new(dim);
    for m in mats {
        out.data.extend_from_slice(&m.data);
    }
    out
}

fn subsample(m: DescriptorMatrix, max: usize, seed: u64) -> DescriptorMatrix {
    if m.count() <= max || max == 0 {
        return m;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, m.count(), max).into_vec();
    idx.sort_unstable();
    let mut out = DescriptorMatrix::new(m.dim);
    for i in idx {
        out.data.extend_from_slice(m.row(i));
    }
    out
}

/// Fits codebooks from the descriptor files of `train` only.
fn fit_codebooks(
    cache: &FeatureCache,
    train: &[&Detected],
    cfg: &PipelineConfig,
    z_bar0: f64,
) -> Result<Codebooks, PipelineError> {
    let mut motion = Vec::new();
    if uses_motion(cfg.encoding) {
        for (l, &r) in cfg.scales.iter().enumerate() {
            let mats = train
                .iter()
                .map(|d| cache.motion(Stage::Fit, d, cfg, r, z_bar0))
                .collect::<Result<Vec<_>, _>>()?;
            let seed = cfg.seed.wrapping_add(101 * (l as u64 + 1));
            let data = subsample(stack(&mats, (2 * r + 1).pow(3)), cfg.kmeans_max_points, seed);
            let mut cb = kmeans(&data, &cfg.kmeans_params(cfg.k1, seed)).map_err(|e| PipelineError::Stage {
                stage: Stage::Fit,
                source: StageError::Other(format!("motion codebook at scale {r}: {e}")),
            })?;
            cb.label = format!("motion_scale_{}", l + 1);
            motion.push(cb);
        }
    }
    let shape = if uses_shape(cfg.encoding) {
        let mats = train
            .iter()
            .map(|d| cache.shape(Stage::Fit, d, cfg))
            .collect::<Result<Vec<_>, _>>()?;
        let seed = cfg.seed.wrapping_add(7);
        let data = subsample(stack(&mats, 4), cfg.kmeans_max_points, seed);
        let mut cb = kmeans(&data, &cfg.kmeans_params(cfg.k2, seed)).map_err(|e| PipelineError::Stage {
            stage: Stage::Fit,
            source: StageError::Other(format!("shape codebook: {e}")),
        })?;
        cb.label = "shape".into();
        Some(cb)
    } else {
        None
    };
    Ok(Codebooks { motion, shape })
}

fn encode_one(
    cache: &FeatureCache,
    det: &Detected,
    books: &Codebooks,
    cfg: &PipelineConfig,
    z_bar0: f64,
    stage: Stage,
) -> Result<Representation, PipelineError> {
    let name = det.name.file_stem();
    let err = |e| seq_err::<crate::encode::EncodeError>(Stage::Encode, &name)(e);
    let mut motion = Vec::new();
    for &r in cfg.scales.iter().take(books.motion.len()) {
        motion.push(cache.motion(stage, det, cfg, r, z_bar0)?);
    }
    let points = || cache.motion_points(stage, det, cfg, z_bar0);
    let mut rep = Representation::default();
    match cfg.encoding {
        Encoding::Fused | Encoding::Motion | Encoding::Shape => {
            let hists = motion
                .iter()
                .zip(&books.motion)
                .map(|(m, cb)| vq_histogram(m, cb))
                .collect::<Result<Vec<_>, _>>()
                .map_err(err)?;
            let shape_hist = match &books.shape {
                Some(cb) => vq_histogram(&cache.shape(stage, det, cfg)?, cb).map_err(err)?,
                None => Vec::new(),
            };
            let fused = fuse(&hists, &shape_hist).map_err(err)?;
            for s in &fused.layout {
                if s.len > 0 {
                    rep.push_segment(s.name.clone(), &fused.values[s.offset..s.offset + s.len]);
                }
            }
        }
        Encoding::Stp => {
            let pts = points()?;
            for (l, (m, cb)) in motion.iter().zip(&books.motion).enumerate() {
                let r = stp_encode(&pts, m, cb, &cfg.stp_levels, det.extent).map_err(err)?;
                for s in &r.layout {
                    rep.push_segment(format!("s{}_{}", l + 1, s.name), &r.values[s.offset..s.offset + s.len]);
                }
            }
        }
        Encoding::Stw => {
            let pts = points()?;
            let origin = stv_origin(&det.shape).or_else(|| stv_origin(&pts));
            for (l, (m, cb)) in motion.iter().zip(&books.motion).enumerate() {
                let h = match origin {
                    Some(o) if !pts.is_empty() => stw_encode(&pts, m, cb, o).map_err(err)?,
                    _ => vec![0.0; cb.k],
                };
                rep.push_segment(format!("stw_scale_{}", l + 1), &h);
            }
        }
    }
    Ok(rep)
}

fn encode_all(
    cache: &FeatureCache,
    dets: &[&Detected],
    books: &Codebooks,
    cfg: &PipelineConfig,
    z_bar0: f64,
    stage: Stage,
) -> Result<Vec<Representation>, PipelineError> {
    dets.par_iter()
        .map(|d| encode_one(cache, d, books, cfg, z_bar0, stage))
        .collect()
}

fn train_on(reps: &[Representation], dets: &[&Detected], cfg: &PipelineConfig) -> Result<SvmModel, PipelineError> {
    let rows: Vec<&[f64]> = reps.iter().map(|r| r.values.as_slice()).collect();
    let labels: Vec<u32> = dets.iter().map(|d| d.label()).collect();
    train_svm(&rows, &labels, &cfg.svm_params()).map_err(stage_err(Stage::Train))
}

fn evaluate_on(svm: &SvmModel, reps: &[Representation], dets: &[&Detected]) -> Result<Evaluation, PipelineError> {
    let test: Vec<(&[f64], u32)> = reps.iter().zip(dets).map(|(r, d)| (r.values.as_slice(), d.label())).collect();
    evaluate(svm, &test).map_err(stage_err(Stage::Evaluate))
}

fn write_file(path: &Path, text: &str) -> Result<(), PipelineError> {
    std::fs::write(path, text).map_err(io_err(path))
}

fn representations_csv(dets: &[&Detected], reps: &[Representation]) -> String {
    let mut out = String::from("subject_id,label");
    if let Some(r) = reps.first() {
        for i in 0..r.len() {
            let _ = write!(out, ",h{i}");
        }
    }
    out.push('\n');
    for (d, r) in dets.iter().zip(reps) {
        let _ = write!(out, "{},{}", d.name.subject, d.name.action);
        for v in &r.values {
            let _ = write!(out, ",{v}");
        }
        out.push('\n');
    }
    out
}

fn confusion_csv(ev: &Evaluation) -> String {
    let mut out = String::from("true\\predicted");
    for c in &ev.classes {
        let _ = write!(out, ",{c}");
    }
    out.push('\n');
    for (c, row) in ev.classes.iter().zip(&ev.confusion) {
        let _ = write!(out, "{c}");
        for n in row {
            let _ = write!(out, ",{n}");
        }
        out.push('\n');
    }
    out
}

fn predictions_csv(dets: &[&Detected], ev: &Evaluation) -> String {
    let mut out = String::from("sequence,label,predicted\n");
    for (d, p) in dets.iter().zip(&ev.predictions) {
        let _ = writeln!(out, "{},{},{}", d.name.file_stem(), d.label(), p);
    }
    out
}

fn subjects_text(s: &BTreeSet<i32>) -> String {
    s.iter().map(i32::to_string).collect::<Vec<_>>().join(",")
}

fn manifest(cfg: &PipelineConfig, split: &SplitSpec, train: &[&Detected], test: &[&Detected], z_bar0: f64) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# depthstip {}", env!("CARGO_PKG_VERSION"));
    let _ = writeln!(out, "train_subjects = {}", subjects_text(&split.train_subjects));
    let _ = writeln!(out, "test_subjects = {}", subjects_text(&split.test_subjects));
    let _ = writeln!(out, "z_bar0 = {z_bar0}");
    out.push_str("\n[config]\n");
    out.push_str(&cfg.to_text());
    out.push_str("\n[train]\n");
    for d in train {
        let _ = writeln!(out, "{}", d.id);
    }
    out.push_str("\n[test]\n");
    for d in test {
        let _ = writeln!(out, "{}", d.id);
    }
    out
}

/// Everything learned from the training split.
struct Baseline {
    cache: FeatureCache,
    z_bar0: f64,
    books: Codebooks,
    model: TrainedModel,
    test_entries: Vec<DatasetEntry>,
    test_seqs: Vec<DepthSequence>,
    evaluation: Evaluation,
}

#[derive(Debug, Clone)]
pub struct PipelineReport {
    pub accuracy: f64,
    pub evaluation: Evaluation,
    pub z_bar0: f64,
    pub train_sequences: usize,
    pub test_sequences: usize,
    pub representation_len: usize,
    /// `(stage, cache-relative path)` of every descriptor file read.
    pub cache_reads: Vec<(String, String)>,
}

fn baseline(
    cfg: &PipelineConfig,
    dataset: &Path,
    split: &SplitSpec,
    out: &Path,
) -> Result<(Baseline, PipelineReport), PipelineError> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let entries = list_dataset(dataset)?;
    let (train_e, test_e) = split.apply(&entries)?;
    let train_seqs = load_all(&train_e)?;
    let test_seqs = load_all(&test_e)?;
    let train_dets = detect_all(&train_e, &train_seqs, cfg)?;
    let test_dets = detect_all(&test_e, &test_seqs, cfg)?;
    let train: Vec<&Detected> = train_dets.iter().collect();
    let test: Vec<&Detected> = test_dets.iter().collect();

    let z_bar0 = reference_depth(&train_dets, cfg.probe_radius).ok_or_else(|| PipelineError::Stage {
        stage: Stage::Describe,
        source: StageError::Other("no foreground interest points in the training split".into()),
    })?;
    let cache = FeatureCache::new(out.join("cache"));
    describe_all(&cache, &train, cfg, z_bar0)?;
    describe_all(&cache, &test, cfg, z_bar0)?;

    let books = fit_codebooks(&cache, &train, cfg, z_bar0)?;
    let train_reps = encode_all(&cache, &train, &books, cfg, z_bar0, Stage::Encode)?;
    let test_reps = encode_all(&cache, &test, &books, cfg, z_bar0, Stage::Encode)?;
    let svm = train_on(&train_reps, &train, cfg)?;
    let evaluation = evaluate_on(&svm, &test_reps, &test)?;

    let layout: Vec<Segment> = train_reps[0].layout.clone();
    let model = TrainedModel {
        svm,
        z_bar0,
        layout,
        codebooks: books.all(),
        params: cfg.pairs(),
    };
    model.validate().map_err(stage_err(Stage::Train))?;
    write_model(&out.join("model.modl"), &model).map_err(stage_err(Stage::Train))?;
    write_file(&out.join("representations_train.csv"), &representations_csv(&train, &train_reps))?;
    write_file(&out.join("representations_test.csv"), &representations_csv(&test, &test_reps))?;
    write_file(&out.join("confusion.csv"), &confusion_csv(&evaluation))?;
    write_file(&out.join("predictions.csv"), &predictions_csv(&test, &evaluation))?;
    write_file(&out.join("manifest.txt"), &manifest(cfg, split, &train, &test, z_bar0))?;
    let reads = cache.reads();
    let log: String = reads.iter().map(|(s, p)| format!("{s} {p}\n")).collect();
    write_file(&out.join("cache_reads.txt"), &log)?;

    let report = PipelineReport {
        accuracy: evaluation.accuracy,
        evaluation: evaluation.clone(),
        z_bar0,
        train_sequences: train.len(),
        test_sequences: test.len(),
        representation_len: train_reps[0].len(),
        cache_reads: reads,
    };
    Ok((
        Baseline {
            cache,
            z_bar0,
            books,
            model,
            test_entries: test_e,
            test_seqs,
            evaluation,
        },
        report,
    ))
}

/// Trains on the train subjects of `split`, evaluates on the test subjects
/// and writes the model, representations, confusion matrix and manifest
/// into `out`.
pub fn run_pipeline(
    cfg: &PipelineConfig,
    dataset: &Path,
    split: &SplitSpec,
    out: &Path,
) -> Result<PipelineReport, PipelineError> {
    baseline(cfg, dataset, split, out).map(|(_, r)| r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RobustnessMode {
    Pepper,
    Occlusion,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RobustnessReport {
    pub baseline: f64,
    /// `(level, accuracy)`: a percentage for pepper noise, the occlusion
    /// type index for occlusions.
    pub rows: Vec<(String, f64)>,
}

/// Trains the baseline, then re-evaluates it with every test sequence
/// perturbed at each level. Training data is never perturbed.
pub fn run_robustness(
    cfg: &PipelineConfig,
    dataset: &Path,
    split: &SplitSpec,
    out: &Path,
    mode: RobustnessMode,
) -> Result<RobustnessReport, PipelineError> {
    let (base, _) = baseline(cfg, dataset, split, out)?;
    let levels: Vec<String> = match mode {
        RobustnessMode::Pepper => cfg.pepper_levels.iter().map(|p| p.to_string()).collect(),
        RobustnessMode::Occlusion => OcclusionType::all().map(|t| t.index().to_string()).collect(),
    };
    let mut rows = Vec::new();
    for (li, level) in levels.iter().enumerate() {
        let perturbed = base
            .test_entries
            .par_iter()
            .zip(&base.test_seqs)
            .enumerate()
            .map(|(si, (e, seq))| {
                let stem = e.name.file_stem();
                let seq = match mode {
                    RobustnessMode::Pepper => {
                        let seed = cfg.seed.wrapping_mul(1_000_003).wrapping_add((li * 100_000 + si) as u64);
                        add_pepper_noise(seq, cfg.pepper_levels[li] / 100.0, seed)
                            .map_err(seq_err(Stage::Perturb, &stem))?
                    }
                    RobustnessMode::Occlusion => {
                        let t = OcclusionType::new(li as u8 + 1).map_err(seq_err(Stage::Perturb, &stem))?;
                        apply_occlusion(seq, t)
                    }
                };
                detect(e.name, &seq, cfg)
            })
            .collect::<Result<Vec<_>, _>>()?;
        let dets: Vec<&Detected> = perturbed.iter().collect();
        describe_all(&base.cache, &dets, cfg, base.z_bar0)?;
        let reps = encode_all(&base.cache, &dets, &base.books, cfg, base.z_bar0, Stage::Perturb)?;
        let ev = evaluate_on(&base.model.svm, &reps, &dets)?;
        rows.push((level.clone(), ev.accuracy));
    }
    let header = match mode {
        RobustnessMode::Pepper => "pepper_percent",
        RobustnessMode::Occlusion => "occlusion",
    };
    let mut csv = format!("{header},accuracy\n");
    for (l, a) in &rows {
        let _ = writeln!(csv, "{l},{a}");
    }
    let file = match mode {
        RobustnessMode::Pepper => "robustness_pepper.csv",
        RobustnessMode::Occlusion => "robustness_occlusion.csv",
    };
    write_file(&out.join(file), &csv)?;
    Ok(RobustnessReport {
        baseline: base.evaluation.accuracy,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridReport {
    /// `(scales, k1, k2, C)` of every grid point, in search order.
    pub points: Vec<(Vec<usize>, usize, usize, f64)>,
    pub mean_accuracy: Vec<f64>,
    pub best: PipelineConfig,
}

/// Cross-validates every combination of `grid_scales`, `grid_k1`, `grid_k2`
/// and `grid_c` over subject folds of `train_subjects`.
pub fn run_gridsearch(
    cfg: &PipelineConfig,
    dataset: &Path,
    train_subjects: &BTreeSet<i32>,
    out: &Path,
) -> Result<GridReport, PipelineError> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    if train_subjects.is_empty() {
        return Err(PipelineError::Dataset("no training subjects".into()));
    }
    let entries = list_dataset(dataset)?;
    let split = SplitSpec {
        train_subjects: train_subjects.clone(),
        test_subjects: BTreeSet::new(),
    };
    let (train_e, _) = split.apply(&entries)?;
    let seqs = load_all(&train_e)?;
    let dets = detect_all(&train_e, &seqs, cfg)?;
    let z_bar0 = reference_depth(&dets, cfg.probe_radius).ok_or_else(|| PipelineError::Stage {
        stage: Stage::Describe,
        source: StageError::Other("no foreground interest points in the training split".into()),
    })?;
    let cache = FeatureCache::new(out.join("cache"));
    let all: Vec<&Detected> = dets.iter().collect();

    let mut points = Vec::new();
    for s in &cfg.grid_scales {
        for &k1 in &cfg.grid_k1 {
            for &k2 in &cfg.grid_k2 {
                for &c in &cfg.grid_c {
                    points.push((s.clone(), k1, k2, c));
                }
            }
        }
    }
    let with = |p: &(Vec<usize>, usize, usize, f64)| PipelineConfig {
        scales: p.0.clone(),
        k1: p.1,
        k2: p.2,
        c: p.3,
        ..cfg.clone()
    };
    let subjects: Vec<u32> = dets.iter().map(Detected::subject).collect();
    let result = grid_search(&points, &subjects, cfg.folds, cfg.seed, |p, fold: &Fold| {
        let pc = with(p);
        describe_all(&cache, &all, &pc, z_bar0)?;
        let tr: Vec<&Detected> = fold.train.iter().map(|&i| &dets[i]).collect();
        let va: Vec<&Detected> = fold.validation.iter().map(|&i| &dets[i]).collect();
        let books = fit_codebooks(&cache, &tr, &pc, z_bar0)?;
        let tr_reps = encode_all(&cache, &tr, &books, &pc, z_bar0, Stage::Encode)?;
        let va_reps = encode_all(&cache, &va, &books, &pc, z_bar0, Stage::Encode)?;
        let svm = train_on(&tr_reps, &tr, &pc)?;
        Ok::<f64, PipelineError>(evaluate_on(&svm, &va_reps, &va)?.accuracy)
    })?;

    let mut csv = String::from("scales,k1,k2,C,mean_accuracy\n");
    for (p, a) in points.iter().zip(&result.mean_accuracy) {
        let scales = p.0.iter().map(usize::to_string).collect::<Vec<_>>().join(" ");
        let _ = writeln!(csv, "{scales},{},{},{},{a}", p.1, p.2, p.3);
    }
    write_file(&out.join("gridsearch.csv"), &csv)?;
    let best = with(&result.best);
    write_file(&out.join("best.conf"), &best.to_text())?;
    Ok(GridReport {
        points,
        mean_accuracy: result.mean_accuracy,
        best,
    })
}
