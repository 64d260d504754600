//! Dumps intermediate products of a single sequence for visual checks.

use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::features::{detect, reference_depth};
use super::{io_err, parse_sequence_name, seq_err, PipelineConfig, PipelineError, SequenceName, Stage, StageError};
use crate::background::{mask_to_frame, max_depth_map, model_background, probability_map};
use crate::depthio::{load_sequence, write_pgm, DepthFrame};
use crate::descriptor::{stv, write_descriptors, DescriptorMatrix, DescriptorParams};
use crate::stip::{detect_stips, write_stips};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InspectStage {
    Background,
    Foreground,
    Stips,
    Descriptors,
}

impl FromStr for InspectStage {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "background" => Ok(Self::Background),
            "foreground" => Ok(Self::Foreground),
            "stips" => Ok(Self::Stips),
            "descriptors" => Ok(Self::Descriptors),
            _ => Err(format!(
                "unknown stage {s:?} (expected background, foreground, stips or descriptors)"
            )),
        }
    }
}

fn pgm(out: &Path, name: &str, frame: &DepthFrame, seq: &str) -> Result<PathBuf, PipelineError> {
    let path = out.join(name);
    write_pgm(&path, frame).map_err(seq_err(Stage::Detect, seq))?;
    Ok(path)
}

/// Writes the products of `stage` for the sequence at `path` into `out` and
/// returns the files written. Descriptors use `z_bar0` when given, else the
/// mean probe depth of the sequence itself.
pub fn inspect(
    path: &Path,
    stage: InspectStage,
    cfg: &PipelineConfig,
    out: &Path,
    z_bar0: Option<f64>,
) -> Result<Vec<PathBuf>, PipelineError> {
    cfg.validate()?;
    std::fs::create_dir_all(out).map_err(io_err(out))?;
    let stem = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let seq = load_sequence(path).map_err(seq_err(Stage::Load, &stem))?;
    let mut written = Vec::new();
    match stage {
        InspectStage::Background => {
            let frames = seq.frames();
            let err = seq_err(Stage::Detect, &stem);
            let p = probability_map(frames).map_err(err)?;
            let m = max_depth_map(frames).map_err(seq_err(Stage::Detect, &stem))?;
            let b = model_background(frames, cfg.t1).map_err(seq_err(Stage::Detect, &stem))?;
            written.push(pgm(out, "probability.pgm", &p.to_frame(), &stem)?);
            written.push(pgm(out, "max_depth.pgm", &m.to_frame(), &stem)?);
            written.push(pgm(out, "background.pgm", &b.to_frame(), &stem)?);
        }
        InspectStage::Foreground => {
            let det = detect_stips(&seq, &cfg.stip_params()).map_err(seq_err(Stage::Detect, &stem))?;
            for (i, mask) in det.foreground.iter().enumerate() {
                written.push(pgm(out, &format!("foreground_{i:04}.pgm"), &mask_to_frame(mask), &stem)?);
            }
        }
        InspectStage::Stips => {
            let det = detect_stips(&seq, &cfg.stip_params()).map_err(seq_err(Stage::Detect, &stem))?;
            let path = out.join("stips.txt");
            let mut all = det.candidate_stips();
            all.extend(det.motion_stips());
            all.extend(det.shape_stips());
            write_stips(&path, &all).map_err(io_err(&path))?;
            written.push(path);
        }
        InspectStage::Descriptors => {
            let name = parse_sequence_name(&stem).unwrap_or(SequenceName {
                action: 0,
                subject: 0,
                episode: 0,
            });
            let det = detect(name, &seq, cfg)?;
            let z0 = match z_bar0 {
                Some(z) => z,
                None => reference_depth(std::slice::from_ref(&det), cfg.probe_radius).ok_or_else(|| {
                    PipelineError::Stage {
                        stage: Stage::Describe,
                        source: StageError::Other(format!("{stem}: no foreground interest points")),
                    }
                })?,
            };
            let d = crate::descriptor::m3dlsk(&det.masked, &det.motion, &cfg.descriptor_params(), z0)
                .map_err(seq_err(Stage::Describe, &stem))?;
            for (r, descs) in cfg.scales.iter().zip(&d.per_scale) {
                let m = DescriptorMatrix::from_rows(DescriptorParams::dim(*r), descs.iter().map(|x| x.values.as_slice()));
                let path = out.join(format!("motion_r{r}.desc"));
                write_descriptors(&path, &m).map_err(seq_err(Stage::Describe, &stem))?;
                written.push(path);
            }
            let m = if det.shape.is_empty() {
                DescriptorMatrix::new(4)
            } else {
                let v = stv(&det.shape).map_err(seq_err(Stage::Describe, &stem))?;
                DescriptorMatrix::from_rows(4, v.iter().map(|x| &x.values[..]))
            };
            let path = out.join("shape_stv.desc");
            write_descriptors(&path, &m).map_err(seq_err(Stage::Describe, &stem))?;
            written.push(path);
        }
    }
    Ok(written)
}
