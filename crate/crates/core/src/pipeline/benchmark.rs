//! The three-class synthetic benchmark.
//!
//! Class 1 is a blob moving up, class 2 a blob moving right and class 3 a
//! static blob in front of which a smaller object appears. Subjects differ
//! in body size and distance to the sensor; repetitions jitter start
//! position, speed and timing.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{PipelineError, SequenceName};
use crate::depthio::{save_sequence, synth_action, Blob, BlobShape, DepthSequence, HeldObject, SynthSpec};
use crate::mask::BoxRect;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BenchmarkSpec {
    pub subjects: usize,
    pub repetitions: usize,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        Self {
            subjects: 6,
            repetitions: 4,
            width: 160,
            height: 120,
            frames: 20,
        }
    }
}

pub const BENCHMARK_CLASSES: i32 = 3;

/// Scene description of one benchmark sequence.
pub fn benchmark_scene(spec: &BenchmarkSpec, name: SequenceName, seed: u64) -> SynthSpec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(((name.action as u64) << 32) | ((name.subject as u64) << 16) | name.episode as u64);
    let s = name.subject as usize;
    let (w, h) = (16 + 2 * (s % 3), 22 + 2 * (s % 2));
    let depth = 2000 + 150 * s as u16 + rng.random_range(0..100);
    let jx = rng.random_range(-4.0..4.0);
    let jy = rng.random_range(-4.0..4.0);
    let speed = rng.random_range(2.3..2.8);
    let drift = rng.random_range(5.0..8.0);
    let last = (spec.frames - 1) as f64;
    let mut actor = Blob {
        shape: BlobShape::Ellipse,
        bulge_mm: 60,
        ..Blob::rect(0.0, 0.0, w, h, depth)
    };
    let mut held_object = None;
    match name.action {
        1 => {
            actor.start = (70.0 + jx, 36.0 + speed * last + jy);
            actor.velocity = (0.0, -speed);
            actor.depth_velocity = drift;
        }
        2 => {
            actor.start = (52.0 + jx, 60.0 + jy);
            actor.velocity = (speed, 0.0);
            actor.depth_velocity = drift;
        }
        _ => {
            actor.size = (w + 8, h + 20);
            actor.start = (60.0 + jx, 40.0 + jy);
            let x = actor.start.0 + (w / 2) as f64;
            let y = actor.start.1 + (h / 2 + 6) as f64;
            held_object = Some(HeldObject {
                blob: Blob::rect(x, y, 10, 10, depth - 300),
                appear_frame: rng.random_range(5..spec.frames / 2 + 2),
            });
        }
    }
    SynthSpec {
        width: spec.width,
        height: spec.height,
        frames: spec.frames,
        background_depth: 4000,
        far_field: Some(BoxRect { x0: 0, y0: 0, x1: 14, y1: 14 }),
        near_field: None,
        actor,
        held_object,
        noise_mm: 0,
    }
}

/// Every benchmark sequence, ordered by class, subject and repetition.
pub fn benchmark_sequences(spec: &BenchmarkSpec, seed: u64) -> Result<Vec<(SequenceName, DepthSequence)>, PipelineError> {
    let mut out = Vec::new();
    for action in 1..=BENCHMARK_CLASSES {
        for subject in 1..=spec.subjects as i32 {
            for episode in 1..=spec.repetitions as i32 {
                let name = SequenceName { action, subject, episode };
                let scene = benchmark_scene(spec, name, seed);
                let mut seq = synth_action(&scene, seed ^ 0x5eed)
                    .map_err(|e| PipelineError::Dataset(format!("{}: {e}", name.file_stem())))?
                    .sequence;
                seq.subject_id = subject;
                seq.action_label = action;
                seq.name = name.file_stem();
                out.push((name, seq));
            }
        }
    }
    Ok(out)
}

/// Writes the benchmark as `.dseq` files into `dir` and returns their paths.
pub fn write_benchmark(dir: &Path, spec: &BenchmarkSpec, seed: u64) -> Result<Vec<PathBuf>, PipelineError> {
    std::fs::create_dir_all(dir).map_err(|source| PipelineError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    benchmark_sequences(spec, seed)?
        .into_iter()
        .map(|(name, seq)| {
            let path = dir.join(format!("{}.dseq", name.file_stem()));
            save_sequence(&seq, &path).map_err(|e| PipelineError::Dataset(e.to_string()))?;
            Ok(path)
        })
        .collect()
}
