//! End-to-end orchestration: detection, description, codebook fitting,
//! encoding, training and evaluation over a dataset directory.

mod benchmark;
mod config;
mod dataset;
mod features;
mod inspect;
mod run;

use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

pub use benchmark::{benchmark_scene, benchmark_sequences, write_benchmark, BenchmarkSpec, BENCHMARK_CLASSES};
pub use config::{Encoding, PipelineConfig};
pub use dataset::{list_dataset, parse_sequence_name, parse_subject_list, DatasetEntry, SequenceName, SplitSpec};
pub use features::{Detected, FeatureCache};
pub use inspect::{inspect, InspectStage};
pub use run::{
    run_gridsearch, run_pipeline, run_robustness, GridReport, PipelineReport, RobustnessMode, RobustnessReport,
};

use crate::background::BackgroundError;
use crate::classify::ClassifyError;
use crate::depthio::DepthIoError;
use crate::descriptor::DescriptorError;
use crate::encode::EncodeError;
use crate::stip::StipError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Detect,
    Describe,
    Fit,
    Encode,
    Train,
    Evaluate,
    Perturb,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Stage::Load => "load",
            Stage::Detect => "detect",
            Stage::Describe => "describe",
            Stage::Fit => "fit",
            Stage::Encode => "encode",
            Stage::Train => "train",
            Stage::Evaluate => "evaluate",
            Stage::Perturb => "perturb",
        })
    }
}

#[derive(Debug, Error)]
pub enum StageError {
    #[error(transparent)]
    DepthIo(#[from] DepthIoError),
    #[error(transparent)]
    Background(#[from] BackgroundError),
    #[error(transparent)]
    Stip(#[from] StipError),
    #[error(transparent)]
    Descriptor(#[from] DescriptorError),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    #[error("dataset: {0}")]
    Dataset(String),
    #[error("{stage} stage failed on {sequence}: {source}")]
    Sequence {
        stage: Stage,
        sequence: String,
        #[source]
        source: StageError,
    },
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: StageError,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<ClassifyError> for PipelineError {
    fn from(e: ClassifyError) -> Self {
        PipelineError::Stage {
            stage: Stage::Train,
            source: e.into(),
        }
    }
}

pub(crate) fn stage_err<E: Into<StageError>>(stage: Stage) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError::Stage {
        stage,
        source: e.into(),
    }
}

pub(crate) fn seq_err<E: Into<StageError>>(stage: Stage, sequence: &str) -> impl FnOnce(E) -> PipelineError + '_ {
    move |e| PipelineError::Sequence {
        stage,
        sequence: sequence.to_string(),
        source: e.into(),
    }
}

pub(crate) fn io_err(path: &std::path::Path) -> impl FnOnce(std::io::Error) -> PipelineError + '_ {
    move |source| PipelineError::Io {
        path: path.to_path_buf(),
        source,
    }
}
