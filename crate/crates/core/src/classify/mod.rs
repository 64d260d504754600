//! Kernel SVM classification of sequence representations.

mod kernel;
mod model;
mod search;
mod svm;

use thiserror::Error;

pub use kernel::{chi2_kernel, cross_kernel, gram_matrix, KernelParams};
pub use model::{read_model, write_model, TrainedModel, MODL_MAGIC, MODL_VERSION};
pub use search::{grid_search, subject_folds, Fold, GridResult};
pub use svm::{evaluate, predict, train_svm, Evaluation, SvmModel, SvmParams};

use crate::encode::EncodeError;

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("histograms differ in length ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("histogram entry {0} is negative")]
    NegativeEntry(f64),
    #[error("gamma must be positive, got {0}")]
    InvalidGamma(f64),
    #[error("C must be positive, got {0}")]
    InvalidC(f64),
    #[error("training needs at least two classes")]
    SingleClass,
    #[error("labels and representations differ in count ({labels} vs {reps})")]
    CountMismatch { labels: usize, reps: usize },
    #[error("representation {0} contains a non-finite value")]
    NonFinite(usize),
    #[error("representation length {found} does not match the model ({expected})")]
    LayoutMismatch { expected: usize, found: usize },
    #[error("empty test set")]
    EmptyTestSet,
    #[error("{samples} samples cannot fill {folds} folds")]
    TooFewSamples { samples: usize, folds: usize },
    #[error("at least two folds are required")]
    InvalidFolds,
    #[error("empty parameter grid")]
    EmptyGrid,
    #[error("model file: {0}")]
    Format(String),
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
