//! Cross-validated grid search.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::ClassifyError;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
}

/// Splits samples into `folds` folds so that each subject falls in exactly
/// one fold. Subjects are shuffled with `seed` and dealt round-robin. When
/// there are fewer subjects than folds, samples are dealt instead.
pub fn subject_folds(subjects: &[u32], folds: usize, seed: u64) -> Result<Vec<Fold>, ClassifyError> {
    if folds < 2 {
        return Err(ClassifyError::InvalidFolds);
    }
    if subjects.len() < folds {
        return Err(ClassifyError::TooFewSamples {
            samples: subjects.len(),
            folds,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut ids: Vec<u32> = subjects.to_vec();
    ids.sort_unstable();
    ids.dedup();
    let fold_of: Vec<usize> = if ids.len() >= folds {
        ids.shuffle(&mut rng);
        subjects
            .iter()
            .map(|s| ids.iter().position(|x| x == s).expect("subject listed") % folds)
            .collect()
    } else {
        let mut order: Vec<usize> = (0..subjects.len()).collect();
        order.shuffle(&mut rng);
        let mut f = vec![0; subjects.len()];
        for (rank, &i) in order.iter().enumerate() {
            f[i] = rank % folds;
        }
        f
    };
    Ok((0..folds)
        .map(|k| Fold {
            train: (0..subjects.len()).filter(|&i| fold_of[i] != k).collect(),
            validation: (0..subjects.len()).filter(|&i| fold_of[i] == k).collect(),
        })
        .collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResult<P> {
    pub best: P,
    pub best_index: usize,
    /// Mean validation accuracy of every grid point, in grid order.
    pub mean_accuracy: Vec<f64>,
}

/// Scores every grid point by its mean accuracy over subject folds and
/// returns the best; ties keep the earliest point.
pub fn grid_search<P: Clone, E: From<ClassifyError>>(
    grid: &[P],
    subjects: &[u32],
    folds: usize,
    seed: u64,
    mut evaluate: impl FnMut(&P, &Fold) -> Result<f64, E>,
) -> Result<GridResult<P>, E> {
    if grid.is_empty() {
        return Err(ClassifyError::EmptyGrid.into());
    }
    let split = subject_folds(subjects, folds, seed)?;
    let mut mean_accuracy = Vec::with_capacity(grid.len());
    for p in grid {
        let mut total = 0.0;
        for f in &split {
            total += evaluate(p, f)?;
        }
        mean_accuracy.push(total / split.len() as f64);
    }
    let best_index = (0..grid.len()).fold(0, |b, i| if mean_accuracy[i] > mean_accuracy[b] { i } else { b });
    Ok(GridResult {
        best: grid[best_index].clone(),
        best_index,
        mean_accuracy,
    })
}
