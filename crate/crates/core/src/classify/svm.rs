//! One-vs-rest kernel SVM trained by stochastic dual coordinate ascent.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{cross_kernel, gram_matrix, ClassifyError, KernelParams};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub c: f64,
    pub kernel: KernelParams,
    pub seed: u64,
    pub max_epochs: usize,
    /// Training stops once the duality gap falls below `gap_tol * n`.
    pub gap_tol: f64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            kernel: KernelParams::default(),
            seed: 0,
            max_epochs: 200,
            gap_tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    /// Sorted class labels.
    pub classes: Vec<u32>,
    pub dim: usize,
    pub kernel: KernelParams,
    pub c: f64,
    pub supports: Vec<Vec<f64>>,
    /// `coefs[class][support]` is `alpha * y`.
    pub coefs: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    /// Dual objective after each epoch, per class. Not persisted.
    pub dual_history: Vec<Vec<f64>>,
}

struct Binary {
    alpha: Vec<f64>,
    history: Vec<f64>,
}

/// Maximizes `sum(a) - a'YQYa / 2` over `0 <= a <= c`, where `Q` already
/// includes the constant bias feature.
fn solve(q: &[f64], y: &[f64], params: &SvmParams, stream: u64) -> Binary {
    let n = y.len();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    rng.set_stream(stream);
    let mut alpha = vec![0.0; n];
    let mut f = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    let mut history: Vec<f64> = Vec::new();
    for _ in 0..params.max_epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            let qi = &q[i * n..(i + 1) * n];
            let step = (1.0 - y[i] * f[i]) / qi[i];
            let new = (alpha[i] + step).clamp(0.0, params.c);
            let delta = new - alpha[i];
            if delta != 0.0 {
                alpha[i] = new;
                let s = delta * y[i];
                for (fj, &qij) in f.iter_mut().zip(qi) {
                    *fj += s * qij;
                }
            }
        }
        // fresh decision values keep the gap free of accumulated drift
        for (j, fj) in f.iter_mut().enumerate() {
            let qj = &q[j * n..(j + 1) * n];
            *fj = (0..n).map(|i| alpha[i] * y[i] * qj[i]).sum();
        }
        let quad: f64 = (0..n).map(|i| alpha[i] * y[i] * f[i]).sum();
        let dual = alpha.iter().sum::<f64>() - 0.5 * quad;
        let hinge: f64 = (0..n).map(|i| (1.0 - y[i] * f[i]).max(0.0)).sum();
        let primal = 0.5 * quad + params.c * hinge;
        if let Some(&prev) = history.last() {
            debug_assert!(dual >= prev - 1e-9 * prev.abs().max(1.0), "dual fell from {prev} to {dual}");
        }
        history.push(dual);
        if primal - dual < params.gap_tol * n as f64 {
            break;
        }
    }
    Binary { alpha, history }
}

pub fn train_svm(reps: &[&[f64]], labels: &[u32], params: &SvmParams) -> Result<SvmModel, ClassifyError> {
    if reps.len() != labels.len() {
        return Err(ClassifyError::CountMismatch {
            labels: labels.len(),
            reps: reps.len(),
        });
    }
    if !(params.c > 0.0) {
        return Err(ClassifyError::InvalidC(params.c));
    }
    if let Some(i) = reps.iter().position(|r| r.iter().any(|v| !v.is_finite())) {
        return Err(ClassifyError::NonFinite(i));
    }
    let mut classes = labels.to_vec();
    classes.sort_unstable();
    classes.dedup();
    if classes.len() < 2 {
        return Err(ClassifyError::SingleClass);
    }
    let n = reps.len();
    let mut q = gram_matrix(reps, params.kernel.gamma)?;
    q.iter_mut().for_each(|v| *v += 1.0);

    let solved: Vec<Binary> = classes
        .par_iter()
        .enumerate()
        .map(|(ci, &cls)| {
            let y: Vec<f64> = labels.iter().map(|&l| if l == cls { 1.0 } else { -1.0 }).collect();
            solve(&q, &y, params, ci as u64)
        })
        .collect();

    let support_idx: Vec<usize> = (0..n)
        .filter(|&i| solved.iter().any(|b| b.alpha[i] != 0.0))
        .collect();
    let mut coefs = Vec::with_capacity(classes.len());
    let mut bias = Vec::with_capacity(classes.len());
    for (b, &cls) in solved.iter().zip(&classes) {
        let signed = |i: usize| if labels[i] == cls { b.alpha[i] } else { -b.alpha[i] };
        coefs.push(support_idx.iter().map(|&i| signed(i)).collect());
        bias.push((0..n).map(signed).sum());
    }
    Ok(SvmModel {
        dim: reps[0].len(),
        kernel: params.kernel,
        c: params.c,
        supports: support_idx.iter().map(|&i| reps[i].to_vec()).collect(),
        coefs,
        bias,
        dual_history: solved.into_iter().map(|b| b.history).collect(),
        classes,
    })
}

/// Predicted label and the decision value of every class. Ties go to the
/// lowest class label.
pub fn predict(model: &SvmModel, rep: &[f64]) -> Result<(u32, Vec<f64>), ClassifyError> {
    if rep.len() != model.dim {
        return Err(ClassifyError::LayoutMismatch {
            expected: model.dim,
            found: rep.len(),
        });
    }
    let supports: Vec<&[f64]> = model.supports.iter().map(|s| s.as_slice()).collect();
    let k = cross_kernel(&supports, &[rep], model.kernel.gamma)?;
    let scores: Vec<f64> = model
        .coefs
        .iter()
        .zip(&model.bias)
        .map(|(c, b)| c.iter().zip(&k).map(|(a, kv)| a * kv).sum::<f64>() + b)
        .collect();
    let best = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
    Ok((model.classes[best], scores))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Labels indexing the confusion matrix rows (true) and columns (predicted).
    pub classes: Vec<u32>,
    pub confusion: Vec<Vec<usize>>,
    pub accuracy: f64,
    pub predictions: Vec<u32>,
}

pub fn evaluate(model: &SvmModel, test: &[(&[f64], u32)]) -> Result<Evaluation, ClassifyError> {
    if test.is_empty() {
        return Err(ClassifyError::EmptyTestSet);
    }
    let predictions = test
        .par_iter()
        .map(|(rep, _)| predict(model, rep).map(|p| p.0))
        .collect::<Result<Vec<_>, _>>()?;
    let mut classes = model.classes.clone();
    classes.extend(test.iter().map(|t| t.1));
    classes.sort_unstable();
    classes.dedup();
    let idx = |l: u32| classes.binary_search(&l).expect("label collected above");
    let mut confusion = vec![vec![0; classes.len()]; classes.len()];
    for ((_, truth), &pred) in test.iter().zip(&predictions) {
        confusion[idx(*truth)][idx(pred)] += 1;
    }
    let correct: usize = (0..classes.len()).map(|i| confusion[i][i]).sum();
    Ok(Evaluation {
        accuracy: correct as f64 / test.len() as f64,
        classes,
        confusion,
        predictions,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> (Vec<Vec<f64>>, Vec<u32>) {
        let mut reps = Vec::new();
        let mut labels = Vec::new();
        for (l, hot) in [(3u32, 0usize), (7, 1), (9, 2)] {
            for _ in 0..4 {
                let mut h = vec![0.0; 3];
                h[hot] = 1.0;
                reps.push(h);
                labels.push(l);
            }
        }
        (reps, labels)
    }

    fn refs(v: &[Vec<f64>]) -> Vec<&[f64]> {
        v.iter().map(|r| r.as_slice()).collect()
    }

    #[test]
    fn separable_toy_is_learned() {
        let (reps, labels) = toy();
        let m = train_svm(&refs(&reps), &labels, &SvmParams::default()).unwrap();
        assert_eq!(m.classes, vec![3, 7, 9]);
        let test: Vec<(&[f64], u32)> = reps.iter().map(|r| r.as_slice()).zip(labels.iter().copied()).collect();
        let ev = evaluate(&m, &test).unwrap();
        assert_eq!(ev.accuracy, 1.0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(ev.confusion[i][j], if i == j { 4 } else { 0 });
            }
        }
        for h in &m.dual_history {
            for w in h.windows(2) {
                assert!(w[1] >= w[0] - 1e-12);
            }
        }
    }

    #[test]
    fn duplicated_training_set_keeps_decisions() {
        let (reps, labels) = toy();
        let params = SvmParams {
            c: 100.0,
            gap_tol: 1e-9,
            max_epochs: 5000,
            ..Default::default()
        };
        let a = train_svm(&refs(&reps), &labels, &params).unwrap();
        let twice: Vec<Vec<f64>> = reps.iter().chain(&reps).cloned().collect();
        let l2: Vec<u32> = labels.iter().chain(&labels).copied().collect();
        let b = train_svm(&refs(&twice), &l2, &params).unwrap();
        for probe in [vec![1.0, 0.0, 0.0], vec![0.2, 0.3, 0.5], vec![0.0, 0.0, 0.0]] {
            let (la, sa) = predict(&a, &probe).unwrap();
            let (lb, sb) = predict(&b, &probe).unwrap();
            assert_eq!(la, lb);
            for (x, y) in sa.iter().zip(&sb) {
                assert!((x - y).abs() < 1e-6, "{x} vs {y}");
            }
        }
    }

    #[test]
    fn fixed_seed_is_reproducible() {
        let (reps, labels) = toy();
        let p = SvmParams { seed: 42, ..Default::default() };
        let a = train_svm(&refs(&reps), &labels, &p).unwrap();
        let b = train_svm(&refs(&reps), &labels, &p).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn degenerate_inputs() {
        let (reps, labels) = toy();
        let m = train_svm(&refs(&reps), &labels, &SvmParams::default()).unwrap();
        let (l, _) = predict(&m, &[0.0, 0.0, 0.0]).unwrap();
        assert!(m.classes.contains(&l));
        assert!(matches!(predict(&m, &[1.0]), Err(ClassifyError::LayoutMismatch { .. })));
        assert!(matches!(
            train_svm(&refs(&reps[..4]), &labels[..4], &SvmParams::default()),
            Err(ClassifyError::SingleClass)
        ));
        let mut bad = reps.clone();
        bad[2][0] = f64::NAN;
        assert!(matches!(train_svm(&refs(&bad), &labels, &SvmParams::default()), Err(ClassifyError::NonFinite(2))));
        assert!(matches!(evaluate(&m, &[]), Err(ClassifyError::EmptyTestSet)));
    }

    #[test]
    fn constant_predictions_on_balanced_set() {
        let model = SvmModel {
            classes: vec![0, 1],
            dim: 1,
            kernel: KernelParams::default(),
            c: 1.0,
            supports: vec![],
            coefs: vec![vec![], vec![]],
            bias: vec![1.0, -1.0],
            dual_history: vec![],
        };
        let x = [0.5];
        let test = [(&x[..], 0), (&x[..], 1), (&x[..], 0), (&x[..], 1)];
        let ev = evaluate(&model, &test).unwrap();
        assert_eq!(ev.accuracy, 0.5);
        assert_eq!(ev.confusion.iter().flatten().sum::<usize>(), 4);
        let trace: usize = (0..2).map(|i| ev.confusion[i][i]).sum();
        assert_eq!(ev.accuracy, trace as f64 / 4.0);
    }
}
