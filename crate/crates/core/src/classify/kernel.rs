//! Homogeneous chi-squared kernel.

use rayon::prelude::*;

use super::ClassifyError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelParams {
    /// Homogeneity degree.
    pub gamma: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        Self { gamma: 0.8 }
    }
}

fn term(a: f64, b: f64, gamma: f64) -> f64 {
    let ab = a * b;
    if ab == 0.0 {
        return 0.0;
    }
    // (ab)^(g/2) * sech(ln(b/a) / 2) == 2 (ab)^((g+1)/2) / (a+b)
    2.0 * ab.powf((gamma + 1.0) / 2.0) / (a + b)
}

fn unchecked(x: &[f64], y: &[f64], gamma: f64) -> f64 {
    x.iter().zip(y).map(|(&a, &b)| term(a, b, gamma)).sum()
}

fn check(x: &[f64], gamma: f64) -> Result<(), ClassifyError> {
    if !(gamma > 0.0) {
        return Err(ClassifyError::InvalidGamma(gamma));
    }
    match x.iter().find(|&&v| v < 0.0) {
        Some(&v) => Err(ClassifyError::NegativeEntry(v)),
        None => Ok(()),
    }
}

pub fn chi2_kernel(x: &[f64], y: &[f64], gamma: f64) -> Result<f64, ClassifyError> {
    if x.len() != y.len() {
        return Err(ClassifyError::LengthMismatch(x.len(), y.len()));
    }
    check(x, gamma)?;
    check(y, gamma)?;
    Ok(unchecked(x, y, gamma))
}

fn check_rows(rows: &[&[f64]], gamma: f64) -> Result<(), ClassifyError> {
    if let Some(first) = rows.first() {
        for r in rows {
            if r.len() != first.len() {
                return Err(ClassifyError::LengthMismatch(first.len(), r.len()));
            }
            check(r, gamma)?;
        }
    }
    Ok(())
}

/// Row-major `n x n` kernel matrix. Entries are computed once per pair, so
/// the result is exactly symmetric.
pub fn gram_matrix(rows: &[&[f64]], gamma: f64) -> Result<Vec<f64>, ClassifyError> {
    check_rows(rows, gamma)?;
    let n = rows.len();
    let upper: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| (i..n).map(|j| unchecked(rows[i], rows[j], gamma)).collect())
        .collect();
    let mut g = vec![0.0; n * n];
    for (i, row) in upper.iter().enumerate() {
        for (off, &v) in row.iter().enumerate() {
            let j = i + off;
            g[i * n + j] = v;
            g[j * n + i] = v;
        }
    }
    Ok(g)
}

/// Row-major `a.len() x b.len()` kernel values.
pub fn cross_kernel(a: &[&[f64]], b: &[&[f64]], gamma: f64) -> Result<Vec<f64>, ClassifyError> {
    check_rows(a, gamma)?;
    check_rows(b, gamma)?;
    if let (Some(x), Some(y)) = (a.first(), b.first()) {
        if x.len() != y.len() {
            return Err(ClassifyError::LengthMismatch(x.len(), y.len()));
        }
    }
    Ok(a.par_iter()
        .flat_map_iter(|x| b.iter().map(move |y| unchecked(x, y, gamma)))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn closed_form_examples() {
        assert_eq!(chi2_kernel(&[1.0, 0.0], &[1.0, 0.0], 0.8).unwrap(), 1.0);
        assert_eq!(chi2_kernel(&[1.0, 0.0], &[0.0, 1.0], 0.3).unwrap(), 0.0);
        let v = chi2_kernel(&[0.5, 0.5], &[1.0, 0.0], 1.0).unwrap();
        assert!((v - 2.0 * 0.5 / 1.5).abs() < 1e-9);
    }

    #[test]
    fn sech_form_agrees() {
        let (a, b, g) = (0.3f64, 0.05f64, 0.8);
        let sech = 1.0 / (0.5 * (b / a).ln()).cosh();
        assert!((term(a, b, g) - (a * b).powf(g / 2.0) * sech).abs() < 1e-15);
    }

    #[test]
    fn bad_inputs() {
        assert!(matches!(chi2_kernel(&[1.0], &[1.0, 0.0], 0.8), Err(ClassifyError::LengthMismatch(1, 2))));
        assert!(matches!(chi2_kernel(&[-0.1], &[1.0], 0.8), Err(ClassifyError::NegativeEntry(_))));
        assert!(chi2_kernel(&[1.0], &[1.0], 0.0).is_err());
    }

    #[test]
    fn gram_is_symmetric_and_matches_pairs() {
        let rows: Vec<Vec<f64>> = vec![vec![0.2, 0.8, 0.0], vec![0.5, 0.25, 0.25], vec![0.0, 0.0, 1.0]];
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let g = gram_matrix(&refs, 0.8).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(g[i * 3 + j], chi2_kernel(&rows[i], &rows[j], 0.8).unwrap());
                assert_eq!(g[i * 3 + j], g[j * 3 + i]);
            }
        }
        let c = cross_kernel(&refs[..1], &refs, 0.8).unwrap();
        assert_eq!(c, g[..3].to_vec());
    }

    fn hist(len: usize) -> impl Strategy<Value = Vec<f64>> {
        prop::collection::vec(prop_oneof![Just(0.0), 0.0f64..1.0], len)
    }

    proptest! {
        #[test]
        fn symmetric_and_homogeneous(x in hist(12), y in hist(12), gamma in 0.1f64..2.0) {
            let k = chi2_kernel(&x, &y, gamma).unwrap();
            prop_assert_eq!(k, chi2_kernel(&y, &x, gamma).unwrap());
            for c in [0.5, 2.0, 10.0] {
                let cx: Vec<f64> = x.iter().map(|v| v * c).collect();
                let cy: Vec<f64> = y.iter().map(|v| v * c).collect();
                let kc = chi2_kernel(&cx, &cy, gamma).unwrap();
                prop_assert!((kc - c.powf(gamma) * k).abs() <= 1e-9 * kc.abs().max(1e-300));
            }
        }
    }
}
