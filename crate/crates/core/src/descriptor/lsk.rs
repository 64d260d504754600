//! 3D local steering kernels.

use super::{Cube, DescriptorError, DescriptorParams, LskDescriptor};

/// Central-difference gradients `[gx, gy, gt]` of `cube`. At the faces the
/// out-of-range neighbor is replaced by the voxel itself.
pub fn gradients(cube: &Cube) -> [Vec<f64>; 3] {
    let n = cube.side;
    let mut g = [vec![0.0; cube.data.len()], vec![0.0; cube.data.len()], vec![0.0; cube.data.len()]];
    let lo = |i: usize| i.saturating_sub(1);
    let hi = |i: usize| (i + 1).min(n - 1);
    for t in 0..n {
        for y in 0..n {
            for x in 0..n {
                let i = cube.index(x, y, t);
                g[0][i] = (cube.get(hi(x), y, t) - cube.get(lo(x), y, t)) / 2.0;
                g[1][i] = (cube.get(x, hi(y), t) - cube.get(x, lo(y), t)) / 2.0;
                g[2][i] = (cube.get(x, y, hi(t)) - cube.get(x, y, lo(t))) / 2.0;
            }
        }
    }
    g
}

fn standardize(cube: &Cube) -> Cube {
    let n = cube.data.len() as f64;
    let mean = cube.data.iter().sum::<f64>() / n;
    let var = cube.data.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    let sd = var.sqrt();
    let data = if sd > 0.0 {
        cube.data.iter().map(|v| (v - mean) / sd).collect()
    } else {
        vec![0.0; cube.data.len()]
    };
    Cube::new(cube.side, data)
}

fn det3(c: &[[f64; 3]; 3]) -> f64 {
    c[0][0] * (c[1][1] * c[2][2] - c[1][2] * c[2][1]) - c[0][1] * (c[1][0] * c[2][2] - c[1][2] * c[2][0])
        + c[0][2] * (c[1][0] * c[2][1] - c[1][1] * c[2][0])
}

/// Steering-kernel weights of every voxel relative to the cube center,
/// flattened in cube order and L1-normalized.
///
/// Intensities are standardized first. Each voxel's gradient covariance is
/// averaged over the `cov_window` neighborhood (clipped to the cube) and
/// regularized by `reg_lambda`.
pub fn lsk3d(cube: &Cube, params: &DescriptorParams) -> Result<LskDescriptor, DescriptorError> {
    let n = cube.side;
    if n < 3 {
        return Err(DescriptorError::DegenerateCube(n));
    }
    let g = gradients(&standardize(cube));
    let w = params.cov_window;
    let c = (n / 2) as f64;
    let mut values = Vec::with_capacity(cube.data.len());
    for t in 0..n {
        for y in 0..n {
            for x in 0..n {
                let mut cov = [[0.0; 3]; 3];
                let mut count = 0.0;
                for qt in t.saturating_sub(w)..=(t + w).min(n - 1) {
                    for qy in y.saturating_sub(w)..=(y + w).min(n - 1) {
                        for qx in x.saturating_sub(w)..=(x + w).min(n - 1) {
                            let q = cube.index(qx, qy, qt);
                            let v = [g[0][q], g[1][q], g[2][q]];
                            for a in 0..3 {
                                for b in 0..3 {
                                    cov[a][b] += v[a] * v[b];
                                }
                            }
                            count += 1.0;
                        }
                    }
                }
                for (a, row) in cov.iter_mut().enumerate() {
                    for v in row.iter_mut() {
                        *v /= count;
                    }
                    row[a] += params.reg_lambda;
                }
                let u = [x as f64 - c, y as f64 - c, t as f64 - c];
                let mut quad = 0.0;
                for a in 0..3 {
                    for b in 0..3 {
                        quad += u[a] * cov[a][b] * u[b];
                    }
                }
                let k = det3(&cov).max(0.0).sqrt() * (-quad / (2.0 * params.h * params.h)).exp();
                values.push(k);
            }
        }
    }
    let total: f64 = values.iter().sum();
    for v in &mut values {
        *v /= total;
    }
    Ok(LskDescriptor {
        scale_index: 0,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params() -> DescriptorParams {
        DescriptorParams::default()
    }

    #[test]
    fn constant_cube_is_isotropic() {
        let cube = Cube::from_fn(7, |_, _, _| 2000.0);
        let d = lsk3d(&cube, &params()).unwrap();
        let lam = params().reg_lambda;
        let raw = |x: f64, y: f64, t: f64| lam.powf(1.5) * (-lam * (x * x + y * y + t * t) / 2.0).exp();
        let total: f64 = (0..343)
            .map(|i| raw((i % 7) as f64 - 3.0, ((i / 7) % 7) as f64 - 3.0, (i / 49) as f64 - 3.0))
            .sum();
        for t in 0..7 {
            for y in 0..7 {
                for x in 0..7 {
                    let want = raw(x as f64 - 3.0, y as f64 - 3.0, t as f64 - 3.0) / total;
                    let got = d.values[cube.index(x, y, t)];
                    assert!((got - want).abs() < 1e-12);
                    // symmetric under axis permutation
                    assert!((got - d.values[cube.index(t, x, y)]).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn rejects_tiny_cubes() {
        let cube = Cube::from_fn(1, |_, _, _| 1.0);
        assert!(matches!(lsk3d(&cube, &params()), Err(DescriptorError::DegenerateCube(1))));
    }

    #[test]
    fn quadratic_gradients_are_exact_inside() {
        let q = |x: f64, y: f64, t: f64| 3.0 * x * x - 2.0 * x * y + 0.5 * t * t + 4.0 * y - t + 7.0;
        let cube = Cube::from_fn(9, |x, y, t| q(x as f64, y as f64, t as f64));
        let g = gradients(&cube);
        for t in 1..8 {
            for y in 1..8 {
                for x in 1..8 {
                    let (xf, yf, tf) = (x as f64, y as f64, t as f64);
                    let i = cube.index(x, y, t);
                    assert!((g[0][i] - (6.0 * xf - 2.0 * yf)).abs() <= 1e-6);
                    assert!((g[1][i] - (-2.0 * xf + 4.0)).abs() <= 1e-6);
                    assert!((g[2][i] - (tf - 1.0)).abs() <= 1e-6);
                }
            }
        }
    }

    fn random_cube() -> impl Strategy<Value = Cube> {
        prop::collection::vec(0.0f64..5000.0, 125).prop_map(|d| Cube::new(5, d))
    }

    fn reflect(cube: &Cube, axis: usize) -> Cube {
        let m = cube.side - 1;
        Cube::from_fn(cube.side, |x, y, t| match axis {
            0 => cube.get(m - x, y, t),
            1 => cube.get(x, m - y, t),
            _ => cube.get(x, y, m - t),
        })
    }

    proptest! {
        #[test]
        fn descriptor_is_a_distribution(cube in random_cube()) {
            let d = lsk3d(&cube, &params()).unwrap();
            prop_assert!(d.values.iter().all(|&v| v >= 0.0));
            prop_assert!((d.values.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }

        #[test]
        fn mirror_equivariance(cube in random_cube(), axis in 0usize..3) {
            let a = lsk3d(&cube, &params()).unwrap();
            let mirrored = reflect(&cube, axis);
            let b = lsk3d(&mirrored, &params()).unwrap();
            let a_cube = reflect(&Cube::new(5, a.values), axis);
            for (x, y) in a_cube.data.iter().zip(&b.values) {
                prop_assert!((x - y).abs() <= 1e-6);
            }
        }
    }
}
