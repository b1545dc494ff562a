use super::matrix::Matrix;
use super::rng::{uniform_matrix, SeededRng};
use crate::error::{Error, Result};

/// Householder QR of a tall matrix (`rows >= cols`).
///
/// Returns the thin factors: `q` is `rows x cols` with orthonormal columns and
/// `r` is `cols x cols` upper-triangular with a non-negative diagonal.
pub fn qr_decompose(a: &Matrix) -> Result<(Matrix, Matrix)> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::InvalidArgument(format!(
            "qr_decompose needs rows >= cols, got {m}x{n}"
        )));
    }

    let mut work = a.clone();
    let mut reflectors: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);

    for k in 0..n {
        let norm = (k..m).map(|i| work[(i, k)].powi(2)).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let alpha = if work[(k, k)] > 0.0 { -norm } else { norm };
        let mut v: Vec<f64> = (k..m).map(|i| work[(i, k)]).collect();
        v[0] -= alpha;
        let v_norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if v_norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        v.iter_mut().for_each(|x| *x /= v_norm);

        for j in k..n {
            let proj: f64 = v.iter().enumerate().map(|(i, vi)| vi * work[(k + i, j)]).sum();
            for (i, vi) in v.iter().enumerate() {
                work[(k + i, j)] -= 2.0 * proj * vi;
            }
        }
        reflectors.push(Some(v));
    }

    let mut r = Matrix::from_fn(n, n, |i, j| if j >= i { work[(i, j)] } else { 0.0 });

    // Q = H_0 H_1 ... H_{n-1} applied to the first n columns of I.
    let mut q = Matrix::from_fn(m, n, |i, j| if i == j { 1.0 } else { 0.0 });
    for (k, v) in reflectors.iter().enumerate().rev() {
        let Some(v) = v else { continue };
        for j in 0..n {
            let proj: f64 = v.iter().enumerate().map(|(i, vi)| vi * q[(k + i, j)]).sum();
            if proj != 0.0 {
                for (i, vi) in v.iter().enumerate() {
                    q[(k + i, j)] -= 2.0 * proj * vi;
                }
            }
        }
    }

    // Sign convention: diag(R) >= 0.
    for i in 0..n {
        if r[(i, i)] < 0.0 {
            for j in i..n {
                r[(i, j)] = -r[(i, j)];
            }
            for row in 0..m {
                q[(row, i)] = -q[(row, i)];
            }
        }
    }

    Ok((q, r))
}

/// Orthogonal `n x n` matrix: the Q factor of an i.i.d. uniform(-1, 1) matrix.
///
/// A numerically rank-deficient draw is discarded and the next values of the
/// stream are used instead.
pub fn random_orthogonal(rng: &mut SeededRng, n: usize) -> Matrix {
    assert!(n >= 1, "random_orthogonal: n must be >= 1");
    loop {
        let d = uniform_matrix(rng, n, n, -1.0, 1.0);
        let (q, r) = qr_decompose(&d).expect("square input");
        let diag: Vec<f64> = (0..n).map(|i| r[(i, i)]).collect();
        let max = diag.iter().cloned().fold(0.0, f64::max);
        let min = diag.iter().cloned().fold(f64::INFINITY, f64::min);
        if max > 0.0 && min > max * n as f64 * f64::EPSILON {
            return q;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn orthogonality_defect(q: &Matrix) -> f64 {
        let qtq = q.transpose().matmul(q).unwrap();
        qtq.sub(&Matrix::identity(q.cols())).unwrap().max_abs()
    }

    #[test]
    fn identity_factors_to_identity() {
        let (q, r) = qr_decompose(&Matrix::identity(4)).unwrap();
        assert!(q.sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-15);
        assert!(r.sub(&Matrix::identity(4)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn single_column_is_normalized() {
        let a = Matrix::from_rows(&[[3.0, 0.0], [4.0, 0.0]]).unwrap();
        let (q, r) = qr_decompose(&a).unwrap();
        assert!((q[(0, 0)] - 0.6).abs() < 1e-15);
        assert!((q[(1, 0)] - 0.8).abs() < 1e-15);
        assert!((r[(0, 0)] - 5.0).abs() < 1e-15);
        assert_eq!(r[(1, 1)], 0.0);
        assert!(orthogonality_defect(&q) < 1e-15);
    }

    #[test]
    fn tall_random_reconstructs() {
        let a = uniform_matrix(&mut SeededRng::new(9), 6, 4, -1.0, 1.0);
        let (q, r) = qr_decompose(&a).unwrap();
        assert_eq!(q.shape(), (6, 4));
        let back = q.matmul(&r).unwrap();
        let rel = back.sub(&a).unwrap().frobenius_norm() / a.frobenius_norm();
        assert!(rel < 1e-10, "relative error {rel}");
        assert!(orthogonality_defect(&q) < 1e-14);
        for i in 0..4 {
            assert!(r[(i, i)] >= 0.0);
            for j in 0..i {
                assert_eq!(r[(i, j)], 0.0);
            }
        }
    }

    #[test]
    fn wide_input_is_rejected() {
        assert!(qr_decompose(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn random_orthogonal_is_orthogonal() {
        let mut rng = SeededRng::new(1);
        for n in [1, 2, 5, 50, 200] {
            let q = random_orthogonal(&mut rng, n);
            let qqt = q.matmul(&q.transpose()).unwrap();
            assert!(qqt.sub(&Matrix::identity(n)).unwrap().max_abs() < 1e-12, "n = {n}");
        }
    }

    #[test]
    fn one_dimensional_orthogonal_is_plus_or_minus_one() {
        let q = random_orthogonal(&mut SeededRng::new(77), 1);
        assert_eq!(q[(0, 0)].abs(), 1.0);
    }
}
