//! Symmetric eigenvalues (Householder tridiagonalization + implicit QL) and
//! singular values as square roots of the eigenvalues of `A Aᵀ`.

use super::matrix::Matrix;
use crate::error::{Error, Result};

const QL_MAX_ITER: usize = 60;

/// Eigenvalues of a symmetric matrix, ascending. Only the lower triangle is read.
pub fn symmetric_eigenvalues(a: &Matrix) -> Result<Vec<f64>> {
    if !a.is_square() {
        return Err(Error::dims(
            "symmetric_eigenvalues",
            "square matrix",
            format!("{:?}", a.shape()),
        ));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument(
            "symmetric_eigenvalues of a non-finite matrix".into(),
        ));
    }
    let n = a.rows();
    let mut work = a.as_slice().to_vec();
    let (mut d, mut e) = tridiagonalize(&mut work, n);
    tridiagonal_ql(&mut d, &mut e)?;
    d.sort_by(f64::total_cmp);
    Ok(d)
}

/// Singular values, descending; `min(rows, cols)` of them.
///
/// Computed as the square roots of the moduli of the eigenvalues of the
/// smaller of `A Aᵀ` and `Aᵀ A`.
pub fn singular_values(a: &Matrix) -> Result<Vec<f64>> {
    let gram = if a.rows() <= a.cols() {
        a.gram()
    } else {
        a.transpose().gram()
    };
    let mut sv: Vec<f64> = symmetric_eigenvalues(&gram)?
        .into_iter()
        .map(|v| v.abs().sqrt())
        .collect();
    sv.reverse();
    Ok(sv)
}

/// Largest singular value (operator 2-norm).
pub fn spectral_norm(a: &Matrix) -> Result<f64> {
    Ok(singular_values(a)?[0])
}

/// Householder reduction of the symmetric matrix in `a` (row-major, n x n)
/// to tridiagonal form. Returns (diagonal, sub-diagonal) with the
/// sub-diagonal stored in `e[1..]`.
fn tridiagonalize(a: &mut [f64], n: usize) -> (Vec<f64>, Vec<f64>) {
    let idx = |i: usize, j: usize| i * n + j;
    let mut d = vec![0.0; n];
    let mut e = vec![0.0; n];

    for i in (1..n).rev() {
        let l = i - 1;
        let mut h = 0.0;
        if l > 0 {
            let scale: f64 = (0..=l).map(|k| a[idx(i, k)].abs()).sum();
            if scale == 0.0 {
                e[i] = a[idx(i, l)];
            } else {
                for k in 0..=l {
                    a[idx(i, k)] /= scale;
                    h += a[idx(i, k)] * a[idx(i, k)];
                }
                let f = a[idx(i, l)];
                let g = if f >= 0.0 { -h.sqrt() } else { h.sqrt() };
                e[i] = scale * g;
                h -= f * g;
                a[idx(i, l)] = f - g;
                let mut f = 0.0;
                for j in 0..=l {
                    let mut g = 0.0;
                    for k in 0..=j {
                        g += a[idx(j, k)] * a[idx(i, k)];
                    }
                    for k in j + 1..=l {
                        g += a[idx(k, j)] * a[idx(i, k)];
                    }
                    e[j] = g / h;
                    f += e[j] * a[idx(i, j)];
                }
                let hh = f / (h + h);
                for j in 0..=l {
                    let f = a[idx(i, j)];
                    let g = e[j] - hh * f;
                    e[j] = g;
                    for k in 0..=j {
                        a[idx(j, k)] -= f * e[k] + g * a[idx(i, k)];
                    }
                }
            }
        } else {
            e[i] = a[idx(i, l)];
        }
        d[i] = h;
    }
    e[0] = 0.0;
    for i in 0..n {
        d[i] = a[idx(i, i)];
    }
    (d, e)
}

/// Implicit QL with Wilkinson shifts on a symmetric tridiagonal matrix.
/// Eigenvalues overwrite `d`.
fn tridiagonal_ql(d: &mut [f64], e: &mut [f64]) -> Result<()> {
    let n = d.len();
    if n == 0 {
        return Ok(());
    }
    for i in 1..n {
        e[i - 1] = e[i];
    }
    e[n - 1] = 0.0;

    for l in 0..n {
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > QL_MAX_ITER {
                return Err(Error::NoConvergence {
                    algorithm: "tridiagonal QL iteration",
                    iterations: QL_MAX_ITER,
                });
            }

            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            let mut i = m;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::eigen::eigenvalues;
    use crate::numerics::qr::random_orthogonal;
    use crate::numerics::rng::{uniform_matrix, SeededRng};

    #[test]
    fn diagonal_singular_values() {
        let sv = singular_values(&Matrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(sv.len(), 2);
        assert!((sv[0] - 3.0).abs() < 1e-15);
        assert!((sv[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthogonal_matrices_are_isometries() {
        let mut rng = SeededRng::new(21);
        for n in [1, 4, 30, 100] {
            let q = random_orthogonal(&mut rng, n);
            let sv = singular_values(&q).unwrap();
            let worst = sv.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
            assert!(worst < 1e-12, "n = {n}: {worst}");
        }
    }

    #[test]
    fn squares_match_general_eigenvalues_of_gram() {
        let a = uniform_matrix(&mut SeededRng::new(2), 3, 3, -1.0, 1.0);
        let sv = singular_values(&a).unwrap();
        let mut ev: Vec<f64> = eigenvalues(&a.gram()).unwrap().iter().map(|e| e.re).collect();
        ev.sort_by(|x, y| y.total_cmp(x));
        for (s, e) in sv.iter().zip(&ev) {
            assert!((s * s - e).abs() < 1e-12, "{s}^2 vs {e}");
        }
    }

    #[test]
    fn rectangular_inputs_use_smaller_gram() {
        let a = uniform_matrix(&mut SeededRng::new(8), 7, 3, -1.0, 1.0);
        let tall = singular_values(&a).unwrap();
        let wide = singular_values(&a.transpose()).unwrap();
        assert_eq!(tall.len(), 3);
        for (x, y) in tall.iter().zip(&wide) {
            assert!((x - y).abs() < 1e-12);
        }
        assert!(tall.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn symmetric_eigenvalues_match_trace_and_known_spectrum() {
        // Tridiagonal Toeplitz [2, -1] has eigenvalues 2 - 2 cos(k pi / (n + 1)).
        let n = 12;
        let a = Matrix::from_fn(n, n, |i, j| match i.abs_diff(j) {
            0 => 2.0,
            1 => -1.0,
            _ => 0.0,
        });
        let ev = symmetric_eigenvalues(&a).unwrap();
        for (k, v) in ev.iter().enumerate() {
            let expected =
                2.0 - 2.0 * ((k + 1) as f64 * std::f64::consts::PI / (n + 1) as f64).cos();
            assert!((v - expected).abs() < 1e-13);
        }
    }
}
