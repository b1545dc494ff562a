//! Regularized least squares: `W = Y Xᵀ (X Xᵀ + μI)⁻¹`.

use super::matrix::{dot, Matrix};
use crate::error::{Error, Result};

/// Ridge regression readout weights.
///
/// `x_states` is `N_r x T`, `y_targets` is `N_o x T`; the result is
/// `N_o x N_r`. The normal matrix `X Xᵀ + μI` is factored by Cholesky; if that
/// fails (indefinite or singular in floating point) a partially pivoted LU
/// solve is attempted, and a numerically singular system is reported with
/// its estimated rank.
pub fn ridge_solve(x_states: &Matrix, y_targets: &Matrix, mu: f64) -> Result<Matrix> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::InvalidArgument(format!("ridge mu must be finite and >= 0, got {mu}")));
    }
    if x_states.cols() != y_targets.cols() {
        return Err(Error::dims(
            "ridge_solve (time steps)",
            x_states.cols(),
            y_targets.cols(),
        ));
    }
    let mut normal = x_states.gram();
    for i in 0..normal.rows() {
        normal[(i, i)] += mu;
    }
    // Right-hand side X Yᵀ, one column per output.
    let rhs = y_targets.cross_columns(x_states, 0..x_states.cols())?;
    let solution = solve_symmetric(&normal, &rhs)?;
    Ok(solution.transpose())
}

/// Solves `A Z = B` for symmetric `A`: Cholesky first, pivoted LU fallback.
pub fn solve_symmetric(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    if !a.is_finite() || !b.is_finite() {
        return Err(Error::InvalidArgument("linear system has non-finite entries".into()));
    }
    match cholesky(a) {
        Some(l) => Ok(cholesky_solve(&l, b)),
        None => lu_solve(a, b),
    }
}

/// Lower Cholesky factor, or `None` when a pivot is not strictly positive.
pub fn cholesky(a: &Matrix) -> Option<Matrix> {
    let n = a.rows();
    let mut l = Matrix::zeros(n, n);
    for j in 0..n {
        let (lj, _) = l.as_slice()[j * n..].split_at(j);
        let s = a[(j, j)] - dot(lj, lj);
        if s.is_nan() || s <= 0.0 || !s.is_finite() {
            return None;
        }
        let diag = s.sqrt();
        l[(j, j)] = diag;
        for i in j + 1..n {
            let data = l.as_slice();
            let v = a[(i, j)] - dot(&data[i * n..i * n + j], &data[j * n..j * n + j]);
            l[(i, j)] = v / diag;
        }
    }
    Some(l)
}

fn cholesky_solve(l: &Matrix, b: &Matrix) -> Matrix {
    let n = l.rows();
    let m = b.cols();
    let mut z = b.clone();
    // Forward: L y = b
    for i in 0..n {
        for k in 0..i {
            let lik = l[(i, k)];
            if lik != 0.0 {
                let (head, tail) = z.as_mut_slice().split_at_mut(i * m);
                let src = &head[k * m..(k + 1) * m];
                for (t, s) in tail[..m].iter_mut().zip(src) {
                    *t -= lik * s;
                }
            }
        }
        let d = l[(i, i)];
        z.row_mut(i).iter_mut().for_each(|v| *v /= d);
    }
    // Backward: Lᵀ x = y
    for i in (0..n).rev() {
        for k in i + 1..n {
            let lki = l[(k, i)];
            if lki != 0.0 {
                let (head, tail) = z.as_mut_slice().split_at_mut(k * m);
                let dst = &mut head[i * m..(i + 1) * m];
                for (t, s) in dst.iter_mut().zip(&tail[..m]) {
                    *t -= lki * s;
                }
            }
        }
        let d = l[(i, i)];
        z.row_mut(i).iter_mut().for_each(|v| *v /= d);
    }
    z
}

/// Gaussian elimination with partial pivoting.
pub fn lu_solve(a: &Matrix, b: &Matrix) -> Result<Matrix> {
    let n = a.rows();
    if !a.is_square() || b.rows() != n {
        return Err(Error::dims("lu_solve", format!("{n}x{n} system"), format!("{:?}", b.shape())));
    }
    let m = b.cols();
    let mut u = a.clone();
    let mut z = b.clone();
    let tol = f64::EPSILON * u.max_abs();
    let mut rank = 0;
    let mut singular = false;

    for k in 0..n {
        let (piv, piv_abs) = (k..n)
            .map(|i| (i, u[(i, k)].abs()))
            .fold((k, -1.0), |best, cur| if cur.1 > best.1 { cur } else { best });
        if piv_abs <= tol {
            singular = true;
            continue;
        }
        rank += 1;
        if piv != k {
            swap_rows(&mut u, piv, k);
            swap_rows(&mut z, piv, k);
        }
        let pivot = u[(k, k)];
        for i in k + 1..n {
            let factor = u[(i, k)] / pivot;
            if factor == 0.0 {
                continue;
            }
            for j in k..n {
                u[(i, j)] -= factor * u[(k, j)];
            }
            for j in 0..m {
                z[(i, j)] -= factor * z[(k, j)];
            }
        }
    }
    if singular {
        return Err(Error::Singular { rank, size: n });
    }
    for i in (0..n).rev() {
        for j in 0..m {
            let mut s = z[(i, j)];
            for k in i + 1..n {
                s -= u[(i, k)] * z[(k, j)];
            }
            z[(i, j)] = s / u[(i, i)];
        }
    }
    Ok(z)
}

fn swap_rows(m: &mut Matrix, a: usize, b: usize) {
    let cols = m.cols();
    let (lo, hi) = (a.min(b), a.max(b));
    let (head, tail) = m.as_mut_slice().split_at_mut(hi * cols);
    head[lo * cols..(lo + 1) * cols].swap_with_slice(&mut tail[..cols]);
}
