//! Eigenvalues of general real matrices.
//!
//! Householder reduction to upper Hessenberg form followed by the
//! Francis double-shift QR iteration (the eigenvalue-only variant of the
//! EISPACK `orthes`/`hqr` pair).

use serde::{Deserialize, Serialize};

use super::matrix::Matrix;
use crate::error::{Error, Result};

/// Largest dimension accepted by [`eigenvalues`].
pub const MAX_EIGEN_DIM: usize = 5000;

/// Total QR sweeps allowed per unit of dimension before giving up.
const SWEEPS_PER_DIM: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexValue {
    pub re: f64,
    pub im: f64,
}

impl ComplexValue {
    pub const fn new(re: f64, im: f64) -> Self {
        Self { re, im }
    }

    pub fn modulus(self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn conj(self) -> Self {
        Self::new(self.re, -self.im)
    }

    pub fn dist(self, other: ComplexValue) -> f64 {
        (self.re - other.re).hypot(self.im - other.im)
    }
}

/// All `n` eigenvalues of a square matrix, with multiplicity, unordered.
///
/// Complex eigenvalues are returned as conjugate pairs (positive imaginary
/// part first).
pub fn eigenvalues(a: &Matrix) -> Result<Vec<ComplexValue>> {
    if !a.is_square() {
        return Err(Error::dims("eigenvalues", "square matrix", format!("{:?}", a.shape())));
    }
    let n = a.rows();
    if n > MAX_EIGEN_DIM {
        return Err(Error::InvalidArgument(format!(
            "eigenvalues supports n <= {MAX_EIGEN_DIM}, got {n}"
        )));
    }
    if !a.is_finite() {
        return Err(Error::InvalidArgument("eigenvalues of a non-finite matrix".into()));
    }
    let mut h = a.as_slice().to_vec();
    hessenberg_in_place(&mut h, n);
    hqr(&mut h, n)
}

fn hessenberg_in_place(h: &mut [f64], n: usize) {
    if n < 3 {
        return;
    }
    let idx = |i: usize, j: usize| i * n + j;
    let mut ort = vec![0.0; n];
    let high = n - 1;

    for m in 1..high {
        let scale: f64 = (m..=high).map(|i| h[idx(i, m - 1)].abs()).sum();
        if scale == 0.0 {
            continue;
        }
        let mut hh = 0.0;
        for i in (m..=high).rev() {
            ort[i] = h[idx(i, m - 1)] / scale;
            hh += ort[i] * ort[i];
        }
        let mut g = hh.sqrt();
        if ort[m] > 0.0 {
            g = -g;
        }
        hh -= ort[m] * g;
        ort[m] -= g;

        // H := (I - u uᵀ / hh) H
        for j in m..n {
            let mut f = 0.0;
            for i in (m..=high).rev() {
                f += ort[i] * h[idx(i, j)];
            }
            f /= hh;
            for i in m..=high {
                h[idx(i, j)] -= f * ort[i];
            }
        }
        // H := H (I - u uᵀ / hh)
        for i in 0..=high {
            let mut f = 0.0;
            for j in (m..=high).rev() {
                f += ort[j] * h[idx(i, j)];
            }
            f /= hh;
            for j in m..=high {
                h[idx(i, j)] -= f * ort[j];
            }
        }
        ort[m] *= scale;
        h[idx(m, m - 1)] = scale * g;
    }

    for i in 2..n {
        for j in 0..i - 1 {
            h[idx(i, j)] = 0.0;
        }
    }
}

/// Francis double-shift QR on an upper Hessenberg matrix, eigenvalues only.
fn hqr(h: &mut [f64], n: usize) -> Result<Vec<ComplexValue>> {
    let idx = |i: usize, j: usize| i * n + j;
    let mut wr = vec![0.0; n];
    let mut wi = vec![0.0; n];

    let eps = f64::EPSILON;
    let mut norm = 0.0;
    for i in 0..n {
        for j in i.saturating_sub(1)..n {
            norm += h[idx(i, j)].abs();
        }
    }

    let max_sweeps = SWEEPS_PER_DIM * n.max(2);
    let mut sweeps = 0usize;
    let mut exshift = 0.0;
    let mut iter = 0usize;
    let mut en = n as isize - 1;

    let (mut p, mut q, mut r, mut s, mut w, mut x, mut y, mut z);

    while en >= 0 {
        let nu = en as usize;

        // Look for a single small sub-diagonal element.
        let mut l = nu;
        while l > 0 {
            s = h[idx(l - 1, l - 1)].abs() + h[idx(l, l)].abs();
            if s == 0.0 {
                s = norm;
            }
            if h[idx(l, l - 1)].abs() < eps * s {
                break;
            }
            l -= 1;
        }

        if l == nu {
            // One root.
            wr[nu] = h[idx(nu, nu)] + exshift;
            wi[nu] = 0.0;
            en -= 1;
            iter = 0;
        } else if l + 1 == nu {
            // Two roots.
            w = h[idx(nu, nu - 1)] * h[idx(nu - 1, nu)];
            p = (h[idx(nu - 1, nu - 1)] - h[idx(nu, nu)]) / 2.0;
            q = p * p + w;
            z = q.abs().sqrt();
            x = h[idx(nu, nu)] + exshift;
            if q >= 0.0 {
                z = if p >= 0.0 { p + z } else { p - z };
                wr[nu - 1] = x + z;
                wr[nu] = if z != 0.0 { x - w / z } else { x + z };
                wi[nu - 1] = 0.0;
                wi[nu] = 0.0;
            } else {
                wr[nu - 1] = x + p;
                wr[nu] = x + p;
                wi[nu - 1] = z;
                wi[nu] = -z;
            }
            en -= 2;
            iter = 0;
        } else {
            sweeps += 1;
            if sweeps > max_sweeps {
                return Err(Error::NoConvergence {
                    algorithm: "Hessenberg QR eigenvalue iteration",
                    iterations: max_sweeps,
                });
            }

            // Form shift.
            x = h[idx(nu, nu)];
            y = h[idx(nu - 1, nu - 1)];
            w = h[idx(nu, nu - 1)] * h[idx(nu - 1, nu)];

            // Exceptional shifts after 10 and 30 stalled sweeps.
            if iter == 10 {
                // The shift applies to every row not yet deflated, since
                // exshift is added back to each later eigenvalue.
                exshift += x;
                for i in 0..=nu {
                    h[idx(i, i)] -= x;
                }
                s = h[idx(nu, nu - 1)].abs() + h[idx(nu - 1, nu - 2)].abs();
                x = 0.75 * s;
                y = x;
                w = -0.4375 * s * s;
            }
            if iter == 30 {
                s = (y - x) / 2.0;
                s = s * s + w;
                if s > 0.0 {
                    s = s.sqrt();
                    if y < x {
                        s = -s;
                    }
                    s = x - w / ((y - x) / 2.0 + s);
                    for i in 0..=nu {
                        h[idx(i, i)] -= s;
                    }
                    exshift += s;
                    x = 0.964;
                    y = x;
                    w = x;
                }
            }
            iter += 1;

            // Look for two consecutive small sub-diagonal elements.
            let mut m = nu - 2;
            loop {
                z = h[idx(m, m)];
                r = x - z;
                s = y - z;
                p = (r * s - w) / h[idx(m + 1, m)] + h[idx(m, m + 1)];
                q = h[idx(m + 1, m + 1)] - z - r - s;
                r = h[idx(m + 2, m + 1)];
                s = p.abs() + q.abs() + r.abs();
                p /= s;
                q /= s;
                r /= s;
                if m == l {
                    break;
                }
                let lhs = h[idx(m, m - 1)].abs() * (q.abs() + r.abs());
                let rhs = eps
                    * (p.abs()
                        * (h[idx(m - 1, m - 1)].abs() + z.abs() + h[idx(m + 1, m + 1)].abs()));
                if lhs < rhs {
                    break;
                }
                m -= 1;
            }

            for i in m + 2..=nu {
                h[idx(i, i - 2)] = 0.0;
                if i > m + 2 {
                    h[idx(i, i - 3)] = 0.0;
                }
            }

            // Double QR step on rows l..=nu and columns m..=nu.
            x = 0.0;
            for k in m..nu {
                let notlast = k != nu - 1;
                if k != m {
                    p = h[idx(k, k - 1)];
                    q = h[idx(k + 1, k - 1)];
                    r = if notlast { h[idx(k + 2, k - 1)] } else { 0.0 };
                    x = p.abs() + q.abs() + r.abs();
                    if x == 0.0 {
                        continue;
                    }
                    p /= x;
                    q /= x;
                    r /= x;
                }
                s = (p * p + q * q + r * r).sqrt();
                if p < 0.0 {
                    s = -s;
                }
                if s == 0.0 {
                    continue;
                }
                if k != m {
                    h[idx(k, k - 1)] = -s * x;
                } else if l != m {
                    h[idx(k, k - 1)] = -h[idx(k, k - 1)];
                }
                p += s;
                x = p / s;
                y = q / s;
                z = r / s;
                q /= p;
                r /= p;

                for j in k..=nu {
                    let mut t = h[idx(k, j)] + q * h[idx(k + 1, j)];
                    if notlast {
                        t += r * h[idx(k + 2, j)];
                        h[idx(k + 2, j)] -= t * z;
                    }
                    h[idx(k, j)] -= t * x;
                    h[idx(k + 1, j)] -= t * y;
                }

                for i in l..=nu.min(k + 3) {
                    let mut t = x * h[idx(i, k)] + y * h[idx(i, k + 1)];
                    if notlast {
                        t += z * h[idx(i, k + 2)];
                        h[idx(i, k + 2)] -= t * r;
                    }
                    h[idx(i, k)] -= t;
                    h[idx(i, k + 1)] -= t * q;
                }
            }
        }
    }

    Ok(wr
        .into_iter()
        .zip(wi)
        .map(|(re, im)| ComplexValue::new(re, im))
        .collect())
}

/// Largest eigenvalue modulus.
pub fn spectral_radius(a: &Matrix) -> Result<f64> {
    Ok(eigenvalues(a)?
        .into_iter()
        .map(ComplexValue::modulus)
        .fold(0.0, f64::max))
}
