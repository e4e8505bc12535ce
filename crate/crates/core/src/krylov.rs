//! Restarted GMRES for matrix-free operators on flat vectors.

use crate::error::{Error, Result};
use crate::scalar::{to_f64, Real};

#[derive(Debug, Clone, Copy)]
pub struct Gmres<T> {
    /// Stop when `||b - A x|| <= rtol ||b||`.
    pub rtol: T,
    pub restart: usize,
    pub max_iter: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct GmresStats {
    pub iterations: usize,
    pub relative_residual: f64,
}

fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |s, (&x, &y)| s + x * y)
}

fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

impl<T: Real> Gmres<T> {
    /// Solves `A x = b` from `x = 0`.
    pub fn solve(
        &self,
        apply: impl Fn(&[T]) -> Result<Vec<T>>,
        b: &[T],
    ) -> Result<(Vec<T>, GmresStats)> {
        let n = b.len();
        let mut x = vec![T::zero(); n];
        let b_norm = norm(b);
        if b_norm == T::zero() {
            return Ok((
                x,
                GmresStats {
                    iterations: 0,
                    relative_residual: 0.0,
                },
            ));
        }
        let target = self.rtol * b_norm;
        let mut total = 0;
        let mut r = b.to_vec();
        loop {
            let beta = norm(&r);
            if beta <= target {
                return Ok((
                    x,
                    GmresStats {
                        iterations: total,
                        relative_residual: to_f64(beta / b_norm),
                    },
                ));
            }
            if total >= self.max_iter {
                return Err(Error::LinearSolver(format!(
                    "GMRES reached {} iterations at relative residual {:e}",
                    total,
                    to_f64(beta / b_norm)
                )));
            }
            let m = self.restart.min(self.max_iter - total).max(1);
            let mut basis: Vec<Vec<T>> = Vec::with_capacity(m + 1);
            basis.push(r.iter().map(|&v| v / beta).collect());
            // Hessenberg columns after Givens rotations
            let mut h: Vec<Vec<T>> = Vec::with_capacity(m);
            let mut cs: Vec<(T, T)> = Vec::with_capacity(m);
            let mut g = vec![T::zero(); m + 1];
            g[0] = beta;
            let mut used = 0;
            for j in 0..m {
                let mut w = apply(&basis[j])?;
                let mut col = vec![T::zero(); j + 2];
                // modified Gram-Schmidt, twice for stability
                for _ in 0..2 {
                    for (i, v) in basis.iter().enumerate() {
                        let c = dot(&w, v);
                        col[i] += c;
                        for (wk, &vk) in w.iter_mut().zip(v) {
                            *wk -= c * vk;
                        }
                    }
                }
                let wn = norm(&w);
                col[j + 1] = wn;
                for (i, &(c, s)) in cs.iter().enumerate() {
                    let (a, b) = (col[i], col[i + 1]);
                    col[i] = c * a + s * b;
                    col[i + 1] = -s * a + c * b;
                }
                let (a, b) = (col[j], col[j + 1]);
                let d = (a * a + b * b).sqrt();
                let (c, s) = if d == T::zero() {
                    (T::one(), T::zero())
                } else {
                    (a / d, b / d)
                };
                col[j] = d;
                col[j + 1] = T::zero();
                cs.push((c, s));
                g[j + 1] = -s * g[j];
                g[j] = c * g[j];
                h.push(col);
                used = j + 1;
                total += 1;
                if g[j + 1].abs() <= target || wn == T::zero() {
                    break;
                }
                basis.push(w.iter().map(|&v| v / wn).collect());
            }
            // back substitution for the Krylov coefficients
            let mut y = vec![T::zero(); used];
            for i in (0..used).rev() {
                let mut acc = g[i];
                for k in i + 1..used {
                    acc -= h[k][i] * y[k];
                }
                y[i] = acc / h[i][i];
            }
            for (k, &yk) in y.iter().enumerate() {
                for (xi, &vi) in x.iter_mut().zip(&basis[k]) {
                    *xi += yk * vi;
                }
            }
            let ax = apply(&x)?;
            r = b.iter().zip(&ax).map(|(&bi, &ai)| bi - ai).collect();
        }
    }
}
