//! Product-integration rules on the radial grid.
//!
//! Every grid interval `[r_t, r_{t+1}]` carries a local Lagrange interpolant
//! through `STENCIL` neighbouring nodes. Integrals of the form
//! `int g(s) e^{z s} ds` are evaluated by integrating the interpolant of the
//! smooth factor `g` exactly against the exponential, so oscillatory kernels
//! `e^{i rho s}` cost nothing in accuracy however many periods an interval
//! spans (Filon-type rule). With `z = 0` this reduces to an ordinary
//! composite rule that is exact for polynomials of degree `STENCIL - 1`.

use num_complex::Complex;

use crate::radial::grid::RadialGrid;
use crate::scalar::{from_usize, lit, Real};

/// Interpolation points per interval.
pub const STENCIL: usize = 8;

/// Symmetry of the integrand under `r -> -r`, used to build centred
/// stencils near the origin from reflected nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Parity {
    /// No symmetry assumed: one-sided stencils at the origin.
    None,
    /// `g(-r) = -g(r)` (e.g. `g = r f(r)` with `f` radial).
    Odd,
}

/// Interpolation data of one grid interval.
#[derive(Debug, Clone)]
pub struct LocalRule<T> {
    pub left: T,
    pub width: T,
    /// Node index and sign of each stencil entry (sign `-1` marks a
    /// reflected node for odd integrands).
    pub stencil: [(usize, T); STENCIL],
    /// `basis[j][k]`: coefficient of `tau^k` in the `j`-th Lagrange basis
    /// polynomial, `tau = (s - left) / width`.
    basis: [[T; STENCIL]; STENCIL],
}

impl<T: Real> LocalRule<T> {
    /// Weights of `int_interval g(s) ds`.
    pub fn plain_weights(&self) -> [T; STENCIL] {
        let mut w = [T::zero(); STENCIL];
        for (j, wj) in w.iter_mut().enumerate() {
            let mut acc = T::zero();
            for k in 0..STENCIL {
                acc += self.basis[j][k] / from_usize::<T>(k + 1);
            }
            *wj = acc * self.width;
        }
        w
    }

    /// Weights of `int_interval g(s) e^{z (s - left)} ds`.
    pub fn exp_weights(&self, z: Complex<T>) -> [Complex<T>; STENCIL] {
        let m = moments(z * self.width);
        let mut w = [Complex::new(T::zero(), T::zero()); STENCIL];
        for (j, wj) in w.iter_mut().enumerate() {
            let mut acc = Complex::new(T::zero(), T::zero());
            for (k, mk) in m.iter().enumerate() {
                acc += *mk * self.basis[j][k];
            }
            *wj = acc * self.width;
        }
        w
    }

    /// Weights of `int_interval g(s) e^{a (s - left)} ds` for real `a`.
    pub fn real_exp_weights(&self, a: T) -> [T; STENCIL] {
        let w = self.exp_weights(Complex::new(a, T::zero()));
        let mut out = [T::zero(); STENCIL];
        for (o, c) in out.iter_mut().zip(w.iter()) {
            *o = c.re;
        }
        out
    }

    /// Applies real weights to node samples.
    #[inline]
    pub fn dot(&self, weights: &[T; STENCIL], samples: &[T]) -> T {
        let mut acc = T::zero();
        for (w, &(node, sign)) in weights.iter().zip(self.stencil.iter()) {
            acc += *w * sign * samples[node];
        }
        acc
    }

    /// Applies complex weights to real node samples.
    #[inline]
    pub fn dot_complex(&self, weights: &[Complex<T>; STENCIL], samples: &[T]) -> Complex<T> {
        let mut re = T::zero();
        let mut im = T::zero();
        for (w, &(node, sign)) in weights.iter().zip(self.stencil.iter()) {
            let g = sign * samples[node];
            re += w.re * g;
            im += w.im * g;
        }
        Complex::new(re, im)
    }
}

/// Builds the per-interval rules of a grid.
pub fn local_rules<T: Real>(grid: &RadialGrid<T>, parity: Parity) -> Vec<LocalRule<T>> {
    let nodes = grid.nodes();
    let n = nodes.len();
    let half = (STENCIL / 2) as isize;
    (0..n - 1)
        .map(|t| {
            let left = nodes[t];
            let width = nodes[t + 1] - left;
            let mut first = t as isize - half + 1;
            if first + STENCIL as isize > n as isize {
                first = n as isize - STENCIL as isize;
            }
            if parity == Parity::None && first < 0 {
                first = 0;
            }
            let mut stencil = [(0usize, T::one()); STENCIL];
            let mut scaled = [T::zero(); STENCIL];
            for j in 0..STENCIL {
                let idx = first + j as isize;
                let (node, sign, pos) = if idx < 0 {
                    let m = (-idx) as usize;
                    (m, -T::one(), -nodes[m])
                } else {
                    let m = idx as usize;
                    (m, T::one(), nodes[m])
                };
                stencil[j] = (node, sign);
                scaled[j] = (pos - left) / width;
            }
            LocalRule {
                left,
                width,
                stencil,
                basis: lagrange_basis(&scaled),
            }
        })
        .collect()
}

/// Monomial coefficients of the Lagrange basis polynomials through `x`.
fn lagrange_basis<T: Real>(x: &[T; STENCIL]) -> [[T; STENCIL]; STENCIL] {
    let mut out = [[T::zero(); STENCIL]; STENCIL];
    for j in 0..STENCIL {
        let mut poly = [T::zero(); STENCIL];
        poly[0] = T::one();
        let mut deg = 0;
        let mut denom = T::one();
        for i in 0..STENCIL {
            if i == j {
                continue;
            }
            // poly *= (tau - x_i)
            for k in (0..=deg).rev() {
                poly[k + 1] += poly[k];
                poly[k] *= -x[i];
            }
            deg += 1;
            denom *= x[j] - x[i];
        }
        for k in 0..STENCIL {
            out[j][k] = poly[k] / denom;
        }
    }
    out
}

fn cexp<T: Real>(z: Complex<T>) -> Complex<T> {
    let r = z.re.exp();
    Complex::new(r * z.im.cos(), r * z.im.sin())
}

/// `m_k(zeta) = int_0^1 tau^k e^{zeta tau} d tau` for `k < STENCIL`.
pub(crate) fn moments<T: Real>(zeta: Complex<T>) -> [Complex<T>; STENCIL] {
    let zero = Complex::new(T::zero(), T::zero());
    let mut m = [zero; STENCIL];
    let modulus = (zeta.re * zeta.re + zeta.im * zeta.im).sqrt();
    if modulus <= lit(2.0) {
        // sum_n zeta^n / (n! (n + k + 1))
        let mut power = Complex::new(T::one(), T::zero());
        for n in 0..48usize {
            for (k, mk) in m.iter_mut().enumerate() {
                *mk += power / from_usize::<T>(n + k + 1);
            }
            power = power * zeta / from_usize::<T>(n + 1);
        }
    } else {
        let e = cexp(zeta);
        m[0] = (e - Complex::new(T::one(), T::zero())) / zeta;
        for k in 1..STENCIL {
            m[k] = (e - m[k - 1] * from_usize::<T>(k)) / zeta;
        }
    }
    m
}
