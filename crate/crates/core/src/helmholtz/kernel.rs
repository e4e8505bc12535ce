//! Outgoing/standing Helmholtz convolutions for radial sources.
//!
//! For a radial `f` write `g(s) = s f(s)` and `rho = sqrt(mu)`. The kernel
//! `e^{i rho |x|} / (4 pi |x|)` acts on radial functions as
//!
//! ```text
//!   u(r) = 1/(rho r) * int_0^inf sin(rho min(r,s)) e^{i rho max(r,s)} g(s) ds
//! ```
//!
//! whose real and imaginary parts are the convolutions with
//! `Psi = cos(rho |x|)/(4 pi |x|)` and `Psi~ = sin(rho |x|)/(4 pi |x|)`.
//! Both reduce to prefix sums of `int sin(rho s) g` and suffix sums of
//! `int cos(rho s) g`, so each application costs `O(n)`.

use std::sync::Arc;

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::radial::quadrature::STENCIL;
use crate::radial::{RadialFn, RadialGrid};
use crate::scalar::{cot, Real};

/// Cached oscillatory weights for one `mu` on one grid.
#[derive(Debug, Clone)]
pub struct HelmholtzKernel<T> {
    grid: Arc<RadialGrid<T>>,
    mu: T,
    rho: T,
    /// Per interval: weights of `int e^{i rho s} g(s) ds`, already multiplied
    /// by `e^{i rho left}`.
    weights: Vec<[Complex<T>; STENCIL]>,
    stencils: Vec<[(usize, T); STENCIL]>,
}

/// Interval integrals of a source and their cumulative sums.
struct Sums<T> {
    /// `int_0^{r_i} sin(rho s) g(s) ds`
    prefix_sin: Vec<T>,
    /// `int_{r_i}^{r_max} cos(rho s) g(s) ds`
    suffix_cos: Vec<T>,
    /// `int_interval e^{i rho s} g(s) ds`
    parts: Vec<Complex<T>>,
}

pub(crate) fn check_mu<T: Real>(mu: T) -> Result<()> {
    if mu > T::zero() && mu.is_finite() {
        Ok(())
    } else {
        Err(invalid("mu", format!("must be positive, got {mu}")))
    }
}

pub(crate) fn check_tau<T: Real>(tau: T) -> Result<()> {
    if tau > T::zero() && tau < T::pi() {
        Ok(())
    } else {
        Err(invalid("tau", format!("must lie in (0, pi), got {tau}")))
    }
}

impl<T: Real> HelmholtzKernel<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, mu: T) -> Result<Self> {
        check_mu(mu)?;
        let rho = mu.sqrt();
        let z = Complex::new(T::zero(), rho);
        let rules = grid.odd_rules();
        let mut weights = Vec::with_capacity(rules.len());
        let mut stencils = Vec::with_capacity(rules.len());
        for rule in rules {
            let (s, c) = (rho * rule.left).sin_cos();
            let phase = Complex::new(c, s);
            let mut w = rule.exp_weights(z);
            for x in w.iter_mut() {
                *x *= phase;
            }
            weights.push(w);
            stencils.push(rule.stencil);
        }
        Ok(Self {
            grid,
            mu,
            rho,
            weights,
            stencils,
        })
    }

    pub fn grid(&self) -> &Arc<RadialGrid<T>> {
        &self.grid
    }

    pub fn mu(&self) -> T {
        self.mu
    }

    pub fn rho(&self) -> T {
        self.rho
    }

    fn check_grid(&self, f: &RadialFn<T>) -> Result<()> {
        if Arc::ptr_eq(f.grid(), &self.grid) || f.grid().same_as(&self.grid) {
            Ok(())
        } else {
            Err(Error::GridMismatch)
        }
    }

    fn sums(&self, f: &RadialFn<T>) -> Sums<T> {
        let g: Vec<T> = self
            .grid
            .nodes()
            .iter()
            .zip(f.values())
            .map(|(&r, &v)| r * v)
            .collect();
        let parts: Vec<Complex<T>> = self
            .weights
            .iter()
            .zip(&self.stencils)
            .map(|(w, st)| {
                let mut re = T::zero();
                let mut im = T::zero();
                for (wj, &(node, sign)) in w.iter().zip(st.iter()) {
                    let x = sign * g[node];
                    re += wj.re * x;
                    im += wj.im * x;
                }
                Complex::new(re, im)
            })
            .collect();
        let n = self.grid.len();
        let mut prefix_sin = vec![T::zero(); n];
        for t in 0..n - 1 {
            prefix_sin[t + 1] = prefix_sin[t] + parts[t].im;
        }
        let mut suffix_cos = vec![T::zero(); n];
        for t in (0..n - 1).rev() {
            suffix_cos[t] = suffix_cos[t + 1] + parts[t].re;
        }
        Sums {
            prefix_sin,
            suffix_cos,
            parts,
        }
    }

    /// `int_0^{r_max} sin(rho s) s f(s) ds`, i.e. `rho sqrt(pi/2) f^(rho)`.
    pub fn sine_moment(&self, f: &RadialFn<T>) -> Result<T> {
        self.check_grid(f)?;
        Ok(*self.sums(f).prefix_sin.last().unwrap())
    }

    /// `sin(rho r) / (rho r)`, equal to `4 pi / rho * Psi~(r)`.
    pub fn standing_profile(&self) -> RadialFn<T> {
        let rho = self.rho;
        RadialFn::from_fn(self.grid.clone(), |r| {
            if r == T::zero() {
                T::one()
            } else {
                (rho * r).sin() / (rho * r)
            }
        })
    }

    /// `Psi * f`.
    pub fn psi(&self, f: &RadialFn<T>) -> Result<RadialFn<T>> {
        self.check_grid(f)?;
        let sums = self.sums(f);
        Ok(self.assemble_psi(&sums))
    }

    fn assemble_psi(&self, sums: &Sums<T>) -> RadialFn<T> {
        let rho = self.rho;
        let values = self
            .grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                if r == T::zero() {
                    sums.suffix_cos[i]
                } else {
                    let (s, c) = (rho * r).sin_cos();
                    (c * sums.prefix_sin[i] + s * sums.suffix_cos[i]) / (rho * r)
                }
            })
            .collect();
        RadialFn::from_parts(self.grid.clone(), values)
    }

    /// `Psi~ * f`, the rank-one Herglotz part.
    pub fn psi_tilde(&self, f: &RadialFn<T>) -> Result<RadialFn<T>> {
        let a = self.sine_moment(f)?;
        Ok(self.standing_profile().scale(a))
    }

    /// `Psi * f` together with the sine moment `a`, so that
    /// `Psi~ * f = a * standing_profile()`.
    pub fn psi_with_moment(&self, f: &RadialFn<T>) -> Result<(RadialFn<T>, T)> {
        self.check_grid(f)?;
        let sums = self.sums(f);
        let a = *sums.prefix_sin.last().unwrap();
        Ok((self.assemble_psi(&sums), a))
    }

    /// `R^tau f = Psi * f + cot(tau) Psi~ * f`.
    pub fn resolve(&self, tau: T, f: &RadialFn<T>) -> Result<RadialFn<T>> {
        check_tau(tau)?;
        let (psi, a) = self.psi_with_moment(f)?;
        Ok(psi.axpy(cot(tau) * a, &self.standing_profile()))
    }

    /// `R^tau f` evaluated straight from the kernel
    /// `sin(rho |x| + tau) / (4 pi sin(tau) |x|)` without the split into
    /// `Psi` and `Psi~`.
    pub fn resolve_direct(&self, tau: T, f: &RadialFn<T>) -> Result<RadialFn<T>> {
        check_tau(tau)?;
        self.check_grid(f)?;
        let sums = self.sums(f);
        let (st, ct) = tau.sin_cos();
        let n = self.grid.len();
        // int_{r_i}^{r_max} sin(rho s + tau) g(s) ds
        let mut suffix = vec![T::zero(); n];
        for t in (0..n - 1).rev() {
            let p = sums.parts[t];
            suffix[t] = suffix[t + 1] + st * p.re + ct * p.im;
        }
        let rho = self.rho;
        let values = self
            .grid
            .nodes()
            .iter()
            .enumerate()
            .map(|(i, &r)| {
                if r == T::zero() {
                    suffix[0] / st
                } else {
                    ((rho * r + tau).sin() * sums.prefix_sin[i] + (rho * r).sin() * suffix[i])
                        / (rho * r * st)
                }
            })
            .collect();
        Ok(RadialFn::from_parts(self.grid.clone(), values))
    }
}

/// `Psi_mu * f` with `Psi_mu(x) = cos(sqrt(mu)|x|) / (4 pi |x|)`.
pub fn convolve_psi<T: Real>(mu: T, f: &RadialFn<T>) -> Result<RadialFn<T>> {
    HelmholtzKernel::new(f.grid().clone(), mu)?.psi(f)
}

/// `Psi~_mu * f`, an exact multiple of `sin(sqrt(mu) r) / (4 pi r)`.
pub fn convolve_psi_tilde<T: Real>(mu: T, f: &RadialFn<T>) -> Result<RadialFn<T>> {
    HelmholtzKernel::new(f.grid().clone(), mu)?.psi_tilde(f)
}

/// Far-field-phase resolvent `R_mu^tau f`.
pub fn helmholtz_resolve<T: Real>(mu: T, tau: T, f: &RadialFn<T>) -> Result<RadialFn<T>> {
    HelmholtzKernel::new(f.grid().clone(), mu)?.resolve(tau, f)
}

/// `Psi~_mu(r) = sin(sqrt(mu) r) / (4 pi r)` sampled on `grid`.
pub fn psi_tilde_profile<T: Real>(grid: Arc<RadialGrid<T>>, mu: T) -> Result<RadialFn<T>> {
    check_mu(mu)?;
    let rho = mu.sqrt();
    let four_pi = T::two_pi() + T::two_pi();
    Ok(RadialFn::from_fn(grid, |r| {
        if r == T::zero() {
            rho / four_pi
        } else {
            (rho * r).sin() / (four_pi * r)
        }
    }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{fourier_profile, make_grid, radial_residual};

    fn source(grid: &Arc<RadialGrid<f64>>) -> RadialFn<f64> {
        RadialFn::from_fn(grid.clone(), |r| (5.0 - 4.0 * r * r) * (-r * r).exp())
    }

    #[test]
    fn rejects_bad_arguments() {
        let grid = make_grid(20.0f64, 200, 1.0).unwrap();
        let f = source(&grid);
        assert!(convolve_psi(0.0, &f).is_err());
        assert!(helmholtz_resolve(1.0, 0.0, &f).is_err());
        assert!(helmholtz_resolve(1.0, std::f64::consts::PI, &f).is_err());
    }

    #[test]
    fn psi_solves_helmholtz() {
        let grid = make_grid(60.0f64, 3000, 1.0).unwrap();
        let f = source(&grid);
        let w = convolve_psi(1.0, &f).unwrap();
        let res = radial_residual(&w, 1.0, &f).unwrap();
        assert!(res < 1e-6 * f.max_abs(), "{res}");
        let wt = convolve_psi_tilde(1.0, &f).unwrap();
        assert!(radial_residual(&wt, 1.0, &RadialFn::zeros(grid.clone())).unwrap() < 1e-7);
        // rank-one coefficient against the Fourier profile
        let fh = fourier_profile(&f, 1.0).unwrap();
        let expected = psi_tilde_profile(grid, 1.0)
            .unwrap()
            .scale(4.0 * std::f64::consts::PI * (std::f64::consts::PI / 2.0).sqrt() * fh);
        for (a, b) in wt.values().iter().zip(expected.values()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn split_and_direct_paths_agree() {
        let grid = make_grid(30.0f64, 1500, 1.0).unwrap();
        let f = source(&grid);
        let k = HelmholtzKernel::new(grid, 2.0).unwrap();
        for tau in [0.3, 1.0, 2.9] {
            let a = k.resolve(tau, &f).unwrap();
            let b = k.resolve_direct(tau, &f).unwrap();
            let scale = a.max_abs();
            for (x, y) in a.values().iter().zip(b.values()) {
                assert!((x - y).abs() <= 1e-12 * scale);
            }
        }
    }
}
