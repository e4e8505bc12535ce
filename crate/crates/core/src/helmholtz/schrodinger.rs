//! Screened (Yukawa) convolution `e^{-kappa |x|} / (4 pi |x|) * f`.
//!
//! For radial `f` and `g = s f(s)` the convolution is
//! `1/(kappa r) int sinh(kappa min(r,s)) e^{-kappa max(r,s)} g(s) ds`.
//! Growing and decaying exponentials are never formed separately; every
//! cumulative integral is advanced with damped recursions.

use std::sync::Arc;

use crate::error::{invalid, Error, Result};
use crate::radial::quadrature::STENCIL;
use crate::radial::{RadialFn, RadialGrid};
use crate::scalar::{lit, Real};

/// Cached weights of the screened kernel for one mass on one grid.
#[derive(Debug, Clone)]
pub struct SchrodingerKernel<T> {
    grid: Arc<RadialGrid<T>>,
    kappa: T,
    /// weights of `int_interval e^{-kappa (s - left)} g(s) ds`
    falling: Vec<[T; STENCIL]>,
    /// weights of `int_interval e^{-kappa (right - s)} g(s) ds`
    rising: Vec<[T; STENCIL]>,
    stencils: Vec<[(usize, T); STENCIL]>,
    /// `e^{-kappa (right - left)}`
    damping: Vec<T>,
}

impl<T: Real> SchrodingerKernel<T> {
    pub fn new(grid: Arc<RadialGrid<T>>, mass_sq: T) -> Result<Self> {
        if !(mass_sq > T::zero()) || !mass_sq.is_finite() {
            return Err(invalid("mass_sq", format!("must be positive, got {mass_sq}")));
        }
        let kappa = mass_sq.sqrt();
        let rules = grid.odd_rules();
        let mut falling = Vec::with_capacity(rules.len());
        let mut rising = Vec::with_capacity(rules.len());
        let mut stencils = Vec::with_capacity(rules.len());
        let mut damping = Vec::with_capacity(rules.len());
        for rule in rules {
            let d = (-kappa * rule.width).exp();
            falling.push(rule.real_exp_weights(-kappa));
            let mut w = rule.real_exp_weights(kappa);
            for x in w.iter_mut() {
                *x *= d;
            }
            rising.push(w);
            stencils.push(rule.stencil);
            damping.push(d);
        }
        Ok(Self {
            grid,
            kappa,
            falling,
            rising,
            stencils,
            damping,
        })
    }

    pub fn kappa(&self) -> T {
        self.kappa
    }

    pub fn apply(&self, f: &RadialFn<T>) -> Result<RadialFn<T>> {
        if !(Arc::ptr_eq(f.grid(), &self.grid) || f.grid().same_as(&self.grid)) {
            return Err(Error::GridMismatch);
        }
        let nodes = self.grid.nodes();
        let n = nodes.len();
        let k = self.kappa;
        let g: Vec<T> = nodes.iter().zip(f.values()).map(|(&r, &v)| r * v).collect();
        let dot = |w: &[T; STENCIL], st: &[(usize, T); STENCIL]| {
            w.iter()
                .zip(st.iter())
                .fold(T::zero(), |acc, (&wj, &(node, sign))| acc + wj * sign * g[node])
        };
        let fall: Vec<T> = self.falling.iter().zip(&self.stencils).map(|(w, s)| dot(w, s)).collect();
        let rise: Vec<T> = self.rising.iter().zip(&self.stencils).map(|(w, s)| dot(w, s)).collect();

        // near(i) = int_0^{r_i} e^{-k (r_i - s)} g ;  mirror(i) = int_0^{r_i} e^{-k (r_i + s)} g
        let mut near = vec![T::zero(); n];
        let mut mirror = vec![T::zero(); n];
        for t in 0..n - 1 {
            near[t + 1] = self.damping[t] * near[t] + rise[t];
            // e^{-k r_{t+1}} * e^{-k r_t} * fall[t] added to the damped previous value
            let lead = (-k * (nodes[t + 1] + nodes[t])).exp();
            mirror[t + 1] = self.damping[t] * mirror[t] + lead * fall[t];
        }
        // far(i) = int_{r_i} e^{-k (s - r_i)} g ; tail(i) = int_{r_i} e^{-k s} g
        let mut far = vec![T::zero(); n];
        let mut tail = vec![T::zero(); n];
        for t in (0..n - 1).rev() {
            far[t] = self.damping[t] * far[t + 1] + fall[t];
            tail[t] = tail[t + 1] + (-k * nodes[t]).exp() * fall[t];
        }
        let half: T = lit(0.5);
        let values = (0..n)
            .map(|i| {
                let r = nodes[i];
                if r == T::zero() {
                    tail[0]
                } else {
                    let inner = near[i] - mirror[i];
                    let outer = far[i] - (-k * r).exp() * tail[i];
                    half * (inner + outer) / (k * r)
                }
            })
            .collect();
        Ok(RadialFn::from_parts(self.grid.clone(), values))
    }
}

/// `u = (-Delta + mass_sq)^{-1} f`, the convolution with
/// `e^{-sqrt(mass_sq) |x|} / (4 pi |x|)`.
pub fn schrodinger_resolve<T: Real>(mass_sq: T, f: &RadialFn<T>) -> Result<RadialFn<T>> {
    SchrodingerKernel::new(f.grid().clone(), mass_sq)?.apply(f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::radial::{make_grid, radial_residual};

    #[test]
    fn recovers_gaussian() {
        let grid = make_grid(40.0f64, 2000, 1.0).unwrap();
        let f = RadialFn::from_fn(grid.clone(), |r| (7.0 - 4.0 * r * r) * (-r * r).exp());
        let u = schrodinger_resolve(1.0, &f).unwrap();
        for (&r, &v) in grid.nodes().iter().zip(u.values()) {
            assert!((v - (-r * r).exp()).abs() < 1e-8, "r={r} {v}");
        }
        assert!(radial_residual(&u, -1.0, &f).unwrap() < 1e-8);
    }

    #[test]
    fn point_like_source_decays_at_screening_rate() {
        let grid = make_grid(30.0f64, 1500, 1.0).unwrap();
        let f = RadialFn::from_fn(grid.clone(), |r| (-4.0 * r * r).exp());
        let u = schrodinger_resolve(4.0, &f).unwrap();
        let at = |r: f64| r * u.interpolate(r);
        let rate = (at(10.0) / at(12.0)).ln() / 2.0;
        assert!((rate - 2.0).abs() < 1e-8, "{rate}");
        assert!(schrodinger_resolve(0.0, &f).is_err());
    }
}
