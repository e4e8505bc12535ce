use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::helmholtz::kernel::check_mu;
use crate::radial::RadialFn;
use crate::scalar::{lit, to_f64, Real};

/// Fit window as fractions of `r_max`.
pub const WINDOW: (f64, f64) = (0.6, 0.9);

/// Oscillation periods the window must contain.
pub const MIN_PERIODS: f64 = 8.0;

/// Far-field data of a radial Helmholtz solution,
/// `r u(r) ~ A sin(rho r) + B cos(rho r) = c sin(rho r + sigma)`.
///
/// `alpha = 4 pi A` and `beta = 4 pi B` are the coefficients of
/// `sin(rho r)/(4 pi r)` and `cos(rho r)/(4 pi r)`; `sigma` lies in `[0, pi)`
/// and any sign flip is carried by `c`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FarFieldData<T> {
    pub alpha: T,
    pub beta: T,
    pub c: T,
    pub sigma: T,
    /// Root-mean-square misfit over the window relative to the RMS of `r u`.
    pub fit_residual: T,
}

impl<T: Real> FarFieldData<T> {
    /// Builds the record from the sine/cosine amplitudes of `r u`.
    pub fn from_amplitudes(a: T, b: T, fit_residual: T) -> Self {
        let four_pi = T::two_pi() + T::two_pi();
        let mut sigma = b.atan2(a);
        let mut c = (a * a + b * b).sqrt();
        if sigma < T::zero() {
            sigma += T::pi();
            c = -c;
        }
        if sigma >= T::pi() {
            sigma -= T::pi();
            c = -c;
        }
        Self {
            alpha: four_pi * a,
            beta: four_pi * b,
            c,
            sigma,
            fit_residual,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "alpha": to_f64(self.alpha),
            "beta": to_f64(self.beta),
            "c": to_f64(self.c),
            "sigma": to_f64(self.sigma),
            "fit_residual": to_f64(self.fit_residual),
        })
        .to_string()
    }
}

/// Least-squares fit of `r u(r)` against `sin(rho r)`, `cos(rho r)` over
/// `[0.6 r_max, 0.9 r_max]`.
pub fn far_field<T: Real>(mu: T, u: &RadialFn<T>) -> Result<FarFieldData<T>> {
    check_mu(mu)?;
    let grid = u.grid();
    let rho = mu.sqrt();
    let start = grid.r_max() * lit(WINDOW.0);
    let end = grid.r_max() * lit(WINDOW.1);
    let periods = to_f64(rho * (end - start) / T::two_pi());
    if periods < MIN_PERIODS {
        return Err(Error::WindowTooShort {
            periods,
            start: to_f64(start),
            end: to_f64(end),
            required: MIN_PERIODS,
        });
    }
    let (mut ss, mut sc, mut cc, mut sy, mut cy, mut yy) =
        (T::zero(), T::zero(), T::zero(), T::zero(), T::zero(), T::zero());
    let mut samples = Vec::new();
    for (&r, &v) in grid.nodes().iter().zip(u.values()) {
        if r < start || r > end {
            continue;
        }
        let (s, c) = (rho * r).sin_cos();
        let y = r * v;
        ss += s * s;
        sc += s * c;
        cc += c * c;
        sy += s * y;
        cy += c * y;
        yy += y * y;
        samples.push((s, c, y));
    }
    let det = ss * cc - sc * sc;
    if !(det > T::zero()) {
        return Err(Error::IllConditioned(format!(
            "far-field window holds {} nodes",
            samples.len()
        )));
    }
    let a = (sy * cc - cy * sc) / det;
    let b = (cy * ss - sy * sc) / det;
    let misfit = samples
        .iter()
        .fold(T::zero(), |acc, &(s, c, y)| {
            let e = y - a * s - b * c;
            acc + e * e
        });
    let fit_residual = if yy > T::zero() {
        (misfit / yy).sqrt()
    } else {
        T::zero()
    };
    Ok(FarFieldData::from_amplitudes(a, b, fit_residual))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::helmholtz::kernel::psi_tilde_profile;
    use crate::radial::make_grid;
    use std::f64::consts::PI;

    #[test]
    fn exact_profiles() {
        let grid = make_grid(200.0f64, 8192, 1.0).unwrap();
        let ff = far_field(1.0, &psi_tilde_profile(grid.clone(), 1.0).unwrap()).unwrap();
        assert!((ff.alpha - 1.0).abs() < 1e-12 && ff.beta.abs() < 1e-12 && ff.sigma.abs() < 1e-12);

        let u = RadialFn::from_fn(grid.clone(), |r| {
            if r == 0.0 {
                0.0
            } else {
                (r * 2.0 + PI / 3.0).sin() / r
            }
        });
        let ff = far_field(4.0, &u).unwrap();
        assert!((ff.sigma - PI / 3.0).abs() < 1e-12 && (ff.c - 1.0).abs() < 1e-12);
        assert!(ff.fit_residual < 1e-12);
    }

    #[test]
    fn negative_phase_flips_amplitude() {
        let grid = make_grid(200.0f64, 8192, 1.0).unwrap();
        let u = RadialFn::from_fn(grid, |r| {
            if r == 0.0 {
                0.0
            } else {
                2.0 * (r - 0.5).sin() / r
            }
        });
        let ff = far_field(1.0, &u).unwrap();
        assert!((ff.sigma - (PI - 0.5)).abs() < 1e-12);
        assert!((ff.c + 2.0).abs() < 1e-12);
    }

    #[test]
    fn short_window_is_rejected() {
        let grid = make_grid(40.0f64, 2048, 1.0).unwrap();
        let u = psi_tilde_profile(grid, 1.0).unwrap();
        assert!(matches!(far_field(1.0, &u), Err(Error::WindowTooShort { .. })));
    }
}
