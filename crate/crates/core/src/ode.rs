//! Dormand–Prince 5(4) integrator with step-size control.

use crate::error::{Error, Result};
use crate::scalar::{lit, Real};

/// What the step observer wants after an accepted step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

#[derive(Debug, Clone, Copy)]
pub struct Dopri<T> {
    pub atol: T,
    pub rtol: T,
    pub max_steps: usize,
}

impl<T: Real> Default for Dopri<T> {
    fn default() -> Self {
        Self {
            atol: lit(1e-12),
            rtol: lit(1e-12),
            max_steps: 2_000_000,
        }
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
/// Fifth-order weights minus the embedded fourth-order ones.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

impl<T: Real> Dopri<T> {
    pub fn new(atol: T, rtol: T) -> Self {
        Self {
            atol,
            rtol,
            ..Self::default()
        }
    }

    /// Integrates `y' = f(x, y)` from `x0` to `x1` (either direction).
    /// `h` carries the step size between calls. `observe` sees every
    /// accepted step and may stop early; the state at the stopping point
    /// is returned along with its abscissa.
    pub fn integrate<const N: usize, F, O>(
        &self,
        f: F,
        x0: T,
        y0: [T; N],
        x1: T,
        h: &mut T,
        mut observe: O,
    ) -> Result<(T, [T; N])>
    where
        F: Fn(T, &[T; N]) -> [T; N],
        O: FnMut(T, &[T; N]) -> Control,
    {
        let span = x1 - x0;
        if span == T::zero() {
            return Ok((x0, y0));
        }
        let dir = span.signum();
        let mut x = x0;
        let mut y = y0;
        let mut step = h.abs();
        if step == T::zero() || !step.is_finite() {
            step = span.abs() * lit(1e-3);
        }
        let mut k1 = f(x, &y);
        for _ in 0..self.max_steps {
            let remaining = (x1 - x) * dir;
            if remaining <= T::zero() {
                *h = step;
                return Ok((x, y));
            }
            let last = step >= remaining;
            let hs = if last { remaining } else { step } * dir;

            let mut k = [[T::zero(); N]; 7];
            k[0] = k1;
            for s in 1..7 {
                let mut ys = y;
                for (i, yi) in ys.iter_mut().enumerate() {
                    let mut acc = T::zero();
                    for (j, kj) in k.iter().enumerate().take(s) {
                        if A[s][j] != 0.0 {
                            acc += lit::<T>(A[s][j]) * kj[i];
                        }
                    }
                    *yi += hs * acc;
                }
                let xs = if s == 6 { x + hs } else { x + lit::<T>(C[s]) * hs };
                k[s] = f(xs, &ys);
            }
            // stage 7 is evaluated at the fifth-order solution (FSAL)
            let mut y_new = y;
            for (i, yi) in y_new.iter_mut().enumerate() {
                let mut acc = T::zero();
                for j in 0..6 {
                    acc += lit::<T>(A[6][j]) * k[j][i];
                }
                *yi += hs * acc;
            }
            let mut err = T::zero();
            for i in 0..N {
                let mut e = T::zero();
                for j in 0..7 {
                    e += lit::<T>(E[j]) * k[j][i];
                }
                let scale = self.atol + self.rtol * y[i].abs().max(y_new[i].abs());
                let r = hs * e / scale;
                err = err.max(r.abs());
            }
            if !err.is_finite() {
                step *= lit(0.1);
                if step < T::default_epsilon() * (x.abs() + T::one()) {
                    return Err(Error::Integration(format!("non-finite state near x = {x}")));
                }
                continue;
            }
            if err <= T::one() {
                x = if last { x1 } else { x + hs };
                y = y_new;
                k1 = k[6];
                if observe(x, &y) == Control::Stop {
                    *h = step;
                    return Ok((x, y));
                }
                let grow = if err == T::zero() {
                    lit(5.0)
                } else {
                    (lit::<T>(0.9) * err.powf(lit(-0.2))).min(lit(5.0))
                };
                if !last {
                    step *= grow;
                }
            } else {
                step *= (lit::<T>(0.9) * err.powf(lit(-0.2))).max(lit(0.1));
                if step < T::default_epsilon() * (x.abs() + T::one()) {
                    return Err(Error::Integration(format!("step size underflow near x = {x}")));
                }
            }
        }
        Err(Error::Integration(format!(
            "more than {} steps between {x0} and {x1}",
            self.max_steps
        )))
    }

    /// Integrates and records the state at each of the increasing or
    /// decreasing abscissae `xs` (the first entry is the start point).
    pub fn sample<const N: usize, F>(&self, f: F, xs: &[T], y0: [T; N]) -> Result<Vec<[T; N]>>
    where
        F: Fn(T, &[T; N]) -> [T; N],
    {
        let mut out = Vec::with_capacity(xs.len());
        out.push(y0);
        let mut y = y0;
        let mut h = T::zero();
        for w in xs.windows(2) {
            let (_, next) = self.integrate(&f, w[0], y, w[1], &mut h, |_, _| Control::Continue)?;
            y = next;
            out.push(y);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator() {
        let solver = Dopri::new(1e-13, 1e-13);
        let mut h = 0.0;
        let (x, y) = solver
            .integrate(|_, y: &[f64; 2]| [y[1], -y[0]], 0.0, [0.0, 1.0], 10.0, &mut h, |_, _| {
                Control::Continue
            })
            .unwrap();
        assert_eq!(x, 10.0);
        assert!((y[0] - 10f64.sin()).abs() < 1e-11);
        assert!((y[1] - 10f64.cos()).abs() < 1e-11);
    }

    #[test]
    fn backward_and_stop() {
        let solver = Dopri::<f64>::default();
        let mut h = 0.0;
        let (x, y) = solver
            .integrate(|_, y: &[f64; 1]| [y[0]], 1.0, [1.0], 0.0, &mut h, |_, _| Control::Continue)
            .unwrap();
        assert_eq!(x, 0.0);
        assert!((y[0] - (-1f64).exp()).abs() < 1e-12);
        let (x, _) = solver
            .integrate(|_, _: &[f64; 1]| [1.0], 0.0, [0.0], 5.0, &mut h, |_, y| {
                if y[0] > 1.0 {
                    Control::Stop
                } else {
                    Control::Continue
                }
            })
            .unwrap();
        assert!(x > 1.0 && x < 5.0);
    }
}
