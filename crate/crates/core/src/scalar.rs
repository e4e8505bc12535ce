//! Scalar abstraction shared by every numerical routine in the crate.
//!
//! All operators are written against [`Real`], which is satisfied by `f32`
//! and `f64`. Tolerances quoted throughout the documentation refer to `f64`;
//! `f32` instantiations are useful for quick sweeps but cannot reach them.

use nalgebra::RealField;
use num_traits::ToPrimitive;

/// Real floating point scalar: `f32` or `f64`.
pub trait Real: RealField + Copy + ToPrimitive {}

impl<T: RealField + Copy + ToPrimitive> Real for T {}

/// Converts an `f64` literal into the working scalar.
#[inline]
pub fn lit<T: Real>(x: f64) -> T {
    nalgebra::convert(x)
}

/// Converts a count into the working scalar.
#[inline]
pub fn from_usize<T: Real>(n: usize) -> T {
    nalgebra::convert(n as f64)
}

/// Lossy conversion back to `f64` (used for reporting and serialization).
#[inline]
pub fn to_f64<T: Real>(x: T) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// `cot(x)`.
#[inline]
pub fn cot<T: Real>(x: T) -> T {
    x.cos() / x.sin()
}

/// Reduces a phase into `[0, pi)`.
pub fn reduce_phase<T: Real>(phase: T) -> T {
    let pi = T::pi();
    let mut p = phase % pi;
    if p < T::zero() {
        p += pi;
    }
    if p >= pi {
        p -= pi;
    }
    p
}

/// Distance between two phases on the circle `R / (pi Z)`.
pub fn phase_distance<T: Real>(a: T, b: T) -> T {
    let d = reduce_phase(a - b);
    d.min(T::pi() - d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn phase_reduction_wraps_into_half_open_interval() {
        let pi = std::f64::consts::PI;
        assert!((reduce_phase(-0.25) - (pi - 0.25)).abs() < 1e-15);
        assert!((reduce_phase(pi + 0.5) - 0.5).abs() < 1e-14);
        assert_eq!(reduce_phase(0.0), 0.0);
        assert!(phase_distance(1e-9, pi - 1e-9) < 3e-9);
        assert!((phase_distance(0.1f32, 0.3f32) - 0.2).abs() < 1e-6);
    }
}
