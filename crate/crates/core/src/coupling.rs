use std::sync::Arc;

use crate::error::{invalid, Result};
use crate::radial::{RadialFn, RadialGrid};
use crate::scalar::Real;

/// Coupling `Gamma(x)` of the cubic term, constant or a tabulated radial
/// profile.
#[derive(Debug, Clone)]
pub enum Coupling<T> {
    Constant(T),
    Profile(RadialFn<T>),
}

impl<T: Real> Coupling<T> {
    pub fn constant(gamma0: T) -> Self {
        Coupling::Constant(gamma0)
    }

    /// Tabulated profile; samples must be finite and the grid must reach
    /// every radius the coupling is evaluated at (beyond `r_max` the last
    /// value is held).
    pub fn profile(gamma: RadialFn<T>) -> Result<Self> {
        if gamma.max_abs() == T::zero() {
            return Err(invalid("gamma", "profile vanishes identically"));
        }
        Ok(Coupling::Profile(gamma))
    }

    pub fn at(&self, r: T) -> T {
        match self {
            Coupling::Constant(g) => *g,
            Coupling::Profile(p) => {
                if r >= p.grid().r_max() {
                    *p.values().last().unwrap()
                } else {
                    p.interpolate(r)
                }
            }
        }
    }

    /// Value at the origin.
    pub fn center(&self) -> T {
        self.at(T::zero())
    }

    pub fn as_constant(&self) -> Option<T> {
        match self {
            Coupling::Constant(g) => Some(*g),
            Coupling::Profile(_) => None,
        }
    }

    /// Samples on `grid`, reusing the stored values when the grids agree.
    pub fn sample(&self, grid: &Arc<RadialGrid<T>>) -> RadialFn<T> {
        match self {
            Coupling::Profile(p) if p.grid().same_as(grid) => {
                RadialFn::from_parts(grid.clone(), p.values().to_vec())
            }
            _ => RadialFn::from_fn(grid.clone(), |r| self.at(r)),
        }
    }

    /// Essential infimum over the samples (constant: the value itself).
    pub fn min_value(&self) -> T {
        match self {
            Coupling::Constant(g) => *g,
            Coupling::Profile(p) => p.values().iter().fold(p.values()[0], |m, &v| m.min(v)),
        }
    }
}
