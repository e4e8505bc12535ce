//! Radial grids, quadrature, weighted norms and radial differential operators.

pub mod function;
pub mod grid;
pub mod quadrature;
pub mod stencil;

pub use function::{
    fourier_profile, norm_xq, radial_residual, residual_profile, tail_weight, RadialFn,
    RESIDUAL_BUFFER, RESIDUAL_STENCIL,
    WeightOrder,
};
pub use grid::{make_grid, RadialGrid, MIN_NODES};
