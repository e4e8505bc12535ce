// `!(x > 0)` is used on purpose throughout: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bifurcation;
pub mod breather;
pub mod coupling;
pub mod error;
pub mod helmholtz;
pub mod krylov;
pub mod linearized;
pub mod modes;
pub mod radial;
pub mod ode;
pub mod scalar;
pub mod stationary;

pub use error::{Error, Result};
pub use radial::{RadialFn, RadialGrid, WeightOrder};

pub type Grid64 = RadialGrid<f64>;
pub type RadialFn64 = RadialFn<f64>;
pub type Coupling64 = coupling::Coupling<f64>;
pub type GroundState64 = stationary::GroundState<f64>;
pub type ModeSequence64 = modes::ModeSequence<f64>;
pub type ModePhase64 = linearized::ModePhase<f64>;
pub type PhasePlan64 = linearized::PhasePlan<f64>;
pub type Context64 = bifurcation::BifurcationContext<f64>;
pub type BranchPoint64 = bifurcation::BranchPoint<f64>;
pub type SpaceTimeField64 = breather::SpaceTimeField<f64>;
