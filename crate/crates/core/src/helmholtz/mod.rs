//! Linear radial solvers: Helmholtz convolutions and resolvents, the
//! screened Schrödinger resolvent and far-field extraction.

pub mod far_field;
pub mod kernel;
pub mod schrodinger;

pub use far_field::{far_field, FarFieldData};
pub use kernel::{
    convolve_psi, convolve_psi_tilde, helmholtz_resolve, psi_tilde_profile, HelmholtzKernel,
};
pub use schrodinger::{schrodinger_resolve, SchrodingerKernel};
