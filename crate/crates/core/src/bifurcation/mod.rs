//! Truncated maps F and G, their linearizations at the trivial solution,
//! and continuation of the bifurcating branch.

mod branch;
mod context;
mod kernel;
mod maps;

pub use branch::{
    branch_json_lines, continue_branch, correct, BranchPoint, LinearSolver, NewtonOptions, DENSE_LIMIT,
    MAX_NEWTON,
};
pub use context::{BifurcationContext, NODES_PER_WAVELENGTH};
pub use kernel::{
    kernel_at_origin, kernel_defect, origin_block, range_defect, spectral_gap, transversality_check,
    BlockSpectrum, CoarseGrid, KernelReport, SpectralGap, TransversalityReport, COARSE_RADIUS, GAP_RATIO,
    KERNEL_TOLERANCE, TRANSVERSALITY_THRESHOLD,
};
pub use maps::{assemble_f, assemble_g, assemble_jacobian, assemble_map, Linearization};
