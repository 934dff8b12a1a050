//! Periodic pseudo-spectral solver for `u_t + u u_x + ∫ K(x - ξ) u_ξ dξ = 0`.
//!
//! The real line is replaced by a periodic cell large enough that the kernel
//! and the initial profile are below `1e-12` at its edge.

mod kernel;
mod profile;
mod solver;
mod state;

pub use kernel::{build_kernel, wavenumber, KernelSpec, SymbolTable, KERNEL_TAIL_LIMIT};
pub use profile::{Bump, ProfileSpec, PROFILE_TAIL_LIMIT};
pub use solver::{
    run, validate_bound, BreakingReport, RunOptions, RunResult, SeriesSample, SlopeExtrema,
    WhithamSolver, BOUND_TOLERANCE,
};
pub use state::{dealias_cutoff, dealias_mask, SpectralGrid, WaveState};
