//! The auxiliary planar systems: the equality system `x' = F`, `y' = H` and
//! its slack-perturbed form `x' = F - a(t)`, `y' = H - b(t)`.

mod field;
mod grid;
mod integrator;
mod manifold;
mod slack;

pub use field::{
    analyze_equilibria, f_component, h_component, jacobian, rhs_equality, EquilibriumKind,
    EquilibriumReport,
};
pub use grid::{classify_grid, ClassificationMap, GridCell, GridStats, SEPARATRIX_BAND};
pub use integrator::{
    extrapolate_blowup, integrate_equality, integrate_inequality, IntegrationOptions, Outcome,
    Trajectory,
};
pub use manifold::{
    trace_stable_manifold, trace_unstable_manifold, StableManifold, UnstableManifold, ORIGIN_STOP,
    SADDLE_OFFSET,
};
pub use slack::{SlackPair, SlackProfile};
