//! Sharp wave-breaking threshold for Whitham-type equations
//! `u_t + u u_x + K * u_x = 0` with smooth, integrable, even, decreasing
//! kernels normalized to `K(0) = 1`.
//!
//! * [`threshold`] evaluates the threshold function `G`, the breaking region,
//!   the first integral and the separatrix in closed form.
//! * [`ode`] integrates the auxiliary extremum dynamics and their
//!   slack-perturbed inequality form.
//! * [`whitham`] is a periodic pseudo-spectral solver that measures the
//!   extremal slopes and detects gradient blow-up.

pub mod error;
pub mod ode;
pub mod threshold;
pub mod whitham;

pub use error::{Error, Result};
pub use ode::{Outcome, Trajectory};
pub use threshold::{PhasePoint, ThresholdVerdict};
pub use whitham::{BreakingReport, KernelSpec, ProfileSpec, WaveState};
