//! Shared fixtures for the criterion benches.

use wavebreak_core::threshold::PhasePoint;
use wavebreak_core::whitham::{KernelSpec, ProfileSpec, WaveState, WhithamSolver};

/// A deterministic spread of second-quadrant points.
pub fn phase_points(count: usize) -> Vec<PhasePoint> {
    (0..count)
        .map(|i| {
            let s = i as f64 / count as f64;
            PhasePoint::new(-8.0 + 7.9 * s, 0.05 + 7.95 * (1.0 - s) * s * 4.0)
        })
        .collect()
}

/// The strict-extension witness on an `n`-point grid, ready to step.
pub fn witness_solver(n: usize) -> (WhithamSolver, WaveState) {
    let period = 160.0;
    let mut solver = WhithamSolver::new(KernelSpec::Gaussian { sigma: 1.0 }, period, n)
        .expect("valid kernel grid");
    let profile = ProfileSpec::for_extrema(-5.0, 3.5, period).expect("balanced profile");
    let state = profile.sample(period, n).expect("profile decays");
    let state = solver.project(&state).expect("matching grid");
    (solver, state)
}
