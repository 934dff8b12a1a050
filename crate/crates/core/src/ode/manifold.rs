//! Tracing the invariant manifolds of the saddle `(-2, 2)`.
//!
//! The stable branches are followed in reversed time along the unit-speed
//! field `-f / |f|`, the unstable ones in forward time along `f / |f|`, so the
//! independent variable is arc length. In either direction nearby
//! trajectories are attracted to the branch being traced, which keeps the
//! tracing stable. Together the four branches form the level set of the
//! first integral through the saddle.

use crate::error::{Error, Result};
use crate::threshold::PhasePoint;

use super::field::{analyze_equilibria, rhs_equality, EquilibriumKind};
use super::integrator::{dopri_step, next_step, State};

/// Offset from the saddle along an eigenvector.
pub const SADDLE_OFFSET: f64 = 1e-6;

const RTOL: f64 = 1e-11;
const ATOL: f64 = 1e-13;

#[derive(Debug, Clone, PartialEq)]
pub struct StableManifold {
    /// Branch heading to `x -> -inf`, `y -> +inf`.
    pub upper: Vec<PhasePoint>,
    /// Branch ending on the `x`-axis at the separatrix intercept.
    pub lower: Vec<PhasePoint>,
}

/// The two branches of the unstable manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct UnstableManifold {
    /// Branch heading to `x -> -inf` (blow-up).
    pub outer: Vec<PhasePoint>,
    /// Branch decaying into the origin; stops at `|p| <= ORIGIN_STOP`.
    pub inner: Vec<PhasePoint>,
}

impl UnstableManifold {
    pub fn points(&self) -> impl Iterator<Item = &PhasePoint> {
        self.outer.iter().chain(self.inner.iter())
    }
}

/// Radius at which the inner unstable branch is cut off; the unit-speed
/// field is discontinuous at the degenerate origin.
pub const ORIGIN_STOP: f64 = 1e-3;

#[derive(Clone, Copy, PartialEq)]
enum Stop {
    Never,
    Axis,
    Origin,
}

impl StableManifold {
    pub fn points(&self) -> impl Iterator<Item = &PhasePoint> {
        self.upper.iter().chain(self.lower.iter())
    }
}

fn unit_field(y: &State, sign: f64) -> State {
    let (f, h) = rhs_equality(PhasePoint::new(y[0], y[1]));
    let norm = f.hypot(h);
    if norm == 0.0 {
        [0.0, 0.0]
    } else {
        [sign * f / norm, sign * h / norm]
    }
}

fn reversed_unit_field(_s: f64, y: &State) -> State {
    unit_field(y, -1.0)
}

fn forward_unit_field(_s: f64, y: &State) -> State {
    unit_field(y, 1.0)
}

fn check_trace_args(arc_length: f64, step: f64) -> Result<()> {
    if !(arc_length > 0.0) {
        return Err(Error::parameter("arc_length", format!("{arc_length} must be positive")));
    }
    if !(step > 0.0) {
        return Err(Error::parameter("step", format!("{step} must be positive")));
    }
    Ok(())
}

fn saddle_direction(negative: bool) -> (PhasePoint, [f64; 2]) {
    let saddle = analyze_equilibria()
        .into_iter()
        .find(|r| r.classification == EquilibriumKind::HyperbolicSaddle)
        .expect("the auxiliary system has a hyperbolic saddle");
    let mut v = saddle
        .eigenvector(negative)
        .expect("a hyperbolic saddle has both eigendirections");
    // Orient so that +v points to the right.
    if v[0] < 0.0 {
        v = [-v[0], -v[1]];
    }
    (saddle.location, v)
}

/// Traces both branches up to `arc_length`, sampling every `step` of arc
/// length. The lower branch stops where it meets `y = 0`.
pub fn trace_stable_manifold(arc_length: f64, step: f64) -> Result<StableManifold> {
    check_trace_args(arc_length, step)?;
    let (s0, v) = saddle_direction(true);
    let lower_start = [s0.m1 + SADDLE_OFFSET * v[0], s0.m2 + SADDLE_OFFSET * v[1]];
    let upper_start = [s0.m1 - SADDLE_OFFSET * v[0], s0.m2 - SADDLE_OFFSET * v[1]];
    let f = reversed_unit_field;
    Ok(StableManifold {
        upper: trace_branch(upper_start, arc_length, step, f, Stop::Never)?,
        lower: trace_branch(lower_start, arc_length, step, f, Stop::Axis)?,
    })
}

/// Traces both unstable branches up to `arc_length`, sampling every `step`.
pub fn trace_unstable_manifold(arc_length: f64, step: f64) -> Result<UnstableManifold> {
    check_trace_args(arc_length, step)?;
    let (s0, v) = saddle_direction(false);
    let inner_start = [s0.m1 + SADDLE_OFFSET * v[0], s0.m2 + SADDLE_OFFSET * v[1]];
    let outer_start = [s0.m1 - SADDLE_OFFSET * v[0], s0.m2 - SADDLE_OFFSET * v[1]];
    let f = forward_unit_field;
    Ok(UnstableManifold {
        outer: trace_branch(outer_start, arc_length, step, f, Stop::Never)?,
        inner: trace_branch(inner_start, arc_length, step, f, Stop::Origin)?,
    })
}

fn trace_branch(
    start: State,
    arc_length: f64,
    step: f64,
    f: fn(f64, &State) -> State,
    stop: Stop,
) -> Result<Vec<PhasePoint>> {
    let mut s = 0.0;
    let mut y = start;
    let mut k1 = f(s, &y);
    let mut h = step.min(1e-3);
    let mut next_output = step;
    let mut out = vec![PhasePoint::new(y[0], y[1])];

    while s < arc_length {
        let s_next = (s + h).min(arc_length).min(next_output);
        let h_try = s_next - s;
        if h_try <= 1e-15 * s.max(1.0) {
            return Err(Error::domain("trace_manifold", format!("step underflow at s = {s}")));
        }
        let attempt = dopri_step(&f, s, &y, &k1, h_try, RTOL, ATOL);
        if attempt.error > 1.0 {
            h = next_step(h_try, attempt.error);
            continue;
        }
        if stop == Stop::Axis && attempt.y[1] < 0.0 {
            out.push(locate_axis_crossing(&y, &k1, s, h_try));
            return Ok(out);
        }
        if stop == Stop::Origin && attempt.y[0].hypot(attempt.y[1]) <= ORIGIN_STOP {
            out.push(PhasePoint::new(attempt.y[0], attempt.y[1]));
            return Ok(out);
        }
        let proposed = next_step(h_try, attempt.error);
        h = if h_try < h { h.max(proposed) } else { proposed };
        s = s_next;
        y = attempt.y;
        k1 = attempt.k_end;
        if s >= next_output || s >= arc_length {
            out.push(PhasePoint::new(y[0], y[1]));
            next_output += step;
        }
    }
    Ok(out)
}

/// Bisects the sub-step length until the single-step endpoint sits on `y = 0`.
fn locate_axis_crossing(y: &State, k1: &State, s: f64, h: f64) -> PhasePoint {
    let f = reversed_unit_field;
    let (mut lo, mut hi) = (0.0, h);
    let mut best = *y;
    for _ in 0..100 {
        let mid = 0.5 * (lo + hi);
        let trial = dopri_step(&f, s, y, k1, mid, RTOL, ATOL).y;
        best = trial;
        if trial[1].abs() < 1e-14 {
            break;
        }
        if trial[1] > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    PhasePoint::new(best[0], best[1].max(0.0))
}
