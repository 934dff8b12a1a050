//! Dormand–Prince 5(4) integration of the planar extremum dynamics.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::threshold::{self, PhasePoint, SEPARATRIX_X_INTERCEPT};

use super::field::rhs_equality;
use super::slack::SlackPair;

pub(crate) type State = [f64; 2];

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// Difference between the 5th and embedded 4th order weights.
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const SAFETY: f64 = 0.9;
const MIN_FACTOR: f64 = 0.2;
const MAX_FACTOR: f64 = 5.0;

pub(crate) struct StepAttempt {
    pub y: State,
    pub k_end: State,
    /// Weighted RMS error; the step is acceptable when `<= 1`.
    pub error: f64,
}

#[inline]
fn axpy(y: &State, terms: &[(f64, &State)], h: f64) -> State {
    let mut out = *y;
    for (c, k) in terms {
        out[0] += h * c * k[0];
        out[1] += h * c * k[1];
    }
    out
}

/// One Dormand–Prince step from `(t, y)` with `k1 = f(t, y)` already known.
pub(crate) fn dopri_step<F>(f: &F, t: f64, y: &State, k1: &State, h: f64, rtol: f64, atol: f64) -> StepAttempt
where
    F: Fn(f64, &State) -> State,
{
    let k2 = f(t + C2 * h, &axpy(y, &[(A21, k1)], h));
    let k3 = f(t + C3 * h, &axpy(y, &[(A31, k1), (A32, &k2)], h));
    let k4 = f(t + C4 * h, &axpy(y, &[(A41, k1), (A42, &k2), (A43, &k3)], h));
    let k5 = f(
        t + C5 * h,
        &axpy(y, &[(A51, k1), (A52, &k2), (A53, &k3), (A54, &k4)], h),
    );
    let k6 = f(
        t + h,
        &axpy(y, &[(A61, k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)], h),
    );
    let y_new = axpy(y, &[(B1, k1), (B3, &k3), (B4, &k4), (B5, &k5), (B6, &k6)], h);
    let k7 = f(t + h, &y_new);

    let mut sum = 0.0;
    for i in 0..2 {
        let err = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        let scale = atol + rtol * y[i].abs().max(y_new[i].abs());
        sum += (err / scale).powi(2);
    }
    let error = (0.5 * sum).sqrt();
    let finite = y_new.iter().chain(k7.iter()).all(|v| v.is_finite());
    StepAttempt {
        y: y_new,
        k_end: k7,
        error: if finite && error.is_finite() {
            error
        } else {
            f64::INFINITY
        },
    }
}

/// New step size from an error estimate.
pub(crate) fn next_step(h: f64, error: f64) -> f64 {
    let factor = if error == 0.0 {
        MAX_FACTOR
    } else if error.is_finite() {
        (SAFETY * error.powf(-0.2)).clamp(MIN_FACTOR, MAX_FACTOR)
    } else {
        MIN_FACTOR
    };
    h * factor
}

/// Tolerances, horizon and event thresholds for phase-plane integration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegrationOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub horizon: f64,
    pub initial_step: f64,
    pub max_steps: usize,
    /// `BlowUp` is declared once `m1 <= -blowup_threshold`.
    pub blowup_threshold: f64,
    /// `ConvergedToOrigin` is declared inside this ball while both components shrink.
    pub origin_radius: f64,
    /// Record only at multiples of this interval (plus the final state);
    /// `None` records every accepted step.
    pub output_interval: Option<f64>,
}

impl IntegrationOptions {
    /// Tight tolerances used when checking conserved quantities.
    pub fn conservation() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            ..Self::sweep()
        }
    }

    /// Tolerances for grid sweeps.
    pub fn sweep() -> Self {
        Self {
            rel_tol: 1e-8,
            abs_tol: 1e-10,
            horizon: 1e6,
            initial_step: 1e-3,
            max_steps: 1_000_000,
            blowup_threshold: 1e6,
            origin_radius: 1e-4,
            output_interval: None,
        }
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = horizon;
        self
    }

    pub fn with_output_interval(mut self, interval: f64) -> Self {
        self.output_interval = Some(interval);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("rel_tol", self.rel_tol),
            ("abs_tol", self.abs_tol),
            ("horizon", self.horizon),
            ("initial_step", self.initial_step),
            ("blowup_threshold", self.blowup_threshold),
            ("origin_radius", self.origin_radius),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(Error::parameter(name, format!("{value} must be positive")));
            }
        }
        if let Some(dt) = self.output_interval {
            if !(dt > 0.0) {
                return Err(Error::parameter("output_interval", format!("{dt} must be positive")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::parameter("max_steps", "must be at least 1"));
        }
        Ok(())
    }
}

impl Default for IntegrationOptions {
    fn default() -> Self {
        Self::sweep()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Outcome {
    /// `m1` passed the blow-up threshold; `t_est` extrapolates `1/|m1|` to zero.
    BlowUp { t_est: f64 },
    ConvergedToOrigin,
    /// The inequality system left the region where the comparison estimates apply.
    DomainExit { t: f64 },
    HorizonReached,
    /// Only on partial trajectories attached to an integration error.
    Aborted,
}

impl Outcome {
    pub fn is_blow_up(&self) -> bool {
        matches!(self, Outcome::BlowUp { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            Outcome::BlowUp { .. } => "blow_up",
            Outcome::ConvergedToOrigin => "converged_to_origin",
            Outcome::DomainExit { .. } => "domain_exit",
            Outcome::HorizonReached => "horizon_reached",
            Outcome::Aborted => "aborted",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub points: Vec<PhasePoint>,
    pub outcome: Outcome,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, PhasePoint)> {
        Some((*self.times.last()?, *self.points.last()?))
    }

    /// `G` at every recorded sample (`None` where it is undefined).
    pub fn g_values(&self) -> Vec<Option<f64>> {
        self.points.iter().map(|p| threshold::eval_g(*p).ok()).collect()
    }

    /// Vertical distance `y - g(x)` to the separatrix, where `x <= -4/e`.
    pub fn separatrix_gap(&self) -> Vec<Option<f64>> {
        self.points
            .iter()
            .map(|p| threshold::separatrix_y(p.m1).ok().map(|g| p.m2 - g))
            .collect()
    }

    /// The conserved first-integral constant at every sample.
    pub fn first_integral_levels(&self) -> Vec<Option<f64>> {
        self.points
            .iter()
            .map(|p| threshold::first_integral_level(*p).ok())
            .collect()
    }
}

/// Root of the least-squares line through `(t, 1/|m|)`.
///
/// Riccati-type blow-up makes `1/|m|` asymptotically linear in `t`. Returns
/// `None` unless the fit decreases and there are at least two samples.
pub fn extrapolate_blowup(samples: &[(f64, f64)]) -> Option<f64> {
    if samples.len() < 2 {
        return None;
    }
    let n = samples.len() as f64;
    let (mut st, mut sr, mut stt, mut str_) = (0.0, 0.0, 0.0, 0.0);
    let t0 = samples[0].0;
    for &(t, m) in samples {
        let (t, r) = (t - t0, 1.0 / m.abs());
        st += t;
        sr += r;
        stt += t * t;
        str_ += t * r;
    }
    let denom = n * stt - st * st;
    if denom <= 0.0 {
        return None;
    }
    let slope = (n * str_ - st * sr) / denom;
    let intercept = (sr - slope * st) / n;
    (slope < 0.0).then(|| t0 - intercept / slope)
}

/// Shared driver for the equality and slack-perturbed systems.
fn drive<F, X>(p0: PhasePoint, f: F, exits: X, opts: &IntegrationOptions) -> Result<Trajectory>
where
    F: Fn(f64, &State) -> State,
    X: Fn(&PhasePoint) -> bool,
{
    opts.validate()?;
    let mut t = 0.0;
    let mut y: State = [p0.m1, p0.m2];
    let mut k1 = f(t, &y);
    let mut h = opts.initial_step.min(opts.horizon);
    let mut traj = Trajectory {
        times: vec![t],
        points: vec![p0],
        outcome: Outcome::HorizonReached,
    };
    let mut recent: Vec<(f64, f64)> = vec![(t, y[0])];
    let mut next_output = opts.output_interval;

    let finish = |mut traj: Trajectory, t: f64, y: State, outcome: Outcome| {
        if traj.times.last().map_or(true, |&last| t > last) {
            traj.times.push(t);
            traj.points.push(PhasePoint::new(y[0], y[1]));
        }
        traj.outcome = outcome;
        traj
    };

    if exits(&p0) {
        return Ok(finish(traj, t, y, Outcome::DomainExit { t }));
    }

    for _ in 0..opts.max_steps {
        // Land exactly on output times and the horizon.
        let mut t_next = (t + h).min(opts.horizon);
        if let Some(target) = next_output {
            t_next = t_next.min(target);
        }
        let h_try = t_next - t;
        if h_try <= 1e-14 * t.abs().max(1.0) {
            let reason = format!("step size underflow (h = {h_try:e})");
            traj.outcome = Outcome::Aborted;
            return Err(Error::Integration {
                t,
                reason,
                partial: Box::new(traj),
            });
        }

        let attempt = dopri_step(&f, t, &y, &k1, h_try, opts.rel_tol, opts.abs_tol);
        if attempt.error > 1.0 {
            h = next_step(h_try, attempt.error);
            continue;
        }

        // Accepted.
        let prev = y;
        t = t_next;
        y = attempt.y;
        k1 = attempt.k_end;
        let proposed = next_step(h_try, attempt.error);
        // Clipping to an output time must not shrink the controller's step.
        h = if h_try < h { h.max(proposed) } else { proposed };

        recent.push((t, y[0]));
        if recent.len() > 3 {
            recent.remove(0);
        }

        let point = PhasePoint::new(y[0], y[1]);
        let at_output = match next_output {
            Some(target) if t >= target => {
                next_output = Some(target + opts.output_interval.unwrap_or(0.0));
                true
            }
            Some(_) => false,
            None => true,
        };
        if at_output {
            traj.times.push(t);
            traj.points.push(point);
        }

        if y[0] <= -opts.blowup_threshold {
            let t_est = extrapolate_blowup(&recent).unwrap_or(t).max(t);
            return Ok(finish(traj, t, y, Outcome::BlowUp { t_est }));
        }
        if exits(&point) {
            return Ok(finish(traj, t, y, Outcome::DomainExit { t }));
        }
        let shrinking = y[0].abs() < prev[0].abs() && y[1].abs() < prev[1].abs();
        if point.norm() <= opts.origin_radius && shrinking {
            return Ok(finish(traj, t, y, Outcome::ConvergedToOrigin));
        }
        if t >= opts.horizon {
            return Ok(finish(traj, t, y, Outcome::HorizonReached));
        }
    }

    traj.outcome = Outcome::Aborted;
    Err(Error::Integration {
        t,
        reason: format!("step budget of {} exhausted", opts.max_steps),
        partial: Box::new(traj),
    })
}

fn check_start(op: &'static str, p0: PhasePoint) -> Result<()> {
    if !p0.is_finite() || !p0.in_second_quadrant() || !(p0.spread() > 0.0) {
        return Err(Error::domain(
            op,
            format!(
                "start ({}, {}) must satisfy m1 <= 0 <= m2 with m2 > m1",
                p0.m1, p0.m2
            ),
        ));
    }
    Ok(())
}

/// Integrates `x' = F(x, y)`, `y' = H(x, y)` until blow-up, convergence to
/// the origin or the horizon.
///
/// Trajectories outside the breaking region leave the second quadrant
/// through the diagonal and decay towards the origin along it; they are
/// followed there rather than stopped.
pub fn integrate_equality(p0: PhasePoint, opts: &IntegrationOptions) -> Result<Trajectory> {
    check_start("integrate_equality", p0)?;
    let f = |_t: f64, y: &State| {
        let (a, b) = rhs_equality(PhasePoint::new(y[0], y[1]));
        [a, b]
    };
    drive(p0, f, |_| false, opts)
}

/// Integrates `x' = F - a(t)`, `y' = H - b(t)`.
///
/// Stops with `DomainExit` when `y < 0` or `y - x <= 4/e`.
pub fn integrate_inequality(
    p0: PhasePoint,
    slack: &SlackPair,
    opts: &IntegrationOptions,
) -> Result<Trajectory> {
    check_start("integrate_inequality", p0)?;
    let f = |t: f64, y: &State| {
        let (fa, hb) = rhs_equality(PhasePoint::new(y[0], y[1]));
        let (a, b) = slack.at(t);
        [fa - a, hb - b]
    };
    let exits = |p: &PhasePoint| p.m2 < 0.0 || p.spread() <= -SEPARATRIX_X_INTERCEPT;
    drive(p0, f, exits, opts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::threshold::{breaking_time_bound, eval_g, first_integral_level};

    #[test]
    fn dopri_is_fifth_order_on_exponential() {
        let f = |_t: f64, y: &State| [y[0], -y[1]];
        let run = |h: f64| {
            let mut y = [1.0, 1.0];
            let mut t = 0.0;
            while t < 1.0 - 1e-12 {
                let k1 = f(t, &y);
                y = dopri_step(&f, t, &y, &k1, h, 1e-6, 1e-6).y;
                t += h;
            }
            (y[0] - 1f64.exp()).abs()
        };
        let order = (run(0.1) / run(0.05)).log2();
        assert!(order > 4.7, "observed order {order}");
    }

    #[test]
    fn blowup_extrapolation_is_exact_for_riccati() {
        // x(t) = -1 / (2 - t)
        let samples: Vec<_> = [1.9, 1.95, 1.99].iter().map(|&t| (t, -1.0 / (2.0 - t))).collect();
        let t = extrapolate_blowup(&samples).unwrap();
        assert!((t - 2.0).abs() < 1e-12);
        assert!(extrapolate_blowup(&[(0.0, -1.0), (1.0, -0.5)]).is_none());
        assert!(extrapolate_blowup(&[(0.0, -1.0)]).is_none());
    }

    #[test]
    fn blow_up_from_minus_two_zero() {
        let p0 = PhasePoint::new(-2.0, 0.0);
        let traj = integrate_equality(p0, &IntegrationOptions::conservation()).unwrap();
        let bound = breaking_time_bound(p0, 1.0).unwrap();
        match traj.outcome {
            Outcome::BlowUp { t_est } => {
                assert!(t_est <= bound * 1.01, "{t_est} vs {bound}");
                assert!(t_est > 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert!(traj.points.last().unwrap().m1 <= -1e6);
    }

    #[test]
    fn converges_outside_region() {
        let traj =
            integrate_equality(PhasePoint::new(-1.0, 0.5), &IntegrationOptions::sweep()).unwrap();
        assert_eq!(traj.outcome, Outcome::ConvergedToOrigin);
        assert!(traj.points.last().unwrap().norm() <= 1e-4);
    }

    #[test]
    fn saddle_is_stationary() {
        let opts = IntegrationOptions::sweep().with_horizon(100.0);
        let traj = integrate_equality(PhasePoint::new(-2.0, 2.0), &opts).unwrap();
        assert_eq!(traj.outcome, Outcome::HorizonReached);
        assert_eq!(*traj.points.last().unwrap(), PhasePoint::new(-2.0, 2.0));
        assert_eq!(*traj.times.last().unwrap(), 100.0);
    }

    #[test]
    fn times_strictly_increase() {
        let opts = IntegrationOptions::sweep().with_output_interval(0.05);
        let traj = integrate_equality(PhasePoint::new(-3.0, 2.0), &opts).unwrap();
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
        assert_eq!(traj.times.len(), traj.points.len());
        // Output grid is hit exactly.
        assert!((traj.times[1] - 0.05).abs() < 1e-15);
        assert!((traj.times[2] - 0.10).abs() < 1e-14);
    }

    #[test]
    fn rejects_invalid_start() {
        let opts = IntegrationOptions::sweep();
        assert!(integrate_equality(PhasePoint::new(1.0, 2.0), &opts).is_err());
        assert!(integrate_equality(PhasePoint::new(0.0, 0.0), &opts).is_err());
        let bad = IntegrationOptions {
            rel_tol: -1.0,
            ..opts
        };
        assert!(matches!(
            integrate_equality(PhasePoint::new(-1.0, 1.0), &bad),
            Err(Error::Parameter { name: "rel_tol", .. })
        ));
    }

    #[test]
    fn step_budget_exhaustion_returns_partial() {
        let opts = IntegrationOptions {
            max_steps: 5,
            ..IntegrationOptions::sweep()
        };
        match integrate_equality(PhasePoint::new(-1.0, 0.5), &opts) {
            Err(Error::Integration { partial, .. }) => {
                assert_eq!(partial.outcome, Outcome::Aborted);
                assert!(!partial.is_empty());
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn zero_slack_matches_equality_system() {
        let p0 = PhasePoint::new(-2.0, 0.0);
        let opts = IntegrationOptions::conservation().with_output_interval(0.1);
        let eq = integrate_equality(p0, &opts).unwrap();
        let ineq = integrate_inequality(p0, &SlackPair::zero(), &opts).unwrap();
        let (Outcome::BlowUp { t_est: a }, Outcome::BlowUp { t_est: b }) = (eq.outcome, ineq.outcome)
        else {
            panic!("both should blow up");
        };
        assert!((a - b).abs() < 1e-6);
        for (p, q) in eq.points.iter().zip(&ineq.points) {
            assert!((p.m1 - q.m1).abs() <= 1e-9 * (1.0 + p.m1.abs()));
            assert!((p.m2 - q.m2).abs() <= 1e-9 * (1.0 + p.m2.abs()));
        }
    }

    #[test]
    fn witness_blows_up_under_slack() {
        let p0 = PhasePoint::new(-5.0, 3.5);
        let bound = breaking_time_bound(p0, 1.0).unwrap();
        let traj =
            integrate_inequality(p0, &SlackPair::constant(1.0, 0.5), &IntegrationOptions::sweep())
                .unwrap();
        match traj.outcome {
            Outcome::BlowUp { t_est } => assert!(t_est <= bound * 1.01),
            other => panic!("unexpected {other:?}"),
        }
        for g in traj.g_values().into_iter().flatten() {
            assert!(g < 1e-8);
        }
    }

    #[test]
    fn inequality_exits_when_y_turns_negative() {
        let traj = integrate_inequality(
            PhasePoint::new(-3.0, 0.1),
            &SlackPair::constant(0.0, 50.0),
            &IntegrationOptions::sweep(),
        )
        .unwrap();
        assert!(matches!(traj.outcome, Outcome::DomainExit { .. }));
        assert!(traj.points.last().unwrap().m2 < 0.0);
    }

    #[test]
    fn first_integral_is_conserved() {
        let p0 = PhasePoint::new(-3.0, 4.0);
        let traj = integrate_equality(p0, &IntegrationOptions::conservation()).unwrap();
        let r0 = first_integral_level(p0).unwrap();
        for p in traj.points.iter().filter(|p| p.m1.abs() <= 1e3) {
            let r = first_integral_level(*p).unwrap();
            assert!((r - r0).abs() / (1.0 + r0.abs()) <= 1e-6);
        }
        assert!(eval_g(p0).unwrap() < 0.0);
    }
}
