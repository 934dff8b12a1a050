use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ode::extrapolate_blowup;
use crate::threshold::{classify, PhasePoint, ThresholdVerdict};

use super::kernel::{build_kernel, KernelSpec, SymbolTable};
use super::profile::ProfileSpec;
use super::state::{dealias_cutoff, SpectralGrid, WaveState};

/// Relative slack on the breaking-time bound.
pub const BOUND_TOLERANCE: f64 = 0.05;

/// Grid extrema of `u_x` with their refined locations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeExtrema {
    pub point: PhasePoint,
    pub argmin: usize,
    pub argmax: usize,
    pub x_min: f64,
    pub x_max: f64,
}

/// Pseudo-spectral discretization of `u_t + u u_x + K * u_x = 0` on one grid.
pub struct WhithamSolver {
    grid: SpectralGrid,
    symbol: SymbolTable,
    // Per-instance buffers.
    spec: Vec<Complex64>,
    phys: Vec<f64>,
}

impl WhithamSolver {
    pub fn new(kernel: KernelSpec, period: f64, n: usize) -> Result<Self> {
        let grid = SpectralGrid::new(period, n)?;
        let symbol = build_kernel(kernel, period, n)?;
        Ok(Self {
            grid,
            symbol,
            spec: Vec::with_capacity(n),
            phys: Vec::with_capacity(n),
        })
    }

    pub fn grid(&self) -> &SpectralGrid {
        &self.grid
    }

    pub fn symbol(&self) -> &SymbolTable {
        &self.symbol
    }

    /// `∫ K(x - ξ) u_ξ(ξ) dξ` on the grid.
    pub fn convolution_term(&mut self, state: &WaveState) -> Result<Vec<f64>> {
        self.grid.check(state)?;
        let mut spec = std::mem::take(&mut self.spec);
        self.grid.forward(&state.samples, &mut spec);
        for ((c, &k), &s) in spec.iter_mut().zip(&self.grid.kappa).zip(&self.symbol.values) {
            *c *= Complex64::new(0.0, k * s);
        }
        let mut out = Vec::with_capacity(state.n());
        self.grid.inverse(&mut spec, &mut out);
        self.spec = spec;
        Ok(out)
    }

    /// Spectral right-hand side `-½ (u²)_x - K * u_x` for the spectrum `uh`,
    /// with the quadratic term dealiased.
    fn rhs(&mut self, uh: &[Complex64], out: &mut Vec<Complex64>) {
        let mut work = std::mem::take(&mut self.spec);
        work.clear();
        work.extend_from_slice(uh);
        let mut u = std::mem::take(&mut self.phys);
        self.grid.inverse(&mut work, &mut u);
        for v in u.iter_mut() {
            *v *= *v;
        }
        self.grid.forward(&u, out);
        for (i, c) in out.iter_mut().enumerate() {
            let k = self.grid.kappa[i];
            let nonlinear = if self.grid.mask[i] {
                *c * Complex64::new(0.0, -0.5 * k)
            } else {
                Complex64::default()
            };
            let linear = uh[i] * Complex64::new(0.0, -k * self.symbol.values[i]);
            *c = nonlinear + linear;
        }
        self.spec = work;
        self.phys = u;
    }

    /// One classical Runge–Kutta step of size `dt`.
    pub fn step(&mut self, state: &WaveState, dt: f64) -> Result<WaveState> {
        self.grid.check(state)?;
        let n = state.n();
        let mut u0 = Vec::with_capacity(n);
        self.grid.forward(&state.samples, &mut u0);

        let mut k1 = Vec::with_capacity(n);
        let mut k2 = Vec::with_capacity(n);
        let mut k3 = Vec::with_capacity(n);
        let mut k4 = Vec::with_capacity(n);
        let mut stage: Vec<Complex64> = vec![Complex64::default(); n];

        self.rhs(&u0, &mut k1);
        for i in 0..n {
            stage[i] = u0[i] + k1[i] * (0.5 * dt);
        }
        self.rhs(&stage, &mut k2);
        for i in 0..n {
            stage[i] = u0[i] + k2[i] * (0.5 * dt);
        }
        self.rhs(&stage, &mut k3);
        for i in 0..n {
            stage[i] = u0[i] + k3[i] * dt;
        }
        self.rhs(&stage, &mut k4);
        for i in 0..n {
            stage[i] = u0[i] + (k1[i] + (k2[i] + k3[i]) * 2.0 + k4[i]) * (dt / 6.0);
        }
        let mut samples = Vec::with_capacity(n);
        self.grid.inverse(&mut stage, &mut samples);
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::ResolutionLoss {
                t: state.time + dt,
                tail_fraction: f64::NAN,
            });
        }
        Ok(WaveState {
            period: state.period,
            samples,
            time: state.time + dt,
        })
    }

    /// Removes modes above the two-thirds cutoff.
    pub fn project(&mut self, state: &WaveState) -> Result<WaveState> {
        self.grid.check(state)?;
        let mut spec = Vec::with_capacity(state.n());
        self.grid.forward(&state.samples, &mut spec);
        for (c, &keep) in spec.iter_mut().zip(&self.grid.mask) {
            if !keep {
                *c = Complex64::default();
            }
        }
        let mut samples = Vec::with_capacity(state.n());
        self.grid.inverse(&mut spec, &mut samples);
        Ok(WaveState {
            samples,
            ..state.clone()
        })
    }

    /// Fraction of the non-mean energy held in the top third of the retained band.
    pub fn tail_fraction(&mut self, state: &WaveState) -> Result<f64> {
        self.grid.check(state)?;
        let n = state.n();
        let mut spec = std::mem::take(&mut self.spec);
        self.grid.forward(&state.samples, &mut spec);
        let cut = dealias_cutoff(n);
        let tail_start = 2 * cut / 3;
        let (mut total, mut tail) = (0.0, 0.0);
        for (i, c) in spec.iter().enumerate().skip(1) {
            let k = if i <= n / 2 { i } else { n - i };
            let e = c.norm_sqr();
            total += e;
            if k > tail_start {
                tail += e;
            }
        }
        self.spec = spec;
        Ok(if total > 0.0 { tail / total } else { 0.0 })
    }

    /// `(inf u_x, sup u_x)` from the grid, refined by a three-point parabola
    /// and Newton iterations on the trigonometric interpolant.
    pub fn slope_extrema(&mut self, state: &WaveState) -> Result<SlopeExtrema> {
        self.grid.check(state)?;
        let n = state.n();
        let dx = state.dx();
        let mut spec = Vec::with_capacity(n);
        self.grid.forward(&state.samples, &mut spec);
        let mut ux_spec = spec.clone();
        for (c, &k) in ux_spec.iter_mut().zip(&self.grid.kappa) {
            *c *= Complex64::new(0.0, k);
        }
        let mut ux = Vec::with_capacity(n);
        self.grid.inverse(&mut ux_spec, &mut ux);

        let (mut argmin, mut argmax) = (0, 0);
        for (j, &v) in ux.iter().enumerate() {
            if v < ux[argmin] {
                argmin = j;
            }
            if v > ux[argmax] {
                argmax = j;
            }
        }
        let interp = Interpolant::new(&spec, &self.grid.kappa, state.period);
        let (x_min, m1) = refine(&ux, argmin, dx, state, &interp, -1.0);
        let (x_max, m2) = refine(&ux, argmax, dx, state, &interp, 1.0);
        Ok(SlopeExtrema {
            point: PhasePoint::new(m1, m2),
            argmin,
            argmax,
            x_min,
            x_max,
        })
    }

    pub fn extrema_of_slope(&mut self, state: &WaveState) -> Result<PhasePoint> {
        Ok(self.slope_extrema(state)?.point)
    }
}

/// Evaluates derivatives of the trigonometric interpolant at arbitrary `x`.
struct Interpolant {
    /// `û_k / L` for `k = 1..n/2` (Nyquist dropped).
    coeffs: Vec<Complex64>,
    base: f64,
    origin: f64,
}

impl Interpolant {
    fn new(spec: &[Complex64], kappa: &[f64], period: f64) -> Self {
        let n = spec.len();
        let coeffs = (1..n / 2).map(|k| spec[k] / period).collect();
        Self {
            coeffs,
            base: kappa[1],
            origin: -0.5 * period,
        }
    }

    /// `d^order u / dx^order` at `x`, for `order >= 1`.
    fn derivative(&self, x: f64, order: i32) -> f64 {
        let (s, c) = (self.base * (x - self.origin)).sin_cos();
        let w = Complex64::new(c, s);
        let mut wk = Complex64::new(1.0, 0.0);
        let mut acc = 0.0;
        for (i, coeff) in self.coeffs.iter().enumerate() {
            wk *= w;
            let kappa = self.base * (i + 1) as f64;
            let factor = Complex64::new(0.0, kappa).powi(order);
            acc += (coeff * factor * wk).re;
        }
        2.0 * acc
    }
}

/// Parabolic then Newton refinement of a grid extremum of `u_x`.
/// `sense` is `-1` for a minimum and `+1` for a maximum.
fn refine(
    ux: &[f64],
    j: usize,
    dx: f64,
    state: &WaveState,
    interp: &Interpolant,
    sense: f64,
) -> (f64, f64) {
    let n = ux.len();
    let node = ux[j];
    let x_node = state.x(j);
    let (fm, fp) = (ux[(j + n - 1) % n], ux[(j + 1) % n]);
    let curvature = fm - 2.0 * node + fp;
    let mut x = x_node;
    if curvature * sense < 0.0 {
        let delta = 0.5 * (fm - fp) / curvature;
        if delta.abs() <= 1.0 {
            x += delta * dx;
        }
    }
    for _ in 0..8 {
        let d1 = interp.derivative(x, 2);
        let d2 = interp.derivative(x, 3);
        if d2 == 0.0 || d2 * sense > 0.0 {
            break;
        }
        let step = d1 / d2;
        let next = x - step;
        if (next - x_node).abs() > dx {
            break;
        }
        x = next;
        if step.abs() < 1e-14 * dx.max(x.abs()) {
            break;
        }
    }
    let refined = interp.derivative(x, 1);
    // Never report something less extreme than the grid node.
    if refined * sense >= node * sense {
        (x, refined)
    } else {
        (x_node, node)
    }
}

/// Grid, time-stepping and detection settings for [`run`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunOptions {
    pub n: usize,
    pub period: f64,
    pub t_max: f64,
    /// Advective CFL number: `dt <= cfl Δx / max|u|`.
    pub cfl: f64,
    /// Additionally `dt <= slope_cfl / |m1|` so steepening is followed.
    pub slope_cfl: f64,
    pub dt_max: f64,
    /// Use this step instead of the adaptive rule.
    pub fixed_dt: Option<f64>,
    /// Breaking requires `m1 <= -breaking_threshold`.
    pub breaking_threshold: f64,
    /// Samples with `|m1| >= fit_fraction · threshold` enter the extrapolation.
    pub fit_fraction: f64,
    pub tail_limit: f64,
    pub bound_tolerance: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            n: 8192,
            period: 160.0,
            t_max: 10.0,
            cfl: 0.3,
            slope_cfl: 0.05,
            dt_max: 0.01,
            fixed_dt: None,
            breaking_threshold: 200.0,
            fit_fraction: 0.25,
            tail_limit: 1e-2,
            bound_tolerance: BOUND_TOLERANCE,
        }
    }
}

impl RunOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("period", self.period),
            ("t_max", self.t_max),
            ("cfl", self.cfl),
            ("slope_cfl", self.slope_cfl),
            ("dt_max", self.dt_max),
            ("breaking_threshold", self.breaking_threshold),
            ("fit_fraction", self.fit_fraction),
            ("tail_limit", self.tail_limit),
            ("bound_tolerance", self.bound_tolerance),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::parameter(name, format!("{v} must be positive")));
            }
        }
        if self.n < 16 || !self.n.is_power_of_two() {
            return Err(Error::parameter("n", format!("{} must be a power of two >= 16", self.n)));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0) {
                return Err(Error::parameter("fixed_dt", format!("{dt} must be positive")));
            }
        }
        if self.fit_fraction >= 1.0 {
            return Err(Error::parameter("fit_fraction", "must be below 1"));
        }
        Ok(())
    }
}

/// One row of the run's time series.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SeriesSample {
    pub t: f64,
    pub m1: f64,
    pub m2: f64,
    pub u_min: f64,
    pub u_max: f64,
    pub tail_fraction: f64,
    pub argmin: usize,
    pub argmax: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BreakingReport {
    pub m1_0: f64,
    pub m2_0: f64,
    pub verdict: ThresholdVerdict,
    pub t_break_observed: Option<f64>,
    pub bound_satisfied: Option<bool>,
    /// Last simulated time.
    pub t_final: f64,
}

impl BreakingReport {
    pub fn new(
        initial: PhasePoint,
        verdict: ThresholdVerdict,
        t_break_observed: Option<f64>,
        t_final: f64,
        tolerance: f64,
    ) -> Self {
        let bound_satisfied = match t_break_observed {
            Some(t) if verdict.in_omega => Some(t <= verdict.time_bound * (1.0 + tolerance)),
            _ => None,
        };
        Self {
            m1_0: initial.m1,
            m2_0: initial.m2,
            verdict,
            t_break_observed,
            bound_satisfied,
            t_final,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub report: BreakingReport,
    pub series: Vec<SeriesSample>,
    pub final_state: WaveState,
}

/// Integrates from `profile` until breaking is detected or `t_max` is reached.
///
/// Breaking is declared once `m1 <= -breaking_threshold` and the
/// least-squares line through `1/|m1|` over the steep tail of the series
/// reaches zero before `t_max`; that root is the observed breaking time.
pub fn run(profile: &ProfileSpec, kernel: KernelSpec, opts: &RunOptions) -> Result<RunResult> {
    opts.validate()?;
    let mut solver = WhithamSolver::new(kernel, opts.period, opts.n)?;
    let initial = profile.sample(opts.period, opts.n)?;
    let mut state = solver.project(&initial)?;

    let first = solver.slope_extrema(&state)?;
    let m0 = first.point;
    if !(m0.spread() > 0.0) {
        return Err(Error::parameter("profile", "initial slope is identically zero"));
    }
    let verdict = classify(m0)?;

    let mut series: Vec<SeriesSample> = Vec::new();
    let mut extrema = first;
    let mut t_break = None;
    loop {
        let (u_min, u_max) = state.min_max();
        let tail_fraction = solver.tail_fraction(&state)?;
        series.push(SeriesSample {
            t: state.time,
            m1: extrema.point.m1,
            m2: extrema.point.m2,
            u_min,
            u_max,
            tail_fraction,
            argmin: extrema.argmin,
            argmax: extrema.argmax,
        });

        let m1 = extrema.point.m1;
        if m1 <= -opts.breaking_threshold {
            let cutoff = opts.fit_fraction * opts.breaking_threshold;
            let mut start = series.len();
            while start > 0 && series[start - 1].m1 <= -cutoff {
                start -= 1;
            }
            start = start.min(series.len().saturating_sub(3));
            let window: Vec<(f64, f64)> = series[start..].iter().map(|s| (s.t, s.m1)).collect();
            if let Some(t_star) = extrapolate_blowup(&window) {
                let t_star = t_star.max(state.time);
                if t_star <= opts.t_max {
                    t_break = Some(t_star);
                    break;
                }
            }
        }
        if tail_fraction > opts.tail_limit {
            return Err(Error::ResolutionLoss {
                t: state.time,
                tail_fraction,
            });
        }
        if state.time >= opts.t_max {
            break;
        }

        let dt = match opts.fixed_dt {
            Some(dt) => dt,
            None => {
                let advective = opts.cfl * state.dx() / state.max_abs().max(1e-12);
                let slope = opts.slope_cfl / m1.abs().max(1e-12);
                advective.min(slope).min(opts.dt_max)
            }
        }
        .min(opts.t_max - state.time);
        let mut next = solver.step(&state, dt).map_err(|e| match e {
            Error::ResolutionLoss { t, .. } => Error::ResolutionLoss {
                t,
                tail_fraction,
            },
            other => other,
        })?;
        if opts.t_max - next.time < 1e-12 * opts.t_max {
            next.time = opts.t_max;
        }
        state = next;
        extrema = solver.slope_extrema(&state)?;
    }

    let report = BreakingReport::new(m0, verdict, t_break, state.time, opts.bound_tolerance);
    Ok(RunResult {
        report,
        series,
        final_state: state,
    })
}

/// Checks the observed breaking time against `-2/G · (1 + 0.05)`.
pub fn validate_bound(report: &BreakingReport) -> Result<bool> {
    if !report.verdict.in_omega {
        return Err(Error::Usage(
            "validate_bound needs initial extrema inside the breaking region".into(),
        ));
    }
    let t = report
        .t_break_observed
        .ok_or_else(|| Error::Usage("validate_bound needs an observed breaking time".into()))?;
    Ok(t <= report.verdict.time_bound * (1.0 + BOUND_TOLERANCE))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    use crate::whitham::profile::Bump;

    fn gaussian() -> KernelSpec {
        KernelSpec::Gaussian { sigma: 1.0 }
    }

    #[test]
    fn convolution_of_constant_vanishes() {
        let mut s = WhithamSolver::new(gaussian(), 40.0, 256).unwrap();
        let state = WaveState::from_fn(40.0, 256, |_| 3.0).unwrap();
        for v in s.convolution_term(&state).unwrap() {
            assert!(v.abs() < 1e-14);
        }
    }

    #[test]
    fn convolution_of_single_mode() {
        let (period, n) = (40.0, 256);
        let mut s = WhithamSolver::new(gaussian(), period, n).unwrap();
        let k = TAU / period;
        let state = WaveState::from_fn(period, n, |x| (k * x).sin()).unwrap();
        let conv = s.convolution_term(&state).unwrap();
        let amp = gaussian().symbol(k) * k;
        for (j, v) in conv.iter().enumerate() {
            assert!((v - amp * (k * state.x(j)).cos()).abs() < 1e-13);
        }
    }

    #[test]
    fn grid_mismatch_is_usage_error() {
        let mut s = WhithamSolver::new(gaussian(), 40.0, 256).unwrap();
        let state = WaveState::from_fn(40.0, 128, |_| 0.0).unwrap();
        assert!(matches!(s.convolution_term(&state), Err(Error::Usage(_))));
        assert!(matches!(s.step(&state, 0.1), Err(Error::Usage(_))));
    }

    #[test]
    fn constant_state_is_steady() {
        let mut s = WhithamSolver::new(gaussian(), 40.0, 256).unwrap();
        let state = WaveState::from_fn(40.0, 256, |_| 1.5).unwrap();
        let next = s.step(&state, 0.01).unwrap();
        for v in &next.samples {
            assert!((v - 1.5).abs() < 1e-13);
        }
        assert!((next.time - 0.01).abs() < 1e-16);
    }

    #[test]
    fn step_conserves_mean() {
        let p = ProfileSpec::for_extrema(-2.0, 1.0, 80.0).unwrap();
        let mut s = WhithamSolver::new(gaussian(), 80.0, 1024).unwrap();
        let state = s.project(&p.sample(80.0, 1024).unwrap()).unwrap();
        let next = s.step(&state, 0.01).unwrap();
        assert!((next.mean() - state.mean()).abs() < 1e-12);
    }

    #[test]
    fn slope_extrema_of_sine() {
        let mut s = WhithamSolver::new(gaussian(), 2.0 * PI * 4.0, 256).unwrap();
        // Period 8π keeps the kernel tail admissible; u = sin(x) still has u_x = cos(x).
        let state = WaveState::from_fn(8.0 * PI, 256, f64::sin).unwrap();
        let p = s.extrema_of_slope(&state).unwrap();
        assert!((p.m1 + 1.0).abs() < 1e-8);
        assert!((p.m2 - 1.0).abs() < 1e-8);
    }

    #[test]
    fn slope_extrema_of_zero() {
        let mut s = WhithamSolver::new(gaussian(), 40.0, 256).unwrap();
        let state = WaveState::from_fn(40.0, 256, |_| 0.0).unwrap();
        assert_eq!(s.extrema_of_slope(&state).unwrap(), PhasePoint::new(0.0, 0.0));
    }

    #[test]
    fn slope_extrema_of_bump_profile() {
        let profile = ProfileSpec::new(vec![
            Bump { amplitude: -5.0, center: -20.0, width: 1.0 },
            Bump { amplitude: 3.5, center: 20.0, width: 1.0 },
            Bump { amplitude: 0.3, center: -50.0, width: 5.0 },
        ]);
        let mut s = WhithamSolver::new(gaussian(), 160.0, 4096).unwrap();
        let state = profile.sample(160.0, 4096).unwrap();
        let e = s.slope_extrema(&state).unwrap();
        assert!((e.point.m1 + 5.0).abs() < 1e-4);
        assert!((e.point.m2 - 3.5).abs() < 1e-4);
        assert!((e.x_min + 20.0).abs() < 1e-3);
        assert!((e.x_max - 20.0).abs() < 1e-3);
    }

    #[test]
    fn validate_bound_contract() {
        let inside = classify(PhasePoint::new(-5.0, 3.5)).unwrap();
        let ok = BreakingReport::new(PhasePoint::new(-5.0, 3.5), inside, Some(0.2), 0.2, 0.05);
        assert!(validate_bound(&ok).unwrap());
        assert_eq!(ok.bound_satisfied, Some(true));

        let late = BreakingReport::new(PhasePoint::new(-5.0, 3.5), inside, Some(0.5), 0.5, 0.05);
        assert!(!validate_bound(&late).unwrap());
        assert_eq!(late.bound_satisfied, Some(false));

        let none = BreakingReport::new(PhasePoint::new(-5.0, 3.5), inside, None, 1.0, 0.05);
        assert!(matches!(validate_bound(&none), Err(Error::Usage(_))));

        let outside = classify(PhasePoint::new(-1.0, 0.5)).unwrap();
        let r = BreakingReport::new(PhasePoint::new(-1.0, 0.5), outside, Some(1.0), 1.0, 0.05);
        assert!(matches!(validate_bound(&r), Err(Error::Usage(_))));
        assert_eq!(r.bound_satisfied, None);
    }

    #[test]
    fn run_rejects_bad_options() {
        let p = ProfileSpec::for_extrema(-1.0, 1.0, 160.0).unwrap();
        let opts = RunOptions {
            cfl: 0.0,
            ..RunOptions::default()
        };
        assert!(matches!(run(&p, gaussian(), &opts), Err(Error::Parameter { name: "cfl", .. })));
    }
}
