//! Closed-form breaking threshold.
//!
//! With `z = m2 - m1` and `v = m1 + m2` the threshold is `G = v + S(z)`, where
//! `S(z) = sgn(4 - z) sqrt(W(z))` and `W(z) = z^2 - 4 z ln(z/4) - 4 z`. The zero
//! set of `G` in the second quadrant is the stable manifold of the saddle
//! `(-2, 2)` of the auxiliary system; initial extrema with `G < 0` break in
//! time at most `-2 / G`.

use std::f64::consts::E;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance constants shared by the closed-form routines and their tests.
pub mod tol {
    /// Required `|G|` at a located separatrix point.
    pub const ROOT_RESIDUAL: f64 = 1e-10;
    /// Slack for algebraic identities evaluated in double precision.
    pub const IDENTITY: f64 = 1e-12;
}

/// `x`-intercept of the separatrix, `-4/e`.
pub const SEPARATRIX_X_INTERCEPT: f64 = -4.0 / E;

/// Integration constant of the first integral at the saddle level, `1 - ln 4`.
pub fn saddle_level() -> f64 {
    1.0 - 4f64.ln()
}

/// Extremal slopes `(m1, m2) = (inf u_x, sup u_x)`.
///
/// Also used as the `(x, y)` state of the auxiliary planar system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub m1: f64,
    pub m2: f64,
}

impl PhasePoint {
    /// Unchecked constructor.
    pub const fn new(m1: f64, m2: f64) -> Self {
        Self { m1, m2 }
    }

    /// Constructor for physical extrema: requires `m1 <= 0 <= m2`.
    pub fn physical(m1: f64, m2: f64) -> Result<Self> {
        if !(m1.is_finite() && m2.is_finite()) {
            return Err(Error::domain("PhasePoint", "non-finite coordinate"));
        }
        if m1 > 0.0 || m2 < 0.0 {
            return Err(Error::domain(
                "PhasePoint",
                format!("({m1}, {m2}) is not in the second quadrant"),
            ));
        }
        Ok(Self { m1, m2 })
    }

    /// `z = m2 - m1`.
    #[inline]
    pub fn spread(&self) -> f64 {
        self.m2 - self.m1
    }

    /// `v = m1 + m2`.
    #[inline]
    pub fn sum(&self) -> f64 {
        self.m1 + self.m2
    }

    pub fn norm(&self) -> f64 {
        self.m1.hypot(self.m2)
    }

    pub fn in_second_quadrant(&self) -> bool {
        self.m1 <= 0.0 && self.m2 >= 0.0
    }

    pub fn is_finite(&self) -> bool {
        self.m1.is_finite() && self.m2.is_finite()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::new(self.m1 * factor, self.m2 * factor)
    }
}

/// Result of classifying a set of initial extrema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdVerdict {
    pub g_value: f64,
    pub in_omega: bool,
    pub seliger_holds: bool,
    /// `-2 / G` inside the breaking region, `+inf` otherwise.
    pub time_bound: f64,
}

fn sgn(value: f64) -> f64 {
    if value > 0.0 {
        1.0
    } else if value < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// `W(z) = z^2 - 4 z ln(z/4) - 4 z`, nonnegative with its only zero at `z = 4`.
pub fn eval_w(z: f64) -> Result<f64> {
    if !(z > 0.0) || !z.is_finite() {
        return Err(Error::domain("eval_W", format!("z = {z} must be positive")));
    }
    // ln(z/4) through ln_1p keeps the cancellation near z = 4 benign.
    let log_ratio = ((z - 4.0) / 4.0).ln_1p();
    Ok(z * ((z - 4.0) - 4.0 * log_ratio))
}

/// `S(z) = sgn(4 - z) sqrt(W(z))`.
pub fn eval_s(z: f64) -> Result<f64> {
    let w = eval_w(z)?;
    Ok(sgn(4.0 - z) * w.max(0.0).sqrt())
}

/// The threshold function `G(m1, m2) = m1 + m2 + S(m2 - m1)`.
pub fn eval_g(p: PhasePoint) -> Result<f64> {
    let z = p.spread();
    if !(z > 0.0) {
        return Err(Error::domain(
            "eval_G",
            format!("m2 - m1 = {z} must be positive at ({}, {})", p.m1, p.m2),
        ));
    }
    Ok(p.sum() + eval_s(z)?)
}

/// Classifies extrema against the breaking region and the classical
/// half-plane condition `m1 + m2 <= -2`.
pub fn classify(p: PhasePoint) -> Result<ThresholdVerdict> {
    let g_value = eval_g(p)?;
    let in_omega = g_value < 0.0 && p.m1 < 0.0 && p.m2 >= 0.0;
    Ok(ThresholdVerdict {
        g_value,
        in_omega,
        seliger_holds: p.sum() <= -2.0,
        time_bound: if g_value < 0.0 {
            -2.0 / g_value
        } else {
            f64::INFINITY
        },
    })
}

/// Upper bound on the breaking time for a kernel with `K(0) = k0`.
///
/// The substitution `m = k0 mu`, `t = tau / k0` maps the general inequality
/// system onto the normalized one, so the bound is the normalized bound of the
/// scaled point divided by `k0`.
pub fn breaking_time_bound(p: PhasePoint, k0: f64) -> Result<f64> {
    if !(k0 > 0.0) || !k0.is_finite() {
        return Err(Error::parameter("k0", format!("{k0} must be positive")));
    }
    let scaled = p.scaled(1.0 / k0);
    let verdict = classify(scaled)?;
    Ok(if verdict.in_omega {
        verdict.time_bound / k0
    } else {
        f64::INFINITY
    })
}

/// Residual of the first integral `m1 m2 = (m1 - m2)(ln(m2 - m1) + 1 - ln 4)`.
///
/// Zero exactly on the level set through the saddle; constant along every
/// trajectory of the equality system.
pub fn first_integral_residual(p: PhasePoint) -> Result<f64> {
    let z = p.spread();
    if !(z > 0.0) {
        return Err(Error::domain(
            "first_integral_residual",
            format!("m2 - m1 = {z} must be positive"),
        ));
    }
    Ok(p.m1 * p.m2 - (p.m1 - p.m2) * (z.ln() + saddle_level()))
}

/// The first-integral constant `K(p) = m1 m2 / (m1 - m2) - ln(m2 - m1)`.
///
/// Constant along every trajectory of the equality system; equals
/// `1 - ln 4` on the separatrix. The residual above is
/// `(m1 - m2)(K(p) - (1 - ln 4))`.
pub fn first_integral_level(p: PhasePoint) -> Result<f64> {
    let z = p.spread();
    if !(z > 0.0) {
        return Err(Error::domain(
            "first_integral_level",
            format!("m2 - m1 = {z} must be positive"),
        ));
    }
    Ok(-p.m1 * p.m2 / z - z.ln())
}

/// The separatrix `y = g(x)`: the unique `y >= 0` with `G(x, y) = 0`.
///
/// Defined for `x <= -4/e`.
pub fn separatrix_y(x: f64) -> Result<f64> {
    if !x.is_finite() || x > SEPARATRIX_X_INTERCEPT {
        return Err(Error::domain(
            "separatrix_y",
            format!("x = {x} exceeds the separatrix intercept -4/e"),
        ));
    }
    let g_at = |y: f64| eval_g(PhasePoint::new(x, y));

    let mut lo = (-x - 4.0).max(0.0);
    let g_lo = g_at(lo)?;
    if g_lo >= 0.0 {
        // Only the intercept itself (up to rounding) has the root on the axis.
        if lo == 0.0 && g_lo.abs() < tol::ROOT_RESIDUAL {
            return Ok(0.0);
        }
        return Err(Error::domain(
            "separatrix_y",
            format!("G({x}, {lo}) = {g_lo} has no sign change above it"),
        ));
    }

    let mut hi = x.abs() * E.powi(4);
    let mut expansions = 0;
    while g_at(hi)? < 0.0 {
        lo = hi;
        hi *= 4.0;
        expansions += 1;
        if expansions > 60 || !hi.is_finite() {
            return Err(Error::domain(
                "separatrix_y",
                format!("no bracket found for x = {x}"),
            ));
        }
    }

    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if g_at(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let (g_lo, g_hi) = (g_at(lo)?, g_at(hi)?);
    let (root, residual) = if g_lo.abs() <= g_hi.abs() {
        (lo, g_lo)
    } else {
        (hi, g_hi)
    };
    if residual.abs() >= tol::ROOT_RESIDUAL {
        return Err(Error::domain(
            "separatrix_y",
            format!("bisection stalled with |G| = {:e} at x = {x}", residual.abs()),
        ));
    }
    Ok(root)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    // Reference values below were computed with 40-digit arithmetic.

    #[test]
    fn w_examples() {
        assert_eq!(eval_w(4.0).unwrap(), 0.0);
        assert!(close(eval_w(4.0 / E).unwrap(), 16.0 / (E * E), 1e-14));
        assert!(close(eval_w(2.0).unwrap(), 1.545_177_444_479_562_5, 1e-14));
        assert!(close(eval_w(8.5).unwrap(), 12.621_758_719_203_075, 1e-12));
        assert!(matches!(eval_w(0.0), Err(Error::Domain { .. })));
        assert!(eval_w(-1.0).is_err());
    }

    #[test]
    fn s_examples() {
        assert_eq!(eval_s(4.0).unwrap(), 0.0);
        assert!(close(eval_s(2.0).unwrap(), 1.243_051_666_053_974_8, 1e-14));
        assert!(close(eval_s(8.5).unwrap(), -3.552_711_460_167_160, 1e-13));
    }

    #[test]
    fn g_examples() {
        assert_eq!(eval_g(PhasePoint::new(-2.0, 2.0)).unwrap(), 0.0);
        assert!(eval_g(PhasePoint::new(SEPARATRIX_X_INTERCEPT, 0.0)).unwrap().abs() < 1e-12);
        assert!(close(
            eval_g(PhasePoint::new(-5.0, 3.5)).unwrap(),
            -5.052_711_460_167_160,
            1e-13
        ));
        assert!(close(
            eval_g(PhasePoint::new(-1.0, 0.5)).unwrap(),
            0.961_155_542_052_370_8,
            1e-13
        ));
        assert!(eval_g(PhasePoint::new(1.0, 1.0)).is_err());
        assert!(eval_g(PhasePoint::new(1.0, 0.5)).is_err());
    }

    #[test]
    fn classify_examples() {
        let v = classify(PhasePoint::new(-3.0, 1.0)).unwrap();
        assert!(v.in_omega && v.seliger_holds);
        assert!(close(v.g_value, -2.0, 1e-14));

        let v = classify(PhasePoint::new(-5.0, 3.5)).unwrap();
        assert!(v.in_omega && !v.seliger_holds);
        assert!(close(v.time_bound, 0.395_827_075_376_640_15, 1e-12));

        let v = classify(PhasePoint::new(-1.0, 0.5)).unwrap();
        assert!(!v.in_omega && !v.seliger_holds);
        assert_eq!(v.time_bound, f64::INFINITY);

        // Boundary is excluded.
        let v = classify(PhasePoint::new(-2.0, 2.0)).unwrap();
        assert!(!v.in_omega);
        assert_eq!(v.time_bound, f64::INFINITY);
    }

    #[test]
    fn bound_examples() {
        let b = breaking_time_bound(PhasePoint::new(-2.0, 0.0), 1.0).unwrap();
        assert!(close(b, 2.642_188_258_178_545, 1e-12));
        let b = breaking_time_bound(PhasePoint::new(-4.0, 0.0), 2.0).unwrap();
        assert!(close(b, 1.321_094_129_089_272_5, 1e-12));
        assert_eq!(
            breaking_time_bound(PhasePoint::new(-2.0, 2.0), 1.0).unwrap(),
            f64::INFINITY
        );
        assert!(matches!(
            breaking_time_bound(PhasePoint::new(-2.0, 0.0), 0.0),
            Err(Error::Parameter { name: "k0", .. })
        ));
        assert!(breaking_time_bound(PhasePoint::new(-2.0, 0.0), -1.0).is_err());
    }

    #[test]
    fn first_integral_examples() {
        assert!(first_integral_residual(PhasePoint::new(-2.0, 2.0)).unwrap().abs() < 1e-15);
        assert!(
            first_integral_residual(PhasePoint::new(SEPARATRIX_X_INTERCEPT, 0.0))
                .unwrap()
                .abs()
                < 1e-15
        );
        assert!(close(
            first_integral_residual(PhasePoint::new(-1.0, 1.0)).unwrap(),
            -0.386_294_361_119_890_6,
            1e-14
        ));
        assert!(first_integral_residual(PhasePoint::new(0.0, 0.0)).is_err());
    }

    #[test]
    fn level_relates_to_residual() {
        assert!((first_integral_level(PhasePoint::new(-2.0, 2.0)).unwrap() - saddle_level()).abs() < 1e-15);
        for p in [PhasePoint::new(-1.0, 1.0), PhasePoint::new(-7.0, 0.3), PhasePoint::new(-0.2, 5.0)] {
            let k = first_integral_level(p).unwrap();
            let r = first_integral_residual(p).unwrap();
            assert!((r - (p.m1 - p.m2) * (k - saddle_level())).abs() < 1e-12);
        }
        assert!(first_integral_level(PhasePoint::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn separatrix_examples() {
        assert!(close(separatrix_y(-2.0).unwrap(), 2.0, 1e-9));
        assert_eq!(separatrix_y(SEPARATRIX_X_INTERCEPT).unwrap(), 0.0);
        assert!(close(separatrix_y(-2.5).unwrap(), 6.339_816_243_797_272, 1e-8));
        assert!(close(separatrix_y(-3.0).unwrap(), 14.853_210_421_842_546, 1e-7));
        assert!(close(separatrix_y(-8.0).unwrap(), 4314.056_437_641_186, 1e-4));
        assert!(separatrix_y(-1.0).is_err());
        for x in [-2.0, -2.5, -4.0, -8.0, -1.5] {
            let y = separatrix_y(x).unwrap();
            assert!(eval_g(PhasePoint::new(x, y)).unwrap().abs() < tol::ROOT_RESIDUAL);
        }
    }

    #[test]
    fn physical_constructor_rejects_first_quadrant() {
        assert!(PhasePoint::physical(0.5, 1.0).is_err());
        assert!(PhasePoint::physical(-0.5, -1.0).is_err());
        assert!(PhasePoint::physical(f64::NAN, 1.0).is_err());
        assert!(PhasePoint::physical(-0.5, 0.0).is_ok());
    }

    #[test]
    fn w_nonnegative_on_log_grid() {
        let n = 10_000;
        let (a, b) = (1e-6f64.ln(), 1e3f64.ln());
        for i in 1..=n {
            let z = (a + (b - a) * i as f64 / n as f64).exp();
            assert!(eval_w(z).unwrap() >= -tol::IDENTITY, "W({z}) < 0");
        }
    }

    #[test]
    fn gradient_domination_minimum_at_four() {
        let f = |z: f64| z - ((z / 4.0).ln() + 2.0).powi(2);
        let n = 20_000;
        let (a, b) = (4.0 / E, 1e3);
        let mut argmin = a;
        let mut min = f64::INFINITY;
        for i in 0..=n {
            let z = a + (b - a) * i as f64 / n as f64;
            let v = f(z);
            assert!(v >= -tol::IDENTITY, "{z}: {v}");
            if v < min {
                min = v;
                argmin = z;
            }
        }
        assert!(f(4.0).abs() < 1e-15);
        assert!((argmin - 4.0).abs() < 0.05);
    }

    #[test]
    fn separatrix_is_first_integral_level_set() {
        let n = 400;
        for i in 0..=n {
            let x = -8.0 + (SEPARATRIX_X_INTERCEPT + 8.0) * i as f64 / n as f64;
            let y = separatrix_y(x).unwrap();
            let r = first_integral_residual(PhasePoint::new(x, y)).unwrap();
            assert!(r.abs() < 1e-8, "x = {x}: residual {r}");
        }
    }

    fn s_prime_fd(z: f64) -> f64 {
        let h = 1e-6 * z.max(1.0);
        (eval_s(z + h).unwrap() - eval_s(z - h).unwrap()) / (2.0 * h)
    }

    proptest! {
        #[test]
        fn partial_derivatives_nonnegative_in_omega(m1 in -50.0f64..0.0, m2 in 0.0f64..50.0) {
            let p = PhasePoint::new(m1, m2);
            let g = eval_g(p).unwrap();
            prop_assume!(g < 0.0);
            let z = p.spread();
            // S is not differentiable in floating point right at z = 4.
            prop_assume!((z - 4.0).abs() > 1e-3);
            let sp = s_prime_fd(z);
            prop_assert!(1.0 - sp >= -1e-6);
            prop_assert!(1.0 + sp >= -1e-6);
        }

        #[test]
        fn omega_algebraic_form(m1 in -100.0f64..0.0, m2 in 0.0f64..100.0) {
            let p = PhasePoint::new(m1, m2);
            let g = eval_g(p).unwrap();
            prop_assume!(g < 0.0);
            let z = p.spread();
            prop_assert!(z + eval_s(z).unwrap() >= -tol::IDENTITY);
            prop_assert!(m1 < g / 2.0);
        }

        #[test]
        fn omega_lies_left_of_intercept(m1 in -20.0f64..0.0, m2 in 0.0f64..20.0) {
            let p = PhasePoint::new(m1, m2);
            prop_assume!(p.spread() > 0.0);
            if eval_g(p).unwrap() < 0.0 {
                prop_assert!(m1 < SEPARATRIX_X_INTERCEPT);
                prop_assert!(p.spread() > -SEPARATRIX_X_INTERCEPT);
            }
        }

        #[test]
        fn seliger_implies_omega(m1 in -100.0f64..0.0, m2 in 0.0f64..100.0) {
            let p = PhasePoint::new(m1, m2);
            prop_assume!(p.sum() <= -2.0 && p.spread() > 0.0);
            let v = classify(p).unwrap();
            prop_assert!(v.in_omega);
            prop_assert!(v.seliger_holds);
        }

        #[test]
        fn verdict_invariants(m1 in -20.0f64..0.0, m2 in 0.0f64..20.0) {
            let p = PhasePoint::new(m1, m2);
            prop_assume!(p.spread() > 0.0);
            let v = classify(p).unwrap();
            prop_assert_eq!(v.in_omega, v.g_value < 0.0 && m1 < 0.0);
            prop_assert_eq!(v.time_bound.is_finite(), v.g_value < 0.0);
        }
    }
}
