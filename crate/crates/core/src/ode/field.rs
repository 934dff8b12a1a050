use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::threshold::PhasePoint;

/// `F(x, y) = -x^2 + y - x`.
#[inline]
pub fn f_component(p: PhasePoint) -> f64 {
    -p.m1 * p.m1 + p.m2 - p.m1
}

/// `H(x, y) = -y^2 + y - x`.
#[inline]
pub fn h_component(p: PhasePoint) -> f64 {
    -p.m2 * p.m2 + p.m2 - p.m1
}

/// Right-hand side `(F, H)` of the auxiliary equality system.
#[inline]
pub fn rhs_equality(p: PhasePoint) -> (f64, f64) {
    (f_component(p), h_component(p))
}

/// Jacobian `[[-2x - 1, 1], [-1, -2y + 1]]`.
pub fn jacobian(p: PhasePoint) -> [[f64; 2]; 2] {
    [[-2.0 * p.m1 - 1.0, 1.0], [-1.0, -2.0 * p.m2 + 1.0]]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    HyperbolicSaddle,
    Degenerate,
    Other,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumReport {
    pub location: PhasePoint,
    pub jacobian: [[f64; 2]; 2],
    pub eigenvalues: [Complex64; 2],
    pub classification: EquilibriumKind,
}

impl EquilibriumReport {
    fn at(location: PhasePoint) -> Self {
        let jacobian = jacobian(location);
        let eigenvalues = eigenvalues_2x2(jacobian);
        let classification = classify_eigenvalues(eigenvalues);
        Self {
            location,
            jacobian,
            eigenvalues,
            classification,
        }
    }

    /// Unit eigenvector of the real eigenvalue with the given sign, if any.
    pub fn eigenvector(&self, negative: bool) -> Option<[f64; 2]> {
        let lambda = self
            .eigenvalues
            .iter()
            .filter(|l| l.im == 0.0)
            .map(|l| l.re)
            .find(|&l| if negative { l < 0.0 } else { l > 0.0 })?;
        let [[a, b], [c, d]] = self.jacobian;
        // Either row of (J - lambda I) gives the direction; use the larger one.
        let v = if (a - lambda).abs() + b.abs() >= c.abs() + (d - lambda).abs() {
            [-b, a - lambda]
        } else {
            [d - lambda, -c]
        };
        let norm = v[0].hypot(v[1]);
        (norm > 0.0).then(|| [v[0] / norm, v[1] / norm])
    }
}

const EIGEN_ZERO: f64 = 1e-12;

fn eigenvalues_2x2(j: [[f64; 2]; 2]) -> [Complex64; 2] {
    let trace = j[0][0] + j[1][1];
    let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
    let half = 0.5 * trace;
    let disc = half * half - det;
    if disc >= 0.0 {
        let r = disc.sqrt();
        [Complex64::new(half + r, 0.0), Complex64::new(half - r, 0.0)]
    } else {
        let r = (-disc).sqrt();
        [Complex64::new(half, r), Complex64::new(half, -r)]
    }
}

fn classify_eigenvalues(ev: [Complex64; 2]) -> EquilibriumKind {
    if ev.iter().any(|l| l.norm() <= EIGEN_ZERO || l.re.abs() <= EIGEN_ZERO) {
        return EquilibriumKind::Degenerate;
    }
    let real = ev.iter().all(|l| l.im == 0.0);
    if real && ev[0].re * ev[1].re < 0.0 {
        EquilibriumKind::HyperbolicSaddle
    } else {
        EquilibriumKind::Other
    }
}

/// The two equilibria of the equality system, saddle first.
pub fn analyze_equilibria() -> Vec<EquilibriumReport> {
    vec![
        EquilibriumReport::at(PhasePoint::new(-2.0, 2.0)),
        EquilibriumReport::at(PhasePoint::new(0.0, 0.0)),
    ]
}
