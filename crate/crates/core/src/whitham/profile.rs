use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::state::WaveState;

/// Largest admissible `|u0|` or `|u0'|` at the edge of the periodic cell.
pub const PROFILE_TAIL_LIMIT: f64 = 1e-12;

/// One Gaussian bump `c exp(-(x - x_c)^2 / w^2)` of the initial slope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Bump {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

impl Bump {
    fn mass(&self) -> f64 {
        self.amplitude * self.width * PI.sqrt()
    }
}

/// Initial data given through its slope `u0' = Σ c_i exp(-(x - x_i)^2 / w_i^2)`.
///
/// `u0` is the erf antiderivative vanishing at `-inf`. Profiles must be
/// balanced (`Σ c_i w_i = 0`) so `u0` also vanishes at `+inf`, and bumps must
/// be separated by `5 (w_i + w_j)` so the extrema of `u0'` are the amplitudes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileSpec {
    pub bumps: Vec<Bump>,
}

impl ProfileSpec {
    pub fn new(bumps: Vec<Bump>) -> Self {
        Self { bumps }
    }

    /// A balanced profile with `inf u0' = m1` and `sup u0' = m2`.
    ///
    /// Unit-width bumps sit at `∓L/16`; the net slope integral is cancelled
    /// by a broad bump of width `L/32` at `-5L/16`. When one of `m1`, `m2` is
    /// zero that bump sets the corresponding extremum instead.
    pub fn for_extrema(m1: f64, m2: f64, period: f64) -> Result<Self> {
        if m1 > 0.0 || m2 < 0.0 || (m1 == 0.0 && m2 == 0.0) {
            return Err(Error::parameter(
                "extrema",
                format!("need m1 <= 0 <= m2, not both zero; got ({m1}, {m2})"),
            ));
        }
        let mut bumps = Vec::new();
        if m1 < 0.0 {
            bumps.push(Bump {
                amplitude: m1,
                center: -period / 16.0,
                width: 1.0,
            });
        }
        if m2 > 0.0 {
            bumps.push(Bump {
                amplitude: m2,
                center: period / 16.0,
                width: 1.0,
            });
        }
        let net: f64 = m1 + m2;
        if net != 0.0 {
            let width = period / 32.0;
            bumps.push(Bump {
                amplitude: -net / width,
                center: -5.0 * period / 16.0,
                width,
            });
        }
        let spec = Self { bumps };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bumps.is_empty() {
            return Err(Error::Config("profile.bumps: at least one bump is required".into()));
        }
        for (i, b) in self.bumps.iter().enumerate() {
            if !(b.width > 0.0) || !b.width.is_finite() {
                return Err(Error::Config(format!(
                    "profile.bumps[{i}].width: {} must be positive",
                    b.width
                )));
            }
            if !b.amplitude.is_finite() || !b.center.is_finite() {
                return Err(Error::Config(format!("profile.bumps[{i}]: non-finite value")));
            }
        }
        for (i, a) in self.bumps.iter().enumerate() {
            for (j, b) in self.bumps.iter().enumerate().skip(i + 1) {
                let need = 5.0 * (a.width + b.width);
                if (a.center - b.center).abs() < need {
                    return Err(Error::Config(format!(
                        "profile.bumps[{i}] and profile.bumps[{j}]: centers must be at least {need} apart"
                    )));
                }
            }
        }
        let net: f64 = self.bumps.iter().map(Bump::mass).sum();
        let scale: f64 = self.bumps.iter().map(|b| b.mass().abs()).sum();
        if net.abs() > 1e-9 * scale {
            return Err(Error::Config(format!(
                "profile.bumps: slope integral {net:.6e} must vanish (Σ amplitude·width = 0) for a decaying profile"
            )));
        }
        Ok(())
    }

    /// `u0'(x)`.
    pub fn slope(&self, x: f64) -> f64 {
        self.bumps
            .iter()
            .map(|b| {
                let s = (x - b.center) / b.width;
                b.amplitude * (-s * s).exp()
            })
            .sum()
    }

    /// `u0(x)`.
    pub fn value(&self, x: f64) -> f64 {
        self.bumps
            .iter()
            .map(|b| 0.5 * b.mass() * libm::erfc(-(x - b.center) / b.width))
            .sum()
    }

    /// Exact extrema `(min, max)` of `u0'` assuming the separation rule.
    pub fn slope_extrema(&self) -> (f64, f64) {
        let min = self.bumps.iter().map(|b| b.amplitude).fold(0.0, f64::min);
        let max = self.bumps.iter().map(|b| b.amplitude).fold(0.0, f64::max);
        (min, max)
    }

    /// Samples `u0` on the `n`-point grid of `[-L/2, L/2)`.
    pub fn sample(&self, period: f64, n: usize) -> Result<WaveState> {
        self.validate()?;
        let half = 0.5 * period;
        for x in [-half, half] {
            let (u, du) = (self.value(x), self.slope(x));
            if u.abs() >= PROFILE_TAIL_LIMIT || du.abs() >= PROFILE_TAIL_LIMIT {
                return Err(Error::Config(format!(
                    "profile does not decay at x = {x}: u0 = {u:.3e}, u0' = {du:.3e}; enlarge the period"
                )));
            }
        }
        let dx = period / n as f64;
        let samples = (0..n).map(|j| self.value(-half + j as f64 * dx)).collect();
        WaveState::new(period, samples, 0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn witness() -> ProfileSpec {
        ProfileSpec::new(vec![
            Bump { amplitude: -5.0, center: -20.0, width: 1.0 },
            Bump { amplitude: 3.5, center: 20.0, width: 1.0 },
            Bump { amplitude: 0.3, center: -50.0, width: 5.0 },
        ])
    }

    #[test]
    fn value_is_antiderivative_of_slope() {
        let p = witness();
        for x in [-52.0, -20.3, -19.0, 0.0, 19.5, 21.0] {
            let h = 1e-5;
            let fd = (p.value(x + h) - p.value(x - h)) / (2.0 * h);
            assert!((fd - p.slope(x)).abs() < 1e-7, "{x}");
        }
        assert!(p.value(-80.0).abs() < 1e-12);
        assert!(p.value(80.0).abs() < 1e-12);
    }

    #[test]
    fn unbalanced_profile_rejected() {
        let p = ProfileSpec::new(vec![
            Bump { amplitude: -5.0, center: -20.0, width: 1.0 },
            Bump { amplitude: 3.5, center: 20.0, width: 1.0 },
        ]);
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("slope integral"), "{msg}");
    }

    #[test]
    fn negative_width_rejected() {
        let p = ProfileSpec::new(vec![Bump { amplitude: -1.0, center: 0.0, width: -1.0 }]);
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("profile.bumps[0].width"), "{msg}");
    }

    #[test]
    fn crowded_bumps_rejected() {
        let p = ProfileSpec::new(vec![
            Bump { amplitude: -1.0, center: 0.0, width: 1.0 },
            Bump { amplitude: 1.0, center: 5.0, width: 1.0 },
        ]);
        assert!(p.validate().is_err());
    }

    #[test]
    fn for_extrema_builds_balanced_profiles() {
        let p = ProfileSpec::for_extrema(-5.0, 3.5, 160.0).unwrap();
        assert_eq!(p.slope_extrema(), (-5.0, 3.5));
        assert!(p.sample(160.0, 1024).is_ok());

        let q = ProfileSpec::for_extrema(-0.5, 0.5, 160.0).unwrap();
        assert_eq!(q.bumps.len(), 2);

        let r = ProfileSpec::for_extrema(-3.0, 0.0, 160.0).unwrap();
        let (lo, hi) = r.slope_extrema();
        assert_eq!(lo, -3.0);
        assert!(hi > 0.0 && hi < 1.0);
        assert!(ProfileSpec::for_extrema(1.0, 2.0, 160.0).is_err());
    }

    #[test]
    fn short_period_rejected() {
        let p = witness();
        assert!(p.sample(100.0, 1024).is_err());
    }
}
