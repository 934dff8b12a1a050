use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// A nonnegative forcing term `a(t)` or `b(t)`. Every variant is clamped at
/// zero when evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SlackProfile {
    Zero,
    Constant {
        value: f64,
    },
    /// `values[i]` on `[i * interval, (i + 1) * interval)`, last value held afterwards.
    Piecewise {
        interval: f64,
        values: Vec<f64>,
    },
    /// `max(0, offset + amplitude * sin(omega t + phase))`.
    Sinusoid {
        offset: f64,
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
}

impl SlackProfile {
    pub fn value(&self, t: f64) -> f64 {
        let raw = match self {
            SlackProfile::Zero => 0.0,
            SlackProfile::Constant { value } => *value,
            SlackProfile::Piecewise { interval, values } => {
                if values.is_empty() {
                    0.0
                } else {
                    let idx = (t / interval).floor().max(0.0) as usize;
                    values[idx.min(values.len() - 1)]
                }
            }
            SlackProfile::Sinusoid {
                offset,
                amplitude,
                omega,
                phase,
            } => offset + amplitude * (omega * t + phase).sin(),
        };
        raw.max(0.0)
    }

    /// Piecewise-constant profile with values drawn uniformly from `[0, max]`.
    pub fn random_piecewise(rng: &mut impl Rng, interval: f64, count: usize, max: f64) -> Self {
        let values = (0..count).map(|_| rng.gen_range(0.0..=max)).collect();
        SlackProfile::Piecewise { interval, values }
    }

    pub fn is_zero(&self) -> bool {
        match self {
            SlackProfile::Zero => true,
            SlackProfile::Constant { value } => *value <= 0.0,
            SlackProfile::Piecewise { values, .. } => values.iter().all(|v| *v <= 0.0),
            SlackProfile::Sinusoid {
                offset, amplitude, ..
            } => offset + amplitude.abs() <= 0.0,
        }
    }
}

/// Slack terms turning the inequality system into `x' = F - a`, `y' = H - b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SlackPair {
    pub a: SlackProfile,
    pub b: SlackProfile,
}

impl SlackPair {
    pub fn zero() -> Self {
        Self {
            a: SlackProfile::Zero,
            b: SlackProfile::Zero,
        }
    }

    pub fn constant(a: f64, b: f64) -> Self {
        Self {
            a: SlackProfile::Constant { value: a },
            b: SlackProfile::Constant { value: b },
        }
    }

    /// Seeded piecewise-constant slacks on `[0, interval * count)`.
    pub fn random_piecewise(seed: u64, interval: f64, count: usize, max: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = SlackProfile::random_piecewise(&mut rng, interval, count, max);
        let b = SlackProfile::random_piecewise(&mut rng, interval, count, max);
        Self { a, b }
    }

    /// Seeded smooth slacks `offset (1 + sin(omega t + phase))` with random
    /// offsets in `[0, max / 2]`, frequencies in `[0.5, 10]` and phases.
    pub fn random_sinusoid(seed: u64, max: f64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut draw = || {
            let offset = rng.gen_range(0.0..=0.5 * max);
            SlackProfile::Sinusoid {
                offset,
                amplitude: offset,
                omega: rng.gen_range(0.5..10.0),
                phase: rng.gen_range(0.0..std::f64::consts::TAU),
            }
        };
        let a = draw();
        let b = draw();
        Self { a, b }
    }

    #[inline]
    pub fn at(&self, t: f64) -> (f64, f64) {
        (self.a.value(t), self.b.value(t))
    }

    pub fn is_zero(&self) -> bool {
        self.a.is_zero() && self.b.is_zero()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_are_clamped() {
        let s = SlackProfile::Sinusoid {
            offset: 0.0,
            amplitude: 1.0,
            omega: 1.0,
            phase: 0.0,
        };
        for i in 0..100 {
            assert!(s.value(i as f64 * 0.1) >= 0.0);
        }
        assert_eq!(SlackProfile::Constant { value: -2.0 }.value(1.0), 0.0);
    }

    #[test]
    fn piecewise_holds_last_value() {
        let s = SlackProfile::Piecewise {
            interval: 0.5,
            values: vec![1.0, 2.0, 3.0],
        };
        assert_eq!(s.value(0.0), 1.0);
        assert_eq!(s.value(0.75), 2.0);
        assert_eq!(s.value(10.0), 3.0);
    }

    #[test]
    fn seeded_generation_is_reproducible() {
        let a = SlackPair::random_piecewise(7, 0.1, 20, 2.0);
        let b = SlackPair::random_piecewise(7, 0.1, 20, 2.0);
        assert_eq!(a, b);
        assert_ne!(a, SlackPair::random_piecewise(8, 0.1, 20, 2.0));
        for i in 0..40 {
            let (x, y) = a.at(i as f64 * 0.05);
            assert!((0.0..=2.0).contains(&x) && (0.0..=2.0).contains(&y));
        }
    }
}
