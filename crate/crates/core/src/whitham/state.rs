use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

use super::kernel::wavenumber;

/// Samples of `u(t, ·)` on the uniform grid `x_j = -L/2 + j L/n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveState {
    pub period: f64,
    pub samples: Vec<f64>,
    pub time: f64,
}

impl WaveState {
    pub fn new(period: f64, samples: Vec<f64>, time: f64) -> Result<Self> {
        let n = samples.len();
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::parameter("n", format!("{n} must be a power of two >= 16")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::parameter("period", format!("{period} must be positive")));
        }
        if samples.iter().any(|v| !v.is_finite()) {
            return Err(Error::parameter("samples", "non-finite value"));
        }
        Ok(Self {
            period,
            samples,
            time,
        })
    }

    /// Samples `f` on the grid.
    pub fn from_fn(period: f64, n: usize, f: impl Fn(f64) -> f64) -> Result<Self> {
        let dx = period / n as f64;
        let samples = (0..n).map(|j| f(-0.5 * period + j as f64 * dx)).collect();
        Self::new(period, samples, 0.0)
    }

    pub fn n(&self) -> usize {
        self.samples.len()
    }

    pub fn dx(&self) -> f64 {
        self.period / self.n() as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -0.5 * self.period + j as f64 * self.dx()
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.n() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.samples.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.samples
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }

    /// Two-thirds dealiasing mask in FFT index order.
    pub fn dealias_mask(&self) -> Vec<bool> {
        dealias_mask(self.n())
    }
}

/// Highest retained mode index under the two-thirds rule.
pub fn dealias_cutoff(n: usize) -> usize {
    n / 3
}

pub fn dealias_mask(n: usize) -> Vec<bool> {
    let cut = dealias_cutoff(n);
    (0..n)
        .map(|i| {
            let k = if i <= n / 2 { i } else { n - i };
            k <= cut
        })
        .collect()
}

/// FFT plans, wavenumbers and scratch for one grid.
///
/// `forward` approximates the continuous transform `∫ u e^{-iκx} dx` as
/// `Δx · DFT`; `inverse` is its partner `(1/L) Σ û e^{iκx}`.
pub struct SpectralGrid {
    n: usize,
    period: f64,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    scratch: Vec<Complex64>,
    /// `κ_k` with the Nyquist entry zeroed, for odd derivatives.
    pub(crate) kappa: Vec<f64>,
    pub(crate) mask: Vec<bool>,
}

impl SpectralGrid {
    pub fn new(period: f64, n: usize) -> Result<Self> {
        if n < 16 || !n.is_power_of_two() {
            return Err(Error::parameter("n", format!("{n} must be a power of two >= 16")));
        }
        if !(period > 0.0) || !period.is_finite() {
            return Err(Error::parameter("period", format!("{period} must be positive")));
        }
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(n);
        let ifft = planner.plan_fft_inverse(n);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let kappa = (0..n)
            .map(|i| if i == n / 2 { 0.0 } else { wavenumber(i, n, period) })
            .collect();
        Ok(Self {
            n,
            period,
            fft,
            ifft,
            scratch: vec![Complex64::default(); scratch_len],
            kappa,
            mask: dealias_mask(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn period(&self) -> f64 {
        self.period
    }

    pub fn dx(&self) -> f64 {
        self.period / self.n as f64
    }

    pub fn check(&self, state: &WaveState) -> Result<()> {
        if state.n() != self.n || state.period != self.period {
            return Err(Error::Usage(format!(
                "state grid (n = {}, L = {}) does not match solver grid (n = {}, L = {})",
                state.n(),
                state.period,
                self.n,
                self.period
            )));
        }
        Ok(())
    }

    pub fn forward(&mut self, u: &[f64], out: &mut Vec<Complex64>) {
        let dx = self.dx();
        out.clear();
        out.extend(u.iter().map(|&v| Complex64::new(v * dx, 0.0)));
        self.fft.process_with_scratch(out, &mut self.scratch);
    }

    /// In-place inverse; the real part is written to `out`.
    pub fn inverse(&mut self, spectrum: &mut [Complex64], out: &mut Vec<f64>) {
        self.ifft.process_with_scratch(spectrum, &mut self.scratch);
        let scale = 1.0 / self.period;
        out.clear();
        out.extend(spectrum.iter().map(|c| c.re * scale));
    }

    /// Spectral `u_x` on the grid.
    pub fn derivative(&mut self, u: &[f64]) -> Vec<f64> {
        let mut spec = Vec::with_capacity(self.n);
        self.forward(u, &mut spec);
        for (c, &k) in spec.iter_mut().zip(&self.kappa) {
            *c *= Complex64::new(0.0, k);
        }
        let mut out = Vec::with_capacity(self.n);
        self.inverse(&mut spec, &mut out);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::{PI, TAU};

    #[test]
    fn rejects_bad_grids() {
        assert!(WaveState::new(1.0, vec![0.0; 8], 0.0).is_err());
        assert!(WaveState::new(1.0, vec![0.0; 24], 0.0).is_err());
        assert!(WaveState::new(-1.0, vec![0.0; 16], 0.0).is_err());
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert!(WaveState::new(1.0, v, 0.0).is_err());
        assert!(SpectralGrid::new(1.0, 100).is_err());
    }

    #[test]
    fn mask_keeps_lower_two_thirds() {
        let m = dealias_mask(48);
        assert_eq!(m.iter().filter(|&&b| b).count(), 2 * 16 + 1);
        assert!(m[16] && !m[17] && !m[31] && m[32]);
    }

    #[test]
    fn forward_matches_continuous_transform() {
        // ∫ exp(-x²/2) dx = √(2π)
        let (period, n) = (40.0, 256);
        let state = WaveState::from_fn(period, n, |x| (-0.5 * x * x).exp()).unwrap();
        let mut grid = SpectralGrid::new(period, n).unwrap();
        let mut spec = Vec::new();
        grid.forward(&state.samples, &mut spec);
        assert!((spec[0].re - TAU.sqrt()).abs() < 1e-12);
        let mut back = Vec::new();
        grid.inverse(&mut spec, &mut back);
        for (a, b) in back.iter().zip(&state.samples) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn derivative_of_sine() {
        let state = WaveState::from_fn(2.0 * PI, 64, f64::sin).unwrap();
        let mut grid = SpectralGrid::new(2.0 * PI, 64).unwrap();
        let d = grid.derivative(&state.samples);
        for (j, v) in d.iter().enumerate() {
            assert!((v - state.x(j).cos()).abs() < 1e-13);
        }
    }
}
