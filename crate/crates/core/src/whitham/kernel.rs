use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest admissible kernel value at the edge of the periodic cell.
pub const KERNEL_TAIL_LIMIT: f64 = 1e-12;

/// Tolerance on `(1/L) Σ symbol(κ_k) = K(0)` at build time.
const SYMBOL_SUM_TOL: f64 = 1e-10;

/// Smooth, even, positive, decreasing and integrable kernels with `K(0) = 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    /// `K(x) = exp(-x^2 / (2 sigma^2))`.
    Gaussian { sigma: f64 },
    /// `K(x) = sech^2(x / lambda)`.
    SechSquared { lambda: f64 },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        let (name, scale) = match *self {
            KernelSpec::Gaussian { sigma } => ("sigma", sigma),
            KernelSpec::SechSquared { lambda } => ("lambda", lambda),
        };
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(Error::parameter(name, format!("{scale} must be positive")));
        }
        Ok(())
    }

    pub fn k0(&self) -> f64 {
        1.0
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => (-x * x / (2.0 * sigma * sigma)).exp(),
            KernelSpec::SechSquared { lambda } => {
                let c = (x / lambda).cosh();
                1.0 / (c * c)
            }
        }
    }

    /// Continuous Fourier transform `∫ K(x) e^{-iκx} dx`.
    pub fn symbol(&self, kappa: f64) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => {
                sigma * TAU.sqrt() * (-0.5 * sigma * sigma * kappa * kappa).exp()
            }
            KernelSpec::SechSquared { lambda } => {
                // π λ² κ / sinh(π λ κ / 2) = 2λ · a / sinh(a)
                let a = 0.5 * PI * lambda * kappa;
                let ratio = if a.abs() < 1e-4 {
                    1.0 - a * a / 6.0
                } else {
                    a / a.sinh()
                };
                2.0 * lambda * ratio
            }
        }
    }

    /// Smallest period with `K(L/2) < 1e-12`.
    pub fn min_period(&self) -> f64 {
        match *self {
            KernelSpec::Gaussian { sigma } => 2.0 * sigma * (-2.0 * KERNEL_TAIL_LIMIT.ln()).sqrt(),
            KernelSpec::SechSquared { lambda } => 2.0 * lambda * (1.0 / KERNEL_TAIL_LIMIT.sqrt()).acosh(),
        }
    }
}

/// Kernel symbol sampled at the discrete wavenumbers of a periodic grid, in
/// FFT index order.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolTable {
    pub kernel: KernelSpec,
    pub period: f64,
    pub values: Vec<f64>,
}

impl SymbolTable {
    pub fn n(&self) -> usize {
        self.values.len()
    }
}

/// Signed wavenumber `2π k / L` of FFT index `idx`.
pub fn wavenumber(idx: usize, n: usize, period: f64) -> f64 {
    let k = if idx <= n / 2 {
        idx as f64
    } else {
        idx as f64 - n as f64
    };
    TAU * k / period
}

/// Samples the kernel symbol on an `n`-point grid of the given period.
pub fn build_kernel(spec: KernelSpec, period: f64, n: usize) -> Result<SymbolTable> {
    spec.validate()?;
    if !(period > 0.0) || !period.is_finite() {
        return Err(Error::parameter("period", format!("{period} must be positive")));
    }
    if n < 2 {
        return Err(Error::parameter("n", format!("{n} modes is too few")));
    }
    let tail = spec.value(0.5 * period);
    if !(tail < KERNEL_TAIL_LIMIT) {
        return Err(Error::Config(format!(
            "kernel tail K(L/2) = {tail:.3e} for L = {period}; period must exceed {:.6}",
            spec.min_period()
        )));
    }
    let values: Vec<f64> = (0..n).map(|i| spec.symbol(wavenumber(i, n, period))).collect();
    // (1/2π) Σ symbol Δκ with Δκ = 2π/L reproduces K(0).
    let sum: f64 = values.iter().sum::<f64>() / period;
    if (sum - spec.k0()).abs() > SYMBOL_SUM_TOL {
        return Err(Error::Config(format!(
            "kernel symbol is not resolved by {n} modes on period {period}: (1/L) Σ symbol = {sum}"
        )));
    }
    Ok(SymbolTable {
        kernel: spec,
        period,
        values,
    })
}
