use thiserror::Error;

use crate::ode::Trajectory;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Argument outside the domain where a closed form is defined.
    #[error("domain error in {op}: {detail}")]
    Domain { op: &'static str, detail: String },

    #[error("invalid parameter `{name}`: {detail}")]
    Parameter { name: &'static str, detail: String },

    #[error("configuration error: {0}")]
    Config(String),

    /// Operation called outside its contract.
    #[error("usage error: {0}")]
    Usage(String),

    /// The adaptive integrator could not make progress. The trajectory
    /// recorded up to the failure is attached.
    #[error("integration failed at t = {t}: {reason}")]
    Integration {
        t: f64,
        reason: String,
        partial: Box<Trajectory>,
    },

    /// The spectral solution stopped being resolved before breaking was detected.
    #[error("resolution lost at t = {t} (tail energy fraction {tail_fraction:.3e}); increase the mode count")]
    ResolutionLoss { t: f64, tail_fraction: f64 },
}

impl Error {
    pub(crate) fn domain(op: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain {
            op,
            detail: detail.into(),
        }
    }

    pub(crate) fn parameter(name: &'static str, detail: impl Into<String>) -> Self {
        Error::Parameter {
            name,
            detail: detail.into(),
        }
    }

    /// True for failures of the numerics rather than of the inputs.
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Integration { .. } | Error::ResolutionLoss { .. })
    }
}
