use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid {field}: {reason}")]
    Invalid { field: &'static str, reason: String },

    #[error("full-space construction refused for N = {n}: 2^N basis exceeds the N <= {max} limit")]
    TooLarge { n: usize, max: usize },

    /// A structural identity that holds by construction was violated.
    #[error("internal consistency check failed at ({row}, {col}): {detail}")]
    Inconsistent { row: usize, col: usize, detail: String },

    #[error("eigensolver did not converge for dim {dim} within {iterations} iterations")]
    NoConvergence { dim: usize, iterations: usize },

    #[error("two lowest eigenvalues are degenerate (gap {gap:e})")]
    Degenerate { gap: f64 },

    #[error("no transfer peak above {floor:e} in the search window (max |f|^2 = {peak:e})")]
    FlatChannel { peak: f64, floor: f64 },

    #[error("propagator magnitude {0} outside [0, 1]")]
    AmplitudeRange(f64),
}

impl Error {
    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::Invalid { field, reason: reason.into() }
    }

    /// Short stable tag used in CSV error rows.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Invalid { .. } => "invalid",
            Error::TooLarge { .. } => "too_large",
            Error::Inconsistent { .. } => "inconsistent",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Degenerate { .. } => "degenerate",
            Error::FlatChannel { .. } => "flat_channel",
            Error::AmplitudeRange(_) => "amplitude_range",
        }
    }

    /// Process exit code: 2 for rejected input, 3 for numerical failure.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Invalid { .. } | Error::TooLarge { .. } => 2,
            _ => 3,
        }
    }
}
