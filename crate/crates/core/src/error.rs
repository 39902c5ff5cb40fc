use thiserror::Error;

use crate::lattice::LatticeVector;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("configuration is not valid: {0}")]
    InvalidConfiguration(String),

    #[error("configurations are not homoclinic inside the window: they differ at collar site {0}")]
    NotHomoclinic(LatticeVector),

    #[error("no lattice path inside the region connects {from} to {to}")]
    NoPath { from: LatticeVector, to: LatticeVector },

    #[error("height lift is path dependent around the plaquette at {corner} (axes {axes:?}): {lhs} vs {rhs}")]
    PathDependence {
        corner: LatticeVector,
        axes: [usize; 2],
        lhs: i64,
        rhs: i64,
    },

    #[error("boundary data admits no height extension: {0}")]
    Infeasible(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("coefficients are not in the Gibbs subspace: their sum is {0}")]
    NotGibbs(String),

    #[error("enumeration budget of {limit} exceeded after {count} {what}")]
    Budget {
        what: &'static str,
        limit: usize,
        count: usize,
    },

    #[error("chain verification failed at step {step}: {reason}")]
    Chain { step: usize, reason: String },

    #[error("pattern cannot be completed: {0}")]
    Completion(String),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Short machine-readable tag used in the CLI's error JSON.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::UnsupportedModel(_) => "unsupported_model",
            Error::InvalidArgument(_) => "invalid_argument",
            Error::InvalidConfiguration(_) => "invalid_configuration",
            Error::NotHomoclinic(_) => "not_homoclinic",
            Error::NoPath { .. } => "no_path",
            Error::PathDependence { .. } => "path_dependence",
            Error::Infeasible(_) => "infeasible",
            Error::Precondition(_) => "precondition",
            Error::NotGibbs(_) => "not_gibbs",
            Error::Budget { .. } => "budget_exceeded",
            Error::Chain { .. } => "chain_invalid",
            Error::Completion(_) => "completion",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
