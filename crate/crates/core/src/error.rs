use std::path::PathBuf;

use crate::interference::InterfererId;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("macro cell of radius {macro_radius} m cannot contain a small cell of radius {cell_radius} m")]
    InfeasibleRegion { macro_radius: f64, cell_radius: f64 },

    #[error("invalid topology: {0}")]
    InvalidTopology(String),

    #[error("topology has no tagged cell")]
    NoTaggedCell,

    #[error("Taylor mean path loss needs d > R, got d = {distance} m, R = {radius} m")]
    TaylorDomain { distance: f64, radius: f64 },

    #[error(
        "interferer {interferer} is {distance:.1} m from the tagged cell, inside the Taylor validity \
         limit of {radius} m; move the tagged cell or re-draw the topology"
    )]
    InterfererTooClose { interferer: InterfererId, distance: f64, radius: f64 },

    #[error("quadrature did not converge: {0}")]
    NonConvergence(String),

    #[error("trial count must be at least 1")]
    NoTrials,

    #[error("failed to parse {path}: {message}")]
    Parse { path: PathBuf, message: String },

    #[error("scenario validation failed: {0}")]
    Validation(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }

    /// True for errors caused by bad input rather than by the runtime
    /// (the CLI maps these to exit code 1).
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter { .. }
                | Error::InfeasibleRegion { .. }
                | Error::InvalidTopology(_)
                | Error::NoTaggedCell
                | Error::TaylorDomain { .. }
                | Error::InterfererTooClose { .. }
                | Error::NoTrials
                | Error::Parse { .. }
                | Error::Validation(_)
        )
    }
}
