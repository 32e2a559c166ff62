use thiserror::Error;

/// Errors shared across the simulators and the analytic layer.
#[derive(Debug, Error)]
pub enum Error {
    /// A model definition violated a structural invariant (dimensions,
    /// fitness bounds, generator shape, irreducibility).
    #[error("invalid model: {0}")]
    InvalidModel(String),

    /// A simulation configuration is inconsistent (population too small for
    /// the switching rates, empty horizon, bad initial state).
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    /// The integrator produced a state outside the simplex beyond the
    /// round-off tolerance; carries the offending state for diagnosis.
    #[error("simplex violation at t={t}: coordinate {index} = {value:.17e} (state {state:?})")]
    SimplexViolation {
        t: f64,
        index: usize,
        value: f64,
        state: Vec<f64>,
    },

    /// A fitness pattern cannot be relabelled into the alternating canonical
    /// form required by the two-environment edge-sign formulas.
    #[error("unsupported fitness configuration: {0}")]
    UnsupportedConfiguration(String),

    /// An edge of the simplex carries no ergodic measure, so an invasion
    /// rate with respect to it is meaningless.
    #[error("edge {edge} has no ergodic measure: {reason}")]
    EdgeNotErgodic { edge: usize, reason: String },

    /// A quantity sits on a decision boundary within tolerance and no
    /// classification can honestly be made.
    #[error("degenerate boundary case: {0}")]
    Degenerate(String),

    /// Filesystem or serialisation failure while writing experiment output.
    #[error("output error: {0}")]
    Output(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Output(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Output(e.to_string())
    }
}
