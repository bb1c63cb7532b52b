use thiserror::Error;

/// Errors raised by the toolkit. Each variant keeps the context needed to
/// act on it without re-running the failing computation.
#[derive(Debug, Error)]
pub enum SafError {
    /// A physical or numerical parameter violates its invariant.
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },

    /// A three-wire (zero-sum) constraint does not hold.
    #[error("constraint violated: {0}")]
    Constraint(String),

    /// A value is outside its admissible range.
    #[error("out of range: {0}")]
    Range(String),

    /// Input data is malformed or inconsistent.
    #[error("invalid input: {0}")]
    Input(String),

    /// A design condition has no solution for the given data.
    #[error("infeasible: {0}")]
    Infeasible(String),

    /// Controller synthesis could not produce valid gains.
    #[error("synthesis failed: {0}")]
    Synthesis(String),

    /// The DC-link voltage fell below the division floor.
    #[error("loss of controllability at t = {t:.6} s: v = {v:.3} V below floor {floor:.3} V")]
    Controllability { t: f64, v: f64, floor: f64 },

    /// The simulation produced a non-finite state.
    #[error("non-finite state at t = {t:.6} s: {detail}")]
    NonFinite { t: f64, detail: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl SafError {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        SafError::Parameter {
            name,
            reason: reason.into(),
        }
    }

    /// Short machine-readable tag of the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            SafError::Parameter { .. } => "parameter",
            SafError::Constraint(_) => "constraint",
            SafError::Range(_) => "range",
            SafError::Input(_) => "input",
            SafError::Infeasible(_) => "infeasible",
            SafError::Synthesis(_) => "synthesis",
            SafError::Controllability { .. } => "controllability",
            SafError::NonFinite { .. } => "non_finite",
            SafError::Config(_) => "config",
            SafError::Io { .. } => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, SafError>;
