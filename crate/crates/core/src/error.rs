use thiserror::Error;

/// Errors produced anywhere in the propagation pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("collision with {body} (distance {distance:e})")]
    Collision { body: Body, distance: f64 },

    #[error("non-finite value in RK stage {stage}")]
    NonFinite { stage: usize },

    #[error("step limit of {max_steps} reached before the endpoint")]
    MaxSteps { max_steps: usize },

    #[error("endpoint adaptation did not converge (residual {residual:e})")]
    EndpointNotConverged { residual: f64 },

    #[error("event does not change sign across the window")]
    NoSignChange,

    #[error("Kepler's equation did not converge after {iterations} iterations")]
    KeplerNotConverged { iterations: usize },

    #[error("invalid orbital elements: {0}")]
    InvalidElements(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("insufficient resolution: {0}")]
    InsufficientResolution(String),

    #[error("mode switching chattered: {switches} switches")]
    Chattering { switches: usize },

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Body {
    Primary,
    Secondary,
}

impl std::fmt::Display for Body {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Body::Primary => write!(f, "the primary P1"),
            Body::Secondary => write!(f, "the secondary P2"),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
