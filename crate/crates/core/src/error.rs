use thiserror::Error;

pub type Result<T> = std::result::Result<T, LdpError>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LdpError {
    #[error("invalid piecewise function: {0}")]
    InvalidFunction(String),

    #[error("diffusion coefficient is not uniformly elliptic on {location}")]
    NonElliptic { location: String },

    #[error("{coefficient} coefficient violates the growth bound on {location}")]
    UnboundedGrowth {
        coefficient: &'static str,
        location: String,
    },

    #[error("a/sigma^2 is not piecewise constant on {location}")]
    NotCaseIII { location: String },

    #[error("hat coefficients disagree with the modified tilde pair at x = {x}: {detail}")]
    ConsistencyError { x: f64, detail: String },

    #[error("z = {0} lies outside [0, 1]")]
    DomainError(f64),

    #[error("clock reaches {reached} but the target horizon is {required}")]
    ClockShort { reached: f64, required: f64 },

    #[error("coefficients are not piecewise constant on {location}")]
    NotPiecewiseConstant { location: String },

    #[error("noise record has {noise} increments but the path has {steps} steps")]
    Misaligned { noise: usize, steps: usize },

    #[error("invalid path: {0}")]
    InvalidPath(String),

    #[error("invalid event: {0}")]
    InvalidEvent(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("model error: {0}")]
    Model(Box<LdpError>),

    #[error("i/o error: {0}")]
    Io(String),
}

impl LdpError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        LdpError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    /// Stable machine-readable tag used by the CLI error object.
    pub fn kind(&self) -> &'static str {
        match self {
            LdpError::InvalidFunction(_) => "InvalidFunction",
            LdpError::NonElliptic { .. } => "NonElliptic",
            LdpError::UnboundedGrowth { .. } => "UnboundedGrowth",
            LdpError::NotCaseIII { .. } => "NotCaseIII",
            LdpError::ConsistencyError { .. } => "ConsistencyError",
            LdpError::DomainError(_) => "DomainError",
            LdpError::ClockShort { .. } => "ClockShort",
            LdpError::NotPiecewiseConstant { .. } => "NotPiecewiseConstant",
            LdpError::Misaligned { .. } => "Misaligned",
            LdpError::InvalidPath(_) => "InvalidPath",
            LdpError::InvalidEvent(_) => "InvalidEvent",
            LdpError::InvalidArgument(_) => "InvalidArgument",
            LdpError::Config { .. } => "ConfigError",
            LdpError::Model(_) => "ModelError",
            LdpError::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for LdpError {
    fn from(e: std::io::Error) -> Self {
        LdpError::Io(e.to_string())
    }
}

impl From<csv::Error> for LdpError {
    fn from(e: csv::Error) -> Self {
        LdpError::InvalidPath(e.to_string())
    }
}
