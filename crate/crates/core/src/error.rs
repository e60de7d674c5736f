use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// Neither sufficient condition for a total firing map holds.
    #[error("ill-posed system: {0}")]
    IllPosed(String),

    #[error("root finder did not converge: {0}")]
    NoConvergence(String),

    #[error("firing map not differentiable: {0}")]
    NotDifferentiable(String),

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("insufficient data: need {needed} samples, have {have}")]
    InsufficientData { needed: usize, have: usize },

    #[error("system appears phase locked at {p}/{q}")]
    Locked { p: i64, q: u64 },

    #[error("rotation number {0} is rational at tolerance")]
    RationalRotation(f64),

    #[error("y = {0} is a critical value of the displacement function")]
    CriticalValue(f64),

    #[error("interspike-interval distribution has no density: {0}")]
    NoDensity(String),

    #[error("empty distribution")]
    EmptyDistribution,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    /// True for failures of a mathematical precondition, as opposed to bad
    /// input syntax or I/O.
    pub fn is_precondition(&self) -> bool {
        !matches!(self, Error::Parse(_) | Error::Io(_) | Error::InvalidArgument(_))
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
