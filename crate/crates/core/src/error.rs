use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("division by zero in {0}")]
    DivisionDomain(&'static str),

    #[error("geometry error: {0}")]
    Geometry(String),

    #[error("mesh error: {0}")]
    Mesh(String),

    #[error("point ({x}, {y}) is not on an interface (distance {distance:.3e})")]
    OffInterface { x: f64, y: f64, distance: f64 },

    #[error("direction j = {0} is not assembled; use the closed form for j = 3")]
    UnsupportedDirection(usize),

    #[error("assembly contract violated: {0}")]
    AssemblyContract(String),

    #[error("linear solver failed: {reason} (iterations {iterations}, relative residual {residual:.3e})")]
    Solver {
        reason: String,
        iterations: usize,
        residual: f64,
    },

    #[error("contract error: {0}")]
    Contract(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("lorentzian fit failed: {0}")]
    Fit(String),

    #[error("parse error at line {line}: {reason}")]
    Parse { line: usize, reason: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
