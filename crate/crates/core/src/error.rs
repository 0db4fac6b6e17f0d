use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("symbol {0} out of range for a family with {1} symbols")]
    SymbolOutOfRange(usize, usize),

    #[error("eps = {eps} outside the admissible interval [-{eps_max}, {eps_max}]")]
    EpsOutOfRange { eps: f64, eps_max: f64 },

    #[error("invalid map family: {0}")]
    InvalidFamily(String),

    #[error("expansion certificate failed: lower bound {bound:.6} <= 1")]
    NotExpanding { bound: f64 },

    #[error("Newton iteration failed to converge for preimage of x = {x}")]
    PreimageNotConverged { x: f64 },

    #[error("invalid driving system: {0}")]
    InvalidDriving(String),

    #[error("path window [{lower}, {upper}] does not cover the requested positions [{from}, {to}]")]
    InsufficientWindow {
        lower: isize,
        upper: isize,
        from: isize,
        to: isize,
    },

    #[error("truncation order mismatch: {0} vs {1}")]
    OrderMismatch(usize, usize),

    #[error("no decay observed: fitted slope {slope:.4} >= 0")]
    NoDecay { slope: f64 },

    #[error("degenerate variance: sigma^2 = {sigma2:e}")]
    DegenerateVariance { sigma2: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
