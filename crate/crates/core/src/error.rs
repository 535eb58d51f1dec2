use thiserror::Error;

use crate::grid::Representation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("expected a {expected} field, found {found}")]
    Representation { expected: Representation, found: Representation },
    #[error("unsupported derivative order {0} (only 1 and 2)")]
    UnsupportedOrder(u8),
    #[error("fields live on different grids")]
    GridMismatch,
    #[error("odd extension needs a vanishing trace, found {trace:e} at z = {plane}")]
    Compatibility { plane: f64, trace: f64 },
    #[error("even extension is not smooth: {tail:e} of its energy sits in the upper half of the z spectrum")]
    Kink { tail: f64 },
    #[error("Poisson right-hand side has mean {mean:e}; it must vanish")]
    Solvability { mean: f64 },
    #[error("barotropic constraint violated: |div vbar| = {divergence:e} exceeds {bound:e}")]
    Constraint { divergence: f64, bound: f64 },
    #[error("unsupported configuration: {0}")]
    UnsupportedConfig(String),
    #[error("blow-up at t = {time}: {reason}")]
    BlowUp { time: f64, reason: String },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("malformed data: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status for the command-line tool.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_) | Error::UnsupportedConfig(_) | Error::InvalidGrid(_) => 2,
            Error::BlowUp { .. } => 3,
            Error::Io(_) | Error::Format(_) => 4,
            _ => 1,
        }
    }
}
