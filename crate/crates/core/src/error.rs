use thiserror::Error;

use crate::special::QuadratureResult;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    /// The true value exists but is not representable; `value` carries the signed infinity.
    #[error("overflow: result is {value}")]
    Overflow { value: f64 },

    #[error(
        "quadrature did not converge after {} subdivisions (best estimate {} +/- {})",
        best.subdivisions, best.value, best.error_estimate
    )]
    QuadratureNonConvergence { best: QuadratureResult },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("transition matrix row {row}: closed-form column-L entry {closed_form} disagrees with the row residual {residual}")]
    RowCompletion {
        row: usize,
        closed_form: f64,
        residual: f64,
    },

    #[error("transition matrix row {row} sums to {sum}")]
    NotStochastic { row: usize, sum: f64 },

    #[error("energy chain is reducible ({0}); review the parameters (gamma_th, C_M, P_S) so every level communicates")]
    Reducible(String),

    #[error("stationary solve residual {residual:e} exceeds tolerance")]
    StationaryResidual { residual: f64 },

    #[error("only {observed} FD-SWIPT blocks observed, need at least {required}; run more blocks")]
    TooFewFsBlocks { observed: u64, required: u64 },

    #[error("binding conflict: {0}")]
    Binding(String),

    #[error("unknown figure preset '{name}'; valid presets: {valid}")]
    UnknownPreset { name: String, valid: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
