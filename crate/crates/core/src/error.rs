use thiserror::Error;

/// Errors produced by the simulator library.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("photon number mismatch: input carries {input} photons, output carries {output}")]
    PhotonNumberMismatch { input: usize, output: usize },

    #[error("dimension mismatch: expected {expected} modes, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },

    #[error("resource limit exceeded: {what} is {requested}, cap is {cap}")]
    ResourceLimit {
        what: &'static str,
        requested: u128,
        cap: u128,
    },

    #[error(
        "matrix is not unitary: max |U^dagger U - I| = {deviation:e} exceeds tolerance {tol:e}"
    )]
    NotUnitary { deviation: f64, tol: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),

    #[error(
        "fringe is saturated (1 - V^2 (2p-1)^2 = {denominator:e}); Fisher information undefined"
    )]
    SaturatedFringe { denominator: f64 },

    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
