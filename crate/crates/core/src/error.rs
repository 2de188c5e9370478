//! Error types shared across the crate.

use thiserror::Error;

/// Everything that can go wrong while building models, solving the dynamics,
/// or evaluating measures.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("parameter `{0}` must be positive")]
    NonPositiveParameter(&'static str),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("numerical instability: |r| reached {amplitude:.3e} at t = {t:.6} (grid too coarse?)")]
    NumericalInstability { t: f64, amplitude: f64 },

    /// Amplitude zero at a grid node; the log-derivative has a pole there.
    /// Consumed by pole-aware quadrature, not a failure.
    #[error("amplitude pole at node {0}")]
    PoleAt(usize),

    #[error("trajectories live on different grids or parameter sets")]
    GridMismatch,

    #[error("no decay-rate poles: lambda >= sqrt(2 N) gamma0")]
    NoPoles,

    #[error("intermediate map singular: amplitude below zero tolerance at t = {0:.6}")]
    SingularIntermediateMap(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.3e})")]
    NotPsd(f64),

    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NotHermitian(f64),

    #[error("weight undefined: fidelity is identically 1 (no evolution)")]
    DegenerateWeight,

    #[error("integrand has a non-integrable pole at t = {0:.6}; use the regularized measure")]
    NonIntegrablePole(f64),

    #[error("pole of order {found} exceeds regularization order alpha = {alpha}")]
    PoleOrderMismatch { found: u32, alpha: u32 },

    #[error("no sign change of the criticality indicator across [{lo}, {hi}]")]
    NoSignChange { lo: f64, hi: f64 },

    #[error("measure profile not unimodal over [{lo}, {hi}]")]
    BracketNotUnimodal { lo: f64, hi: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(&'static str),

    #[error("domain error: {0}")]
    DomainError(&'static str),

    #[error("usage error: {0}")]
    Usage(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
