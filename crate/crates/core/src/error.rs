use thiserror::Error;

use crate::causal_sdp::SolverDiagnostics;

/// Errors raised across the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix data has {len} entries, expected {expected} for dimension {dim}")]
    Shape { dim: usize, len: usize, expected: usize },

    #[error("matrix contains non-finite entries")]
    NonFinite,

    #[error("matrix is not Hermitian (max deviation {deviation:e})")]
    NotHermitian { deviation: f64 },

    #[error("subsystem dimensions multiply to {product}, matrix dimension is {dim}")]
    SubsystemProduct { product: usize, dim: usize },

    #[error("duplicate subsystem label `{0}`")]
    DuplicateLabel(String),

    #[error("unknown subsystem label `{0}`")]
    UnknownLabel(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigendecomposition did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    NoConvergence { sweeps: usize, off_norm: f64 },

    #[error("matrix for gate `{name}` is not unitary (deviation {deviation:e})")]
    NotUnitary { name: String, deviation: f64 },

    #[error("state is not normalized (norm {norm})")]
    NotNormalized { norm: f64 },

    #[error("unknown gate `{0}`")]
    UnknownGate(String),

    #[error("unknown state `{0}`")]
    UnknownState(String),

    #[error("invalid process matrix: {0}")]
    InvalidProcess(String),

    #[error("parameter out of range: {0}")]
    OutOfRange(String),

    #[error("SDP solver did not converge: {0:?}")]
    SolverFailure(SolverDiagnostics),

    #[error("separability test inconclusive: decomposition gap {gap:e}, best certificate value {certificate_value:e}")]
    Inconclusive { gap: f64, certificate_value: f64 },

    #[error("no witness possible for this gate set: optimum {optimum} is not negative")]
    NoWitnessPossible { optimum: f64 },

    #[error("no optical recipe reproduces gate `{name}` (best distance {distance:e})")]
    NoRecipe { name: String, distance: f64 },

    #[error("Stokes table has no entry for pair ({0}, {1})")]
    MissingPair(String, String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
