use thiserror::Error;

/// Errors produced by lattice construction, evolution and index evaluation.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("operator is not Hermitian (defect {defect:.3e}, tolerance {tol:.3e})")]
    NonHermitian { defect: f64, tol: f64 },

    #[error("operator is not unitary (defect {defect:.3e}, tolerance {tol:.3e})")]
    NonUnitary { defect: f64, tol: f64 },

    #[error(
        "quasi-energy {epsilon} is not inside a spectral gap: nearest eigenphase \
         at angular distance {distance:.3e} < {required:.3e}"
    )]
    GapValidation {
        epsilon: f64,
        distance: f64,
        required: f64,
    },

    #[error(
        "loop condition violated: |U(T) - I| = {defect:.3e} exceeds {tol:.3e}; \
         use relative_gap_indices for non-periodic propagators"
    )]
    LoopCondition { defect: f64, tol: f64 },

    #[error(
        "eigenvalue {value} of P - Q falls in the ambiguous band ({tol:.3e}, {twice:.3e}); \
         enlarge the system or review the tolerance"
    )]
    AmbiguousEigenvalue { value: f64, tol: f64, twice: f64 },

    #[error("spectral reconstruction failed: defect {defect:.3e} exceeds {tol:.3e}")]
    Reconstruction { defect: f64, tol: f64 },

    #[error("k-grid too coarse: value {value:.4} shifts to {refined:.4} under doubling")]
    GridTooCoarse { value: f64, refined: f64 },

    #[error("interface term fails the confinement fit: exponent {exponent:.3e} <= 0")]
    ConfinementFit { exponent: f64 },

    #[error(transparent)]
    Linalg(#[from] ndarray_linalg::error::LinalgError),
}

pub type Result<T> = std::result::Result<T, Error>;
