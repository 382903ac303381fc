use thiserror::Error;

/// Errors raised by the quantization, evolution and verification routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("mode count mismatch: {left} vs {right}")]
    ModeMismatch { left: usize, right: usize },

    #[error("quantization contexts differ")]
    ContextMismatch,

    #[error("mass must be positive, got {0}")]
    NonPositiveMass(f64),

    #[error("not a derivation: {0}")]
    NotADerivation(String),

    #[error("non-finite value encountered at step {step}")]
    Divergence { step: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("truncation loss {loss:.3e} exceeds {tolerance:.1e}; increase dim")]
    TruncationLoss { loss: f64, tolerance: f64 },

    #[error("operator is not Hermitian (residual {0:.3e})")]
    NotHermitian(f64),

    #[error("superoperator word of length {len} exceeds the symmetrization cap of {cap}")]
    WordTooLong { len: usize, cap: usize },

    #[error("dense superoperator requested for Hilbert dimension {dim}, above the cap of {cap}")]
    TooLarge { dim: usize, cap: usize },

    #[error("no kinetic term: c_pq = 0")]
    NoKineticTerm,

    #[error(
        "unphysical diffusion: complete positivity unattainable \
         (diffusion matrix eigenvalue {min_eigenvalue:.6e})"
    )]
    Infeasible { min_eigenvalue: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;
