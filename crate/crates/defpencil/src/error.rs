//! Crate-wide error type.

/// Errors produced by pencil construction, factorizations and the solver.
#[derive(Debug, thiserror::Error)]
pub enum PencilError {
    /// Malformed arguments: dimension mismatches, out-of-range parameters.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A documented mathematical precondition does not hold.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// A factorization broke down (singular triangular factor, zero
    /// diagonal under an inverse exponent, rank-deficient QR stack).
    #[error("factorization breakdown: {0}")]
    Breakdown(String),

    /// The Halley iteration hit its iteration cap before reaching the
    /// requested spectral bound.
    #[error("halley iteration did not converge: reached l = {l_reached} after {iters} iterations (target {l_target})")]
    ConvergenceFailure {
        l_reached: f64,
        l_target: f64,
        iters: usize,
    },

    /// No grid point produced an acceptable eigenvalue split.
    #[error("split failure: {0}")]
    SplitFailure(String),

    /// Numerical rank deficiency where a full-rank object was required.
    #[error("numerical rank deficiency: {0}")]
    NumericalRank(String),

    /// File format or I/O problems in the CLI fixtures.
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// Text fixture could not be parsed.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, PencilError>;

impl PencilError {
    /// Process exit code used by the CLI: 2 for bad inputs/preconditions,
    /// 3 for convergence or split failures, 4 for I/O.
    pub fn exit_code(&self) -> i32 {
        match self {
            PencilError::InvalidInput(_) | PencilError::Precondition(_) => 2,
            PencilError::ConvergenceFailure { .. }
            | PencilError::SplitFailure(_)
            | PencilError::Breakdown(_)
            | PencilError::NumericalRank(_) => 3,
            PencilError::Io(_) | PencilError::Parse(_) => 4,
        }
    }
}
