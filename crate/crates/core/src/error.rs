use thiserror::Error;

pub type Result<T, E = IgaError> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum IgaError {
    /// A scalar argument is outside the domain of the function.
    #[error("{name} = {value} is outside the admissible range {range}")]
    Domain {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// The constitutive matrix cannot be formed reliably for this Poisson ratio.
    #[error("constitutive matrix is singular or ill-conditioned for nu = {nu}")]
    IllConditioned { nu: f64 },

    /// Cholesky breakdown of the reduced stiffness matrix. Usually the
    /// boundary conditions leave a rigid-body mode unconstrained.
    #[error(
        "reduced stiffness matrix is not positive definite ({free} free of {total} DOFs): {detail}; \
         check that the fixed DOFs suppress all rigid-body modes"
    )]
    NotPositiveDefinite {
        free: usize,
        total: usize,
        detail: String,
    },

    #[error("sparse factorization failed: {0}")]
    Factorization(String),

    #[error("linear solve did not reach the residual target: {residual:.3e} > {tolerance:.1e}")]
    Residual { residual: f64, tolerance: f64 },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IgaError {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        IgaError::InvalidArgument(msg.into())
    }

    /// True for failures of the numerical pipeline (as opposed to bad input or I/O).
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            IgaError::NotPositiveDefinite { .. }
                | IgaError::Factorization(_)
                | IgaError::Residual { .. }
                | IgaError::IllConditioned { .. }
        )
    }
}
