use thiserror::Error;

/// Errors raised across the moment library.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum EqmomError {
    #[error("moment of order {order} is undefined for this kernel")]
    MomentUndefined { order: usize },

    #[error("kernel has zero variance (point mass); cannot normalize")]
    DegenerateVariance,

    #[error("invalid kernel parameter: {0}")]
    InvalidKernel(String),

    #[error("unknown kernel id `{0}`")]
    UnknownKernel(String),

    #[error("quadrature did not converge (estimated error {error:e})")]
    Quadrature { error: f64 },

    #[error("not realizable for this kernel: {0}")]
    NotRealizable(String),

    #[error("ambiguous/non-injective configuration: {} qualifying sigma roots {roots:?}", roots.len())]
    Ambiguous { roots: Vec<f64> },

    #[error("Hankel matrix not positive definite (failing pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },

    #[error("degenerate node configuration unsupported for n = {n}")]
    DegenerateUnsupported { n: usize },

    #[error("singular Jacobian (coincident nodes or zero weight); use the degenerate branch")]
    SingularJacobian,

    #[error("inversion residual {residual:e} exceeds consistency bound")]
    Inconsistent { residual: f64 },

    #[error("no equilibrium: kernel fourth moment {m4} < 3")]
    NoEquilibrium { m4: f64 },

    #[error("{0}")]
    InvalidInput(String),

    #[error("vacuum generated in Riemann problem")]
    Vacuum,

    #[error("solver aborted in cell {cell} at t = {time}: {reason}; moments = {moments:?}")]
    SolverAbort { cell: usize, time: f64, reason: String, moments: Vec<f64> },
}

pub type Result<T> = std::result::Result<T, EqmomError>;
