use thiserror::Error;

/// Errors raised by the toolkit. Magnitudes are reported as `f64`
/// regardless of the working scalar.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CfsError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("matrix is not selfadjoint (asymmetry {asymmetry:e} > tolerance {tolerance:e})")]
    NotSelfadjoint { asymmetry: f64, tolerance: f64 },

    #[error("signature ({n_pos}, {n_neg}) exceeds the spin dimension {n}")]
    SignatureViolation { n_pos: usize, n_neg: usize, n: usize },

    #[error("operator has rank {rank}, regular points need rank {required}")]
    SingularPoint { rank: usize, required: usize },

    #[error("series argument has ||id - A|| = {distance}, must be < 1/2")]
    OutsideConvergenceRadius { distance: f64 },

    #[error("point outside the chart domain (||id - X^-1 pi_x y|| = {distance}, must be < 1/2)")]
    OutsideChartDomain { distance: f64 },

    #[error("polynomial degrees differ ({left} vs {right})")]
    DegreeMismatch { left: usize, right: usize },

    #[error("perturbation too large: delta = {delta:e} >= {limit:e}")]
    PerturbationTooLarge { delta: f64, limit: f64 },

    #[error("finite-difference quotients do not converge: {0}")]
    NonDifferentiableDirection(String),

    #[error("chain rule needs {required} curve derivatives, {supplied} supplied")]
    InsufficientTangents { required: usize, supplied: usize },

    #[error("derivative order {0} is not supported (maximum 3)")]
    UnsupportedOrder(usize),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T, E = CfsError> = std::result::Result<T, E>;
