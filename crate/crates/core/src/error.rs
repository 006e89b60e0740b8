use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("requested {requested} states but the computational basis only supports {available}")]
    Truncation { requested: usize, available: usize },

    #[error("eigensolver failed in {context}")]
    Eigensolver { context: &'static str },

    #[error("eigenpairs not converged: max residual {max_residual:e} (state {worst_state})")]
    NotConverged { max_residual: f64, worst_state: usize },

    #[error("state not normalized: norm² = {0}")]
    Unnormalized(f64),

    #[error("truncation mismatch: {0}")]
    TruncationMismatch(String),

    #[error("states not well localized: ⟨x⟩ = {0:e}")]
    NotLocalized(f64),

    #[error("window not described by three-state model: {0}")]
    ThreeStateFit(String),

    #[error("insufficient propagation time: purity only fell to {reached}")]
    InsufficientPropagation { reached: f64 },

    #[error("no relaxation detected above cutoff {cutoff:e}")]
    NoRelaxation { cutoff: f64 },

    #[error("asymptotic state degenerate: null space dimension {0}")]
    DegenerateAttractor(usize),

    #[error("stationarity residual {0:e} too large")]
    NotStationary(f64),

    #[error("label {0} not found in spectrum")]
    LabelNotFound(usize),

    #[error("integrator step underflow at t = {0}")]
    StepUnderflow(f64),

    #[error("orbit escaped to |x| = {x:e} at t = {t}")]
    Escape { x: f64, t: f64 },

    #[error("linear solve failed: {0}")]
    Singular(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { field, reason: reason.into() }
}
