use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("site {site} out of range for a chain of {sites} sites")]
    SiteOutOfRange { site: usize, sites: usize },

    #[error("invalid local operator: {0}")]
    InvalidLocalOperator(String),

    #[error("unsupported local dimension {0} (expected 2 or 3)")]
    UnsupportedLocalDim(usize),

    #[error("invalid basis state: {0}")]
    InvalidState(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("{family} needs at least {min} sites, got {sites}")]
    ChainTooShort {
        family: &'static str,
        min: usize,
        sites: usize,
    },

    #[error("missing bath rate `{0}`")]
    MissingRate(String),

    #[error("bath rate `{name}` must be positive, got {value}")]
    NonPositiveRate { name: String, value: f64 },

    #[error("operator is not Hermitian (|H - H^dag|_F = {0:e})")]
    NonHermitian(f64),

    #[error("sector index k = {k} out of range for N = {sites}")]
    KOutOfRange { k: usize, sites: usize },

    #[error("integer overflow evaluating {0}")]
    Overflow(&'static str),

    #[error("odd chain length {0} is not supported here")]
    OddChain(usize),

    #[error("effective temperature undefined: {0}")]
    UndefinedTemperature(String),

    #[error("dense steady-state solver limited to dim <= {limit}, got {dim}")]
    TooLargeForDense { dim: usize, limit: usize },

    #[error("evolution did not converge after {steps} steps (residual {residual:e})")]
    NotConverged { steps: u64, residual: f64 },

    #[error("evolution unstable at step {step} (residual {residual:e}); try a smaller step")]
    Unstable { step: u64, residual: f64 },

    #[error("sector ansatz violation: {0}")]
    AnsatzViolation(String),

    #[error("potentials are inconsistent; no Gibbs state can be assigned")]
    Inconsistent,

    #[error("operator has no nonzero entries")]
    ZeroOperator,

    #[error("density matrix is identically zero")]
    ZeroMatrix,

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid config: {0}")]
    InvalidConfig(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
