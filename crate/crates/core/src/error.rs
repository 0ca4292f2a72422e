use thiserror::Error;

/// Errors raised across the tomography library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("unsupported Hilbert dimension {0}: the Pauli basis needs a power of two >= 2")]
    UnsupportedDimension(usize),

    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),

    #[error("matrix is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),

    #[error("parameter `{name}` = {value} outside its allowed range {range}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },

    #[error("unknown button label `{0}`")]
    UnknownButton(String),

    #[error("duplicate button label `{0}`")]
    DuplicateButton(String),

    #[error("gauge matrix is singular or ill-conditioned (condition number {0:.3e})")]
    SingularGauge(f64),

    #[error("fiducial Gram matrix has rank {rank}, need at least {required}")]
    RankDeficient { rank: usize, required: usize },

    #[error("fiducial Gram matrix is identically zero")]
    ZeroGram,

    #[error("prior produced {0} consecutive rank-deficient draws; the fiducials look informationally incomplete")]
    IncompleteFiducials(usize),

    #[error("inference failed at update {update}: every particle weight went to zero")]
    InferenceFailure { update: usize },

    #[error("invalid datum: {0}")]
    InvalidDatum(String),

    #[error("least-squares fit did not converge: {0}")]
    FitFailure(String),

    #[error("degenerate input: {0}")]
    Degenerate(String),

    #[error("fiducial algebra is not closed under multiplication")]
    NotClosed,

    #[error("hierarchy depth {available} is too shallow, need {required}")]
    InsufficientDepth { available: usize, required: usize },

    #[error("step {delta} exceeds the sum of |alpha| ({alpha_sum}); shrink the step")]
    StepTooLarge { delta: f64, alpha_sum: f64 },

    #[error("missing fiducial {0}")]
    MissingFiducial(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
