use thiserror::Error;

/// Errors raised by the grid, functional, correlation, flow and Monte Carlo layers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("unknown distribution family `{0}`")]
    UnknownFamily(String),

    #[error("parameter `{name}` must be strictly positive (got {value})")]
    NonPositiveParameter { name: &'static str, value: f64 },

    #[error("invalid parameters for {family}: {reason}")]
    InvalidParameters { family: &'static str, reason: String },

    #[error("grid [{lower}, {upper}] too narrow: tail mass {tail_mass:e} exceeds {limit:e}")]
    GridTooNarrow {
        lower: f64,
        upper: f64,
        tail_mass: f64,
        limit: f64,
    },

    #[error("density has zero mass")]
    ZeroMass,

    #[error("density is not normalized (mass = {0})")]
    NotNormalized(f64),

    #[error("grid steps differ: {0} vs {1}")]
    StepMismatch(f64, f64),

    #[error("result does not fit on the grid: {0}")]
    GridOverflow(String),

    #[error("rescale factor must be positive (got {0})")]
    NonPositiveAlpha(f64),

    #[error("flow time must be nonnegative (got {0})")]
    NegativeTime(f64),

    #[error("Gaussian component with sd {sigma:e} is not resolved by grid step {step:e}")]
    UnderResolved { sigma: f64, step: f64 },

    #[error("FFT round-off clamped mass {0:e} exceeds 1e-12")]
    ClampedMass(f64),

    #[error("density is not smooth; mollify with a positive smoothing time first")]
    NonSmoothInput,

    #[error("index out of range: m = {m}, n = {n}, n_max = {n_max}")]
    IndexOutOfRange { m: usize, n: usize, n_max: usize },

    #[error("conditional density row {0} has vanishing mass")]
    DegenerateRow(usize),

    #[error("grid function does not live on the kernel grid")]
    GridMismatch,

    #[error("test function is constant under the conditioning law (variance {0:e})")]
    ConstantFunction(f64),

    #[error("no convergence after {0} iterations")]
    NoConvergence(usize),

    #[error("variance {0} is not 1")]
    VarianceNotUnit(f64),

    #[error("flow did not reach |J - 1| < {tol:e} (last value {last})")]
    TailNotConverged { last: f64, tol: f64 },

    #[error("invalid flow schedule: {0}")]
    InvalidSchedule(String),

    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },

    #[error("bandwidth must be positive (got {0})")]
    BandwidthNonPositive(f64),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
