use thiserror::Error;

/// Errors raised by the laboratory.
///
/// Variants are split roughly into validation failures (bad input, inadmissible
/// parameters) and numerical failures (non-convergence, non-finite values).
/// [`Error::is_validation`] tells the two apart; the CLI maps them onto
/// different exit codes.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),

    #[error("grid mismatch: expected n={expected_n}, length={expected_length}; got n={got_n}, length={got_length}")]
    GridMismatch {
        expected_n: usize,
        expected_length: f64,
        got_n: usize,
        got_length: f64,
    },

    #[error("inadmissible model: {0}")]
    Admissibility(String),

    #[error("regime mismatch: {0}")]
    RegimeMismatch(String),

    #[error("velocity outside admissible range: {0}")]
    InadmissibleVelocity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("nonzero mean: {0:e} (a periodic primitive requires zero mean)")]
    NonzeroMean(f64),

    #[error("time step {dt} is at or above the stability bound {bound}")]
    StepTooLarge { dt: f64, bound: f64 },

    #[error("non-finite value encountered: {0}")]
    NonFinite(String),

    #[error("no convergence after {iterations} iterations (last update {update:e}, |M-1| = {factor_gap:e})")]
    NoConvergence {
        iterations: usize,
        update: f64,
        factor_gap: f64,
    },

    #[error("iteration collapsed to the zero function")]
    Collapse,

    #[error("wave is not converged (residual {residual:e} > tolerance {tol:e})")]
    NotConverged { residual: f64, tol: f64 },

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("velocity c = {c}: {source}")]
    AtVelocity {
        c: f64,
        #[source]
        source: Box<Error>,
    },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True for input/parameter validation failures, false for numerical ones.
    pub fn is_validation(&self) -> bool {
        match self {
            Error::InvalidGrid(_)
            | Error::InvalidSymbol(_)
            | Error::GridMismatch { .. }
            | Error::Admissibility(_)
            | Error::RegimeMismatch(_)
            | Error::InadmissibleVelocity(_)
            | Error::InvalidParameter(_)
            | Error::NonzeroMean(_)
            | Error::StepTooLarge { .. }
            | Error::Hypothesis(_)
            | Error::Config(_)
            | Error::Json(_) => true,
            Error::AtVelocity { source, .. } => source.is_validation(),
            Error::NonFinite(_)
            | Error::NoConvergence { .. }
            | Error::Collapse
            | Error::NotConverged { .. }
            | Error::Io(_)
            | Error::Csv(_) => false,
        }
    }

    /// Short machine-readable tag for the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidGrid(_) => "invalid_grid",
            Error::InvalidSymbol(_) => "invalid_symbol",
            Error::GridMismatch { .. } => "grid_mismatch",
            Error::Admissibility(_) => "admissibility",
            Error::RegimeMismatch(_) => "regime_mismatch",
            Error::InadmissibleVelocity(_) => "inadmissible_velocity",
            Error::InvalidParameter(_) => "invalid_parameter",
            Error::NonzeroMean(_) => "nonzero_mean",
            Error::StepTooLarge { .. } => "step_too_large",
            Error::NonFinite(_) => "non_finite",
            Error::NoConvergence { .. } => "no_convergence",
            Error::Collapse => "collapse",
            Error::NotConverged { .. } => "not_converged",
            Error::Hypothesis(_) => "hypothesis",
            Error::AtVelocity { source, .. } => source.kind(),
            Error::Config(_) => "config",
            Error::Io(_) => "io",
            Error::Json(_) => "json",
            Error::Csv(_) => "csv",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
