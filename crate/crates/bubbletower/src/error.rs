use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    /// A parameter or argument violates its domain bounds. `detail` lists
    /// every violated bound, not just the first.
    #[error("domain error: {detail}")]
    Domain { detail: String },

    /// The requested operation is not defined in the current exponent regime.
    #[error("regime error: {0}")]
    Regime(String),

    /// A bracketing interval has no sign change.
    #[error("no sign change on [{lo}, {hi}]: f(lo)*f(hi) = {product}")]
    NoSignChange { lo: f64, hi: f64, product: f64 },

    /// An iterative solve did not converge within its iteration budget.
    #[error("iteration budget of {0} exhausted")]
    MaxIterations(usize),

    /// The operational threshold solve could not bracket its root.
    #[error("root not bracketed: {0}")]
    RootNotBracketed(String),

    /// Quadrature or step control could not reach the requested accuracy.
    #[error("tolerance not met: requested {requested:e}, achieved {achieved:e}")]
    ToleranceNotMet { requested: f64, achieved: f64 },

    /// A trajectory value exceeded the configured ceiling.
    #[error("overflow: {0}")]
    Overflow(String),

    /// Evaluation outside the sampled span of a trajectory or trace.
    #[error("t = {t} outside sampled span [{lo}, {hi}]")]
    OutOfSpan { t: f64, lo: f64, hi: f64 },

    /// Too few samples (or critical points) to carry out the analysis.
    #[error("too few samples: {0}")]
    TooFewSamples(String),

    /// A limit estimate failed its convergence test.
    #[error("not converged: {0}")]
    NotConverged(String),

    /// A generated sequence fell below the representable floor.
    #[error("underflow: {0}")]
    Underflow(String),

    /// Malformed external input (CSV trace, scenario file).
    #[error("malformed input: {0}")]
    Malformed(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    pub fn domain(detail: impl Into<String>) -> Self {
        Error::Domain { detail: detail.into() }
    }

    /// Process exit code for the CLI: 2 domain/regime, 3 numerical, 4 i/o.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Domain { .. } | Error::Regime(_) => 2,
            Error::Io(_) | Error::Malformed(_) => 4,
            _ => 3,
        }
    }

    /// Short module-style tag used in structured error reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Domain { .. } => "domain",
            Error::Regime(_) => "regime",
            Error::NoSignChange { .. } => "no_sign_change",
            Error::MaxIterations(_) => "max_iterations",
            Error::RootNotBracketed(_) => "root_not_bracketed",
            Error::ToleranceNotMet { .. } => "tolerance_not_met",
            Error::Overflow(_) => "overflow",
            Error::OutOfSpan { .. } => "out_of_span",
            Error::TooFewSamples(_) => "too_few_samples",
            Error::NotConverged(_) => "not_converged",
            Error::Underflow(_) => "underflow",
            Error::Malformed(_) => "malformed",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
