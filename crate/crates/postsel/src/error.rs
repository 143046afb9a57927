use thiserror::Error;

/// Errors produced by the numeric stack.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error(
        "quadrature budget of {subdivisions} subdivisions exhausted \
         (best estimate {best:e}, error estimate {error:e})"
    )]
    QuadratureBudget {
        best: f64,
        error: f64,
        subdivisions: usize,
    },

    #[error("invalid bracket [{lo}, {hi}]: f({lo}) = {f_lo:e} and f({hi}) = {f_hi:e} have the same sign")]
    BadBracket { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },

    #[error("root finder stalled near {best}")]
    RootStalled { best: f64 },

    #[error("interval [{lo}, {hi}] not covered by grid range [{grid_lo}, {grid_hi}]")]
    GridRange {
        lo: f64,
        hi: f64,
        grid_lo: f64,
        grid_hi: f64,
    },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("internal consistency check failed: {0}")]
    Consistency(String),

    #[error("invalid regression design: {0}")]
    BadDesign(String),

    #[error("cache rejected: {0}")]
    Cache(String),
}

pub type Result<T> = std::result::Result<T, Error>;
