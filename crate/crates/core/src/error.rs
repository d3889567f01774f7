use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("{what} = {value} is outside the domain [{lo}, {hi}]")]
    Domain {
        what: &'static str,
        value: f64,
        lo: f64,
        hi: f64,
    },
    #[error("invalid parameters: {0}")]
    InvalidParameters(String),
    #[error("numeric failure: {0}")]
    NumericFailure(String),
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("grid too coarse to bracket the mass balance; retry with at least {suggested} points")]
    ResolutionTooCoarse { suggested: usize },
    #[error("not supported: {0}")]
    NotSupported(String),
    #[error("kernel synthesis failed: marginal residual {residual:e}")]
    SynthesisFailure { residual: f64 },
    #[error("linear program ended with status {0}")]
    LpStatus(String),
    #[error(transparent)]
    Lp(#[from] contest_lp::LpError),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameters(msg.into())
}
