use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid distribution: {0}")]
    InvalidDistribution(String),

    #[error("operation `{op}` is not supported for the {variant} variant")]
    UnsupportedVariant { op: &'static str, variant: &'static str },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid [{lo}, {hi}] lies outside the curve domain [{dom_lo}, {dom_hi}]")]
    Domain { lo: f64, hi: f64, dom_lo: f64, dom_hi: f64 },

    #[error("loss profile does not cover gamma = {gamma} (knots span [{lo}, {hi}])")]
    Extrapolation { gamma: f64, lo: f64, hi: f64 },

    #[error("entropy is zero; the bound degenerates to 0/0")]
    DegenerateEntropy,

    #[error("infeasible: {0}")]
    Infeasible(String),

    #[error("beam search exhausted at stage {stage}; widen the window")]
    SearchExhausted { stage: usize },

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
