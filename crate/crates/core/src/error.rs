use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("signal level {level} exceeds the channel constraint x_max = {x_max}")]
    Constraint { level: f64, x_max: f64 },

    #[error("degenerate distribution: {0}")]
    Degenerate(String),

    #[error("output n = {n} is reachable but has zero probability under the input law")]
    UnsupportedOutput { n: usize },

    #[error("invalid threshold bracket: {0}")]
    Bracket(String),

    #[error("quadrature did not converge: estimate {value} with error {abs_error} (requested {requested})")]
    Quadrature {
        value: f64,
        abs_error: f64,
        requested: f64,
    },

    #[error("histogram count overflow")]
    CountOverflow,
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
