use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter out of domain: {0}")]
    Domain(String),
    #[error("integration diverged at r = {last_r}: {what}")]
    Diverged { last_r: f64, what: String },
    #[error("ODE step failure at t = {last_t}: {what}")]
    StepFailure { last_t: f64, what: String },
    #[error("quadrature failed to converge in {what} (estimated error {err:e})")]
    Quadrature { what: String, err: f64 },
    #[error("eigenvalue bracket [{lo}, {hi}] shows no change of far-field behavior")]
    Bracket { lo: f64, hi: f64 },
    #[error("no contraction: factors {0:?}")]
    NoContraction(Vec<f64>),
    #[error("scale separation violated at t = {t}: 18*lambda*R = {lhs} > sqrt(t) = {rhs}")]
    ScaleCollapse { t: f64, lhs: f64, rhs: f64 },
    #[error("incomplete input: {0}")]
    Incomplete(String),
    #[error("window too short or undefined fit: {0}")]
    Fit(String),
    #[error("configuration error: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
