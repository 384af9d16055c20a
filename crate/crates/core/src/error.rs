//! Error type shared by the simulation engines and the analysis tools.

use std::fmt;

use crate::analysis::QGaussianFit;

#[derive(Debug, Clone)]
pub enum Error {
    /// A step map produced a non-finite amplitude.
    NonFiniteAmplitude { site: i64, step: u64 },
    /// A probability or density went negative past rounding tolerance; this
    /// signals an implementation bug, not a data condition.
    ModelViolation { site: i64, value: f64 },
    /// Invalid parameter combination or malformed state.
    Config(String),
    /// Explicit time step exceeds the stability bound.
    Unstable { dt: f64, dt_max: f64 },
    /// Parameter outside the regime the numerics support.
    UnsupportedParameter { name: &'static str, value: f64 },
    /// Density reached the value where the nonlinear PDE derivation breaks down.
    DensityLimit { x: f64, rho: f64 },
    /// Too few data points for the requested analysis.
    InsufficientData { needed: usize, got: usize },
    /// Optimizer hit its iteration cap without converging; carries the best
    /// parameters found so far.
    FitFailure { best: Box<QGaussianFit<f64>> },
    /// Malformed snapshot text.
    Parse { line: usize, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFiniteAmplitude { site, step } => {
                write!(f, "non-finite amplitude at site {site} after step {step}")
            }
            Error::ModelViolation { site, value } => {
                write!(f, "model violation: negative value {value:e} at site {site}")
            }
            Error::Config(msg) => write!(f, "configuration error: {msg}"),
            Error::Unstable { dt, dt_max } => {
                write!(f, "time step {dt:e} exceeds stability bound {dt_max:e}")
            }
            Error::UnsupportedParameter { name, value } => {
                write!(f, "unsupported parameter {name} = {value}")
            }
            Error::DensityLimit { x, rho } => {
                write!(f, "density {rho} at x = {x} violates the rho < 1 assumption")
            }
            Error::InsufficientData { needed, got } => {
                write!(f, "insufficient data: need {needed}, got {got}")
            }
            Error::FitFailure { best } => write!(
                f,
                "fit failed to converge; best so far q = {}, sigma_q = {}",
                best.q, best.sigma_q
            ),
            Error::Parse { line, message } => write!(f, "parse error at line {line}: {message}"),
        }
    }
}

impl std::error::Error for Error {}
