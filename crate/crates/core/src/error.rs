use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension {0} is below the supported minimum of 3")]
    DimensionTooSmall(usize),

    #[error("drift evaluated at singular point {0:?}")]
    SingularPoint(Vec<f64>),

    #[error("quadrature did not converge: {0}")]
    QuadratureFailure(String),

    #[error("power iteration did not converge after {iterations} iterations (last estimate {estimate})")]
    NonConvergence { iterations: usize, estimate: f64 },

    #[error("Neumann series cannot converge: estimated norm of T is {0}")]
    SeriesDivergence(f64),

    #[error("interval I_s is empty: m_d * delta = {0} >= 1")]
    EmptyInterval(f64),

    #[error("no exponent window above d - 1 = {d_minus_one}: upper end is {p_hi}")]
    NoSobolevWindow { d_minus_one: f64, p_hi: f64 },

    #[error("explicit step dt = {dt} exceeds the stability bound {bound}")]
    StabilityViolation { dt: f64, bound: f64 },

    #[error("linear solver failed: {0}")]
    SolverFailure(String),

    #[error("time step too large: dt * sup|b| = {drift_step} exceeds budget {budget}")]
    StepTooLarge { drift_step: f64, budget: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
