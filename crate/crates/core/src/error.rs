use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} = {value} is outside its domain {domain}")]
    Domain {
        what: &'static str,
        value: f64,
        domain: String,
    },

    #[error("step size underflow at t = {t} (state {state:?})")]
    StepUnderflow { t: f64, state: Vec<f64> },

    #[error("maximum number of steps ({0}) exceeded")]
    MaxSteps(usize),

    #[error("non-finite state at t = {t}")]
    NonFinite { t: f64 },

    #[error("orbit integration failed at x0 = {x0}: {source}")]
    OrbitFailure { x0: f64, source: Box<Error> },

    #[error("no coexistence equilibrium: c·p(x) = ε has no solution in (0, K)")]
    NoEquilibrium,

    #[error("no return to the section: {0}")]
    NoReturn(String),

    #[error("root bracket failure: {0}")]
    Bracket(String),

    #[error("did not converge: {0}")]
    NonConvergence(String),

    #[error("open curve: endpoint gap {gap} exceeds {tol}")]
    OpenCurve { gap: f64, tol: f64 },

    #[error("config line {line}: {msg}")]
    Config { line: usize, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;
