use thiserror::Error;

pub type Result<T, E = OdeError> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("invalid tolerance: eps must be > 0 (got {eps})")]
    InvalidTolerance { eps: f64 },

    #[error("invalid horizon: t1 must exceed t0 (t0 = {t0}, t1 = {t1})")]
    InvalidHorizon { t0: f64, t1: f64 },

    #[error("invalid step bounds: {field}: {detail}")]
    InvalidStepBounds { field: &'static str, detail: String },

    #[error("non-finite state component at index {index}")]
    NonFiniteState { index: usize },

    #[error("step size underflow at t = {t}: retry step {h} is below h_min = {h_min}")]
    MinStepUnderflow { t: f64, h: f64, h_min: f64 },

    #[error("too many consecutive rejections at t = {t} ({rejects})")]
    MaxRejectsExceeded { t: f64, rejects: usize },

    #[error("time {t} is outside the integrated interval [{t0}, {t1}]")]
    OutOfDomain { t: f64, t0: f64, t1: f64 },

    #[error("dimension mismatch for {what}: expected {expected}, found {found}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("unknown problem `{name}` (valid: {valid})")]
    UnknownProblem { name: String, valid: String },

    #[error("problem `{0}` has no closed-form solution")]
    NoExactSolution(String),
}
