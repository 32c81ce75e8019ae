use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("singular jet: {0}")]
    SingularJet(String),
    #[error("square-root branch error: constant term {0} is not a positive real")]
    Branch(String),
    #[error("inhomogeneous symbol: {0}")]
    Degree(String),
    #[error("symbol evaluated at ξ = 0")]
    HomogeneousSingularity,
    #[error("metric error: {0}")]
    Metric(String),
    #[error("orders exhausted: need tangential order {required_tangential} and normal order {required_normal} ({context})")]
    OrderExhausted { required_tangential: usize, required_normal: usize, context: String },
    #[error("invalid symbol: {0}")]
    InvalidSymbol(String),
    #[error("conformal obstruction: normal derivatives cannot be recovered when n = 2 ({0})")]
    ConformalObstruction(String),
    #[error("inconsistent symbol: {0}")]
    InconsistentSymbol(String),
    #[error("gauge error: {0}")]
    Gauge(String),
    #[error("solver error: {reason} (condition estimate {condition_estimate:.3e})")]
    Solver { reason: String, condition_estimate: f64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
