use thiserror::Error;

/// Failures raised by the model kernels.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("identity-inapplicable: lower parameter {0} is not positive")]
    IdentityInapplicable(i64),
    #[error("degenerate-dispersion at n = {n}")]
    DegenerateDispersion { n: usize },
    #[error("out-of-support: price {price} outside [{floor}, {ceiling}]")]
    OutOfSupport {
        price: f64,
        floor: f64,
        ceiling: f64,
    },
    #[error("no-oligopoly: theta_0 + theta_1 = 1")]
    NoOligopoly,
    #[error("cost-too-large: search cost must be below {threshold}")]
    CostTooLarge { threshold: f64 },
    #[error("invalid-shift: theta_{index} would become negative")]
    InvalidShift { index: usize },
    #[error("invalid-equilibrium: {0}")]
    InvalidEquilibrium(String),
    #[error("validation-error: {0}")]
    Validation(&'static str),
    #[error("degenerate: {0}")]
    Degenerate(&'static str),
}

pub type Result<T> = std::result::Result<T, ModelError>;
