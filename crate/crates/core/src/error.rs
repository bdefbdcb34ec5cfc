use thiserror::Error;

use crate::quadrature::TailEnd;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("stability index {0} outside (1, 2)")]
    AlphaOutOfRange(f64),

    #[error("integral diverges at {end} (decade growth ratio {ratio:.4})")]
    DivergentIntegral { end: TailEnd, ratio: f64 },

    #[error("quadrature did not converge: value {value:e}, error estimate {error:e}")]
    QuadratureNotConverged { value: f64, error: f64 },

    #[error("integrand produced a non-finite value")]
    NonFinite,

    #[error("direction {direction:?} has ⟨z, ξ⟩ = {product:e} < 0 on the support")]
    NegativeDirection { direction: Vec<f64>, product: f64 },

    #[error("density is negative ({value:e}) at {point:?}")]
    NegativeDensity { point: Vec<f64>, value: f64 },

    #[error("vector of norm {0} is not a unit direction")]
    NotUnit(f64),

    #[error("radial Laplace exponents have zero infimum at b = {b:e}")]
    InfimumZero { b: f64 },

    #[error("truncated moment ratio has a zero denominator at eps = {eps:e}")]
    DenominatorZero { eps: f64 },

    #[error("volatility vanishes at probe x = {x:e}")]
    ZeroVolatility { x: f64 },

    #[error("Laplace exponent is not affine in x (max relative residual {residual:e})")]
    AffinityViolation { residual: f64 },

    #[error("scaling ratios vary by {spread:e}; samples do not follow a power law")]
    NotPowerLaw { spread: f64 },

    #[error("intercept J_ν(G(0)) = {value:e} exceeds tolerance")]
    ResidualNuG0 { value: f64 },

    #[error("preconditions failed: {}", failed.join(", "))]
    ConditionsFailed { failed: Vec<String> },

    #[error("Riccati solution left [0, {cap}] at tau = {tau}")]
    BlowUp { tau: f64, cap: f64 },

    #[error("maturity {tau} outside the term-structure grid [0, {max}]")]
    MaturityOutOfRange { tau: f64, max: f64 },

    #[error("jump intensity {intensity:e} above the budget {budget:e}; raise the cutoff")]
    CutoffTooSmall { intensity: f64, budget: f64 },

    #[error("i/o: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<csv::Error> for Error {
    fn from(e: csv::Error) -> Self {
        Error::Io(e.to_string())
    }
}
