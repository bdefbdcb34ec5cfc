//! Reducibility of multivariate Lévy-driven short-rate equations to the
//! one-dimensional α-stable CIR model.
//!
//! The crate covers the whole pipeline:
//!
//! - [`levy_spec`], [`spherical`]: Lévy measures in spherical form
//!   `ν(dy) = λ(dξ) γ_ξ(dr)`, or given by a density on `R^d`.
//! - [`laplace`]: the kernel `H(z) = e^{-z} − 1 + z` and Laplace exponents.
//! - [`conditions`]: checks of the generating-equation and reducibility
//!   hypotheses, returned as [`report::CheckReport`]s.
//! - [`reduction`]: extraction of `J_μ` and the fit `(C, α)`.
//! - [`simulate`], [`pricing`]: Euler Monte Carlo, Riccati term structures
//!   and their comparison.
//!
//! ```
//! use stable_cir::levy_spec::{stable_spec, SphericalMeasure, UnitDirection, VolatilityFunction};
//! use stable_cir::quadrature::QuadratureConfig;
//! use stable_cir::reduction::{reduce, ReduceOptions};
//!
//! let lambda = SphericalMeasure::atoms(vec![
//!     (UnitDirection::axis(2, 0), 0.5),
//!     (UnitDirection::axis(2, 1), 0.5),
//! ])?;
//! let spec = stable_spec(1.5, lambda)?;
//! let g = VolatilityFunction::power(2.0 / 3.0, vec![1.0, 1.0]);
//! let r = reduce(&spec, &g, -0.5, 0.1, &ReduceOptions::default(), &QuadratureConfig::default())?;
//! assert!((r.model.alpha - 1.5).abs() < 1e-6);
//! assert!((r.model.c - 1.0).abs() < 1e-6);
//! # Ok::<(), stable_cir::Error>(())
//! ```

pub mod conditions;
pub mod error;
pub mod laplace;
pub mod levy_spec;
pub mod pricing;
pub mod quadrature;
pub mod reduction;
pub mod report;
pub mod simulate;
pub mod spherical;

pub use error::{Error, Result};
pub use quadrature::QuadratureConfig;
pub use reduction::ReducedModel;
pub use report::{CheckItem, CheckReport, Verdict};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/quickstart.md")]
    mod quickstart {}
    #[doc = include_str!("../../../book/src/measures.md")]
    mod measures {}
    #[doc = include_str!("../../../book/src/conditions.md")]
    mod conditions {}
    #[doc = include_str!("../../../book/src/reduction.md")]
    mod reduction {}
    #[doc = include_str!("../../../book/src/pricing.md")]
    mod pricing {}
}
