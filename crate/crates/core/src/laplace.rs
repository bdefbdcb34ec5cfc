//! Laplace exponents of radial, multivariate jump and full Lévy measures.
//!
//! Every exponent is an integral of the compensated exponential kernel
//! `H(z) = e^{-z} − 1 + z` against a jump measure. For the α-stable radial
//! law `r^{-1-α} dr` the radial exponent has the closed form `c_α b^α` with
//! `c_α = Γ(2−α) / (α(α−1))`.

use std::cell::RefCell;

use crate::error::{Error, Result};
use crate::levy_spec::{check_alpha, dot, polar_box, LevySpec, RadialMeasure, SphericalMeasure, SUPPORT_THRESHOLD};
use crate::quadrature;
pub use crate::quadrature::QuadratureConfig;
use crate::spherical::polar_map;

/// Tolerance on `⟨z, ξ⟩` below zero before a direction counts as negative.
pub const NEGATIVE_TOL: f64 = 1e-12;

/// `H(z) = e^{-z} − 1 + z` for `z ≥ 0`.
///
/// Small arguments use the Taylor series `z²/2 − z³/6 + z⁴/24 − …` summed to
/// machine precision; larger ones use `z + expm1(−z)`.
pub fn kernel_h(z: f64) -> f64 {
    if z < 0.5 {
        // Σ_{k≥2} (−z)^k / k!
        let mut term = z * z * 0.5;
        let mut sum = term;
        let mut k = 2.0;
        while term.abs() > 1e-17 * sum.abs() {
            k += 1.0;
            term *= -z / k;
            sum += term;
        }
        sum
    } else {
        z + (-z).exp_m1()
    }
}

/// `Γ(x)` (Lanczos approximation).
pub fn gamma(x: f64) -> f64 {
    statrs::function::gamma::gamma(x)
}

/// `c_α = Γ(2−α) / (α(α−1))` for `α ∈ (1, 2)`.
pub fn c_alpha(alpha: f64) -> Result<f64> {
    check_alpha(alpha)?;
    Ok(gamma(2.0 - alpha) / (alpha * (alpha - 1.0)))
}

/// `J_ρ(b) = ∫₀^∞ H(b r) ρ(dr)`.
pub fn laplace_radial(rho: &RadialMeasure, b: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(b >= 0.0) {
        return Err(Error::InvalidArgument(format!("Laplace argument {b} < 0")));
    }
    if b == 0.0 {
        return Ok(0.0);
    }
    rho.integrate_full(&|r| kernel_h(b * r), cfg)
}

fn check_dimension(spec_dim: usize, z: &[f64]) -> Result<()> {
    if z.len() != spec_dim {
        return Err(Error::InvalidArgument(format!(
            "argument has dimension {}, spec has {spec_dim}",
            z.len()
        )));
    }
    Ok(())
}

/// Rejects `z` when `⟨z, ξ⟩ < 0` at a support node carrying jumps.
fn check_directions(spec: &LevySpec, z: &[f64]) -> Result<()> {
    for node in spec.spherical.support() {
        let p = node.direction.dot(z);
        if p < -NEGATIVE_TOL && !spec.radial_at(&node).vanishes_on_grid() {
            return Err(Error::NegativeDirection {
                direction: node.direction.coords().to_vec(),
                product: p,
            });
        }
    }
    Ok(())
}

/// `J_X(z) = ∫_{S^{d−1}} ∫₀^∞ H(r⟨z, ξ⟩) γ_ξ(dr) λ(dξ)`.
pub fn laplace_jump(spec: &LevySpec, z: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    check_dimension(spec.dim, z)?;
    if z.iter().all(|c| *c == 0.0) {
        return Ok(0.0);
    }
    check_directions(spec, z)?;
    match &spec.spherical {
        SphericalMeasure::Atoms { .. } => {
            let mut total = 0.0;
            for node in spec.spherical.support() {
                let p = node.direction.dot(z).max(0.0);
                total += node.weight * laplace_radial(&spec.radial_at(&node), p, cfg)?;
            }
            Ok(total)
        }
        SphericalMeasure::AngularDensity { dim, density, .. } => {
            let failure = RefCell::new(None);
            let f = |angles: &[f64]| {
                let w = density(angles);
                if w <= SUPPORT_THRESHOLD {
                    return 0.0;
                }
                let (xi, _) = polar_map(angles);
                let p = xi.dot(z);
                if p <= 0.0 {
                    return 0.0;
                }
                match laplace_radial(&spec.radial_for(&xi), p, cfg) {
                    Ok(v) => w * v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            };
            let v = quadrature::integrate_box(&f, &polar_box(*dim), cfg.rel_tol, cfg.abs_tol, cfg.max_subdivisions);
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            v
        }
    }
}

/// `J_Z(z) = ½⟨Qz, z⟩ + J_X(z)`.
pub fn laplace_total(spec: &LevySpec, z: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    check_dimension(spec.dim, z)?;
    Ok(0.5 * wiener_quadratic(spec, z) + laplace_jump(spec, z, cfg)?)
}

/// `⟨Qz, z⟩`.
pub fn wiener_quadratic(spec: &LevySpec, z: &[f64]) -> f64 {
    let q = &spec.wiener_cov;
    let mut s = 0.0;
    for i in 0..spec.dim {
        for j in 0..spec.dim {
            s += q[(i, j)] * z[i] * z[j];
        }
    }
    s
}

/// `c_α ∫ ⟨z, ξ⟩^α λ(dξ)`; atoms are summed exactly, densities by
/// angular quadrature.
pub fn stable_exponent(spherical: &SphericalMeasure, alpha: f64, z: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    let c = c_alpha(alpha)?;
    Ok(c * angular_power_integral(spherical, alpha, z, cfg)?)
}

/// `∫ ⟨z, ξ⟩^p λ(dξ)` over a support where `⟨z, ξ⟩ ≥ 0`.
pub fn angular_power_integral(spherical: &SphericalMeasure, p: f64, z: &[f64], cfg: &QuadratureConfig) -> Result<f64> {
    check_dimension(spherical.dim(), z)?;
    for node in spherical.support() {
        let prod = node.direction.dot(z);
        if prod < -NEGATIVE_TOL * (1.0 + dot(z, z).sqrt()) {
            return Err(Error::NegativeDirection {
                direction: node.direction.coords().to_vec(),
                product: prod,
            });
        }
    }
    match spherical {
        SphericalMeasure::Atoms { atoms, .. } => Ok(atoms
            .iter()
            .map(|(d, w)| w * d.dot(z).max(0.0).powf(p))
            .sum()),
        SphericalMeasure::AngularDensity { dim, density, .. } => {
            let f = |angles: &[f64]| {
                let w = density(angles);
                if w <= SUPPORT_THRESHOLD {
                    return 0.0;
                }
                let (xi, _) = polar_map(angles);
                w * xi.dot(z).max(0.0).powf(p)
            };
            quadrature::integrate_box(&f, &polar_box(*dim), cfg.rel_tol, cfg.abs_tol, cfg.max_subdivisions)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_spec::{stable_spec, UnitDirection};

    #[test]
    fn kernel_values() {
        assert_eq!(kernel_h(0.0), 0.0);
        assert!((kernel_h(1.0) - (-1f64).exp()).abs() < 1e-16);
        let z = 1e-8;
        assert!((kernel_h(z) / (0.5 * z * z) - 1.0).abs() < 1e-8);
        // Branch continuity.
        let below = kernel_h(0.5 - 1e-12);
        let above = kernel_h(0.5);
        assert!((below - above).abs() < 1e-12);
    }

    #[test]
    fn gamma_half_is_sqrt_pi() {
        assert!((gamma(0.5) - std::f64::consts::PI.sqrt()).abs() < 1e-14);
    }

    #[test]
    fn c_alpha_values() {
        let c = c_alpha(1.5).unwrap();
        assert!((c - std::f64::consts::PI.sqrt() / 0.75).abs() < 1e-14);
        assert!((c - 2.363_271).abs() < 1e-6);
        assert!((c_alpha(1.2).unwrap() - 4.850_957).abs() < 1e-5);
        assert!(c_alpha(1.0).is_err() && c_alpha(2.0).is_err());
    }

    #[test]
    fn radial_exponent_examples() {
        let cfg = QuadratureConfig::default();
        let stable = RadialMeasure::stable(1.5);
        let v = laplace_radial(&stable, 1.0, &cfg).unwrap();
        assert!((v / c_alpha(1.5).unwrap() - 1.0).abs() < 1e-8);
        assert_eq!(laplace_radial(&stable, 0.0, &cfg).unwrap(), 0.0);
        let dirac = RadialMeasure::dirac(1.0, 1.0).unwrap();
        let v = laplace_radial(&dirac, 2.0, &cfg).unwrap();
        assert!((v - ((-2f64).exp() + 1.0)).abs() < 1e-15);
    }

    #[test]
    fn negative_direction_rejected() {
        let cfg = QuadratureConfig::default();
        let spherical = SphericalMeasure::atoms(vec![
            (UnitDirection::axis(2, 0), 1.0),
            (UnitDirection::axis(2, 1), 1.0),
        ])
        .unwrap();
        let spec = stable_spec(1.5, spherical).unwrap();
        let err = laplace_jump(&spec, &[1.0, -1.0], &cfg).unwrap_err();
        assert!(matches!(err, Error::NegativeDirection { .. }));
    }

    #[test]
    fn divergent_radial_measure_reported() {
        let cfg = QuadratureConfig::default();
        // r^{-1.8}: ∫ r ρ(dr) diverges at infinity, so J does too.
        let heavy = RadialMeasure::power(1.8, 1.0);
        assert!(matches!(
            laplace_radial(&heavy, 1.0, &cfg),
            Err(Error::DivergentIntegral { .. })
        ));
    }
}
