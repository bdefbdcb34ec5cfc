//! Polar geometry: the polar map, radial measures induced by a density on
//! `R^d`, and integration against spherically decomposed measures.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::levy_spec::{
    norm, probe_radii, DensityLevySpec, LevySpec, RadialFamily, RadialMeasure, SphericalMeasure,
    UnitDirection, SUPPORT_THRESHOLD,
};
use crate::quadrature::{self, QuadratureConfig, TailHints};

/// Angles in the polar box together with a radius.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarPoint {
    angles: Vec<f64>,
    radius: f64,
}

impl PolarPoint {
    pub fn new(angles: Vec<f64>, radius: f64) -> Result<Self> {
        let dim = angles.len() + 1;
        if dim < 2 {
            return Err(Error::InvalidArgument("polar points need d ≥ 2".into()));
        }
        let inside = angles.iter().enumerate().all(|(i, a)| {
            let hi = if i + 2 == dim { 2.0 * PI } else { PI };
            (0.0..=hi).contains(a)
        });
        if !inside || !(radius > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "polar point outside the box: angles {angles:?}, r = {radius}"
            )));
        }
        Ok(Self { angles, radius })
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    /// Cartesian coordinates `r · ξ(angles)`.
    pub fn to_cartesian(&self) -> Vec<f64> {
        let (xi, _) = polar_map(&self.angles);
        xi.coords().iter().map(|c| c * self.radius).collect()
    }
}

/// Polar map `ξ(α₁,…,α_{d−1})` and the angular Jacobian
/// `sin^{d−2}α₁ · sin^{d−3}α₂ ⋯ sin α_{d−2}` (empty product for `d = 2`).
pub fn polar_map(angles: &[f64]) -> (UnitDirection, f64) {
    let d = angles.len() + 1;
    let mut coords = Vec::with_capacity(d);
    let mut sin_prod = 1.0;
    let mut jac = 1.0;
    for (i, a) in angles.iter().enumerate() {
        coords.push(sin_prod * a.cos());
        let s = a.sin();
        sin_prod *= s;
        if i + 2 < d {
            jac *= s.abs().powi((d - 2 - i) as i32);
        }
    }
    coords.push(sin_prod);
    let dir = UnitDirection::normalized(&coords).expect("polar map output is nonzero");
    (dir, jac.clamp(0.0, 1.0))
}

/// `√(1−ξ₁²) · √(1−(ξ₁²+ξ₂²)) ⋯ √(1−(ξ₁²+…+ξ_{d−2}²))`.
pub fn sqrt_product(xi: &[f64]) -> f64 {
    let d = xi.len();
    let mut acc = 0.0;
    let mut prod = 1.0;
    for c in xi.iter().take(d.saturating_sub(2)) {
        acc += c * c;
        prod *= (1.0 - acc).max(0.0).sqrt();
    }
    prod
}

/// Radial measure `g(rξ) r^{d−1} ∏√(…) dr` induced by a density.
pub fn radial_from_density(spec: &DensityLevySpec, xi: &UnitDirection) -> Result<RadialMeasure> {
    if xi.dim() != spec.dim {
        return Err(Error::InvalidArgument(format!(
            "direction has dimension {}, spec has {}",
            xi.dim(),
            spec.dim
        )));
    }
    let n = norm(xi.coords());
    if (n - 1.0).abs() > 1e-12 {
        return Err(Error::NotUnit(n));
    }
    Ok(radial_unchecked(spec, xi))
}

fn radial_unchecked(spec: &DensityLevySpec, xi: &UnitDirection) -> RadialMeasure {
    let d = spec.dim;
    let factor = sqrt_product(xi.coords());
    let g = spec.density_fn();
    let dir = xi.coords().to_vec();
    let shift = (d - 1) as f64;
    let hints = TailHints {
        low_exponent: spec.hints.low_exponent.map(|p| p - shift),
        high_exponent: spec.hints.high_exponent.map(|p| p - shift),
        breakpoints: spec.hints.breakpoints.clone(),
    };
    RadialMeasure::from_density(
        move |r: f64| {
            let x: Vec<f64> = dir.iter().map(|c| c * r).collect();
            g(&x) * r.powi(d as i32 - 1) * factor
        },
        hints,
    )
    .with_label("from_density")
}

/// True when `r ↦ g(rξ)` vanishes on the radial probe grid.
pub fn density_vanishes_along(spec: &DensityLevySpec, xi: &UnitDirection) -> bool {
    probe_radii().all(|r| {
        let x: Vec<f64> = xi.coords().iter().map(|c| c * r).collect();
        spec.eval_raw(&x) <= 0.0
    })
}

/// Spherical decomposition of a density spec: `λ` is Lebesgue measure on
/// the polar box restricted to directions where `g(r ξ) ≢ 0` (tested on the
/// radial probe grid), and `γ_ξ` comes from [`radial_from_density`].
pub fn density_to_levy(spec: &DensityLevySpec) -> Result<LevySpec> {
    let d = spec.dim;
    let s1 = spec.clone();
    let indicator = move |angles: &[f64]| {
        let (xi, _) = polar_map(angles);
        if density_vanishes_along(&s1, &xi) {
            0.0
        } else {
            1.0
        }
    };
    let lebesgue = SphericalMeasure::lebesgue(d)?;
    let grid_mass: f64 = lebesgue
        .grid(1)
        .iter()
        .filter(|n| !density_vanishes_along(spec, &n.direction))
        .map(|n| n.weight)
        .sum();
    let spherical = SphericalMeasure::AngularDensity {
        dim: d,
        density: Arc::new(indicator),
        total_mass: grid_mass,
    };
    let s2 = spec.clone();
    LevySpec::jump_only(
        spherical,
        RadialFamily::function(move |xi| radial_unchecked(&s2, xi)),
    )
}

/// `∫∫ f(rξ) γ_ξ(dr) λ(dξ)` by nested adaptive quadrature.
pub fn spherical_integrate(f: &dyn Fn(&[f64]) -> f64, spec: &LevySpec, cfg: &QuadratureConfig) -> Result<f64> {
    match &spec.spherical {
        SphericalMeasure::Atoms { .. } => {
            let mut total = 0.0;
            for node in spec.spherical.support() {
                let gamma = spec.radial_at(&node);
                let xi = node.direction.coords();
                let h = |r: f64| {
                    let y: Vec<f64> = xi.iter().map(|c| c * r).collect();
                    f(&y)
                };
                total += node.weight * gamma.integrate_full(&h, cfg)?;
            }
            Ok(total)
        }
        SphericalMeasure::AngularDensity { dim, density, .. } => {
            let failure = RefCell::new(None);
            let inner = |angles: &[f64]| {
                let w = density(angles);
                if w <= SUPPORT_THRESHOLD {
                    return 0.0;
                }
                let (xi, _) = polar_map(angles);
                let gamma = spec.radial_for(&xi);
                let h = |r: f64| {
                    let y: Vec<f64> = xi.coords().iter().map(|c| c * r).collect();
                    f(&y)
                };
                match gamma.integrate_full(&h, cfg) {
                    Ok(v) => w * v,
                    Err(e) => {
                        failure.borrow_mut().get_or_insert(e);
                        0.0
                    }
                }
            };
            let value = quadrature::integrate_box(
                &inner,
                &crate::levy_spec::polar_box(*dim),
                cfg.rel_tol,
                cfg.abs_tol,
                cfg.max_subdivisions,
            );
            if let Some(e) = failure.into_inner() {
                return Err(e);
            }
            value
        }
    }
}
