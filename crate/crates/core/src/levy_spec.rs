//! Data model for multivariate Lévy martingales in spherical form.
//!
//! A jump measure is stored as a spherical part `λ` on the unit sphere and a
//! family of radial measures `γ_ξ` on `(0, ∞)`, so that
//! `ν(A) = ∫ ∫ 1_A(rξ) γ_ξ(dr) λ(dξ)`.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::error::{Error, Result};
use crate::quadrature::{self, Limit, QuadratureConfig, TailHints};
use crate::report::{CheckItem, CheckReport, Verdict};
use crate::spherical::polar_map;

/// Scalar function of one variable.
pub type Fn1 = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
/// Scalar function of a point in `R^n`.
pub type FnN = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

/// Angular density values below this are outside the support.
pub const SUPPORT_THRESHOLD: f64 = 1e-14;

const UNIT_TOL: f64 = 1e-12;

/// A point of the unit sphere `S^{d-1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitDirection(Vec<f64>);

impl UnitDirection {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        let norm = norm(&coords);
        if coords.is_empty() || (norm - 1.0).abs() > UNIT_TOL {
            return Err(Error::NotUnit(norm));
        }
        Ok(Self(coords))
    }

    /// Normalizes a nonzero vector.
    pub fn normalized(v: &[f64]) -> Result<Self> {
        let n = norm(v);
        if n == 0.0 || !n.is_finite() {
            return Err(Error::NotUnit(n));
        }
        Ok(Self(v.iter().map(|x| x / n).collect()))
    }

    /// `i`-th standard basis vector of `R^dim`.
    pub fn axis(dim: usize, i: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[i] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn dot(&self, z: &[f64]) -> f64 {
        dot(&self.0, z)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(v: &[f64]) -> f64 {
    dot(v, v).sqrt()
}

/// Measure on `(0, ∞)`: an optional density plus point masses.
#[derive(Clone)]
pub struct RadialMeasure {
    density: Option<Fn1>,
    atoms: Vec<(f64, f64)>,
    hints: TailHints,
    label: String,
}

impl fmt::Debug for RadialMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RadialMeasure")
            .field("label", &self.label)
            .field("has_density", &self.density.is_some())
            .field("atoms", &self.atoms)
            .field("hints", &self.hints)
            .finish()
    }
}

impl RadialMeasure {
    /// The zero measure.
    pub fn zero() -> Self {
        Self {
            density: None,
            atoms: Vec::new(),
            hints: TailHints::default(),
            label: "zero".into(),
        }
    }

    /// `scale · r^{-exponent} dr`.
    pub fn power(exponent: f64, scale: f64) -> Self {
        Self {
            density: Some(Arc::new(move |r: f64| scale * r.powf(-exponent))),
            atoms: Vec::new(),
            hints: TailHints {
                low_exponent: Some(exponent),
                high_exponent: Some(exponent),
                breakpoints: Vec::new(),
            },
            label: format!("{scale}·r^-{exponent}"),
        }
    }

    /// The α-stable radial law `r^{-1-α} dr`.
    pub fn stable(alpha: f64) -> Self {
        Self::power(1.0 + alpha, 1.0)
    }

    /// Point mass `weight · δ_radius`.
    pub fn dirac(radius: f64, weight: f64) -> Result<Self> {
        Self::zero().with_atoms(vec![(radius, weight)])
    }

    pub fn from_density(density: impl Fn(f64) -> f64 + Send + Sync + 'static, hints: TailHints) -> Self {
        Self {
            density: Some(Arc::new(density)),
            atoms: Vec::new(),
            hints,
            label: "custom".into(),
        }
    }

    /// Piecewise-linear density through `(r, value)` pairs, zero outside.
    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 || points.windows(2).any(|w| w[1].0 <= w[0].0) || points[0].0 <= 0.0 {
            return Err(Error::InvalidArgument(
                "tabulated radial density needs ≥ 2 increasing positive radii".into(),
            ));
        }
        if let Some(p) = points.iter().find(|p| p.1 < 0.0) {
            return Err(Error::NegativeDensity {
                point: vec![p.0],
                value: p.1,
            });
        }
        let breakpoints = points.iter().map(|p| p.0).collect();
        let table = points.clone();
        Ok(Self {
            density: Some(Arc::new(move |r| interpolate(&table, r))),
            atoms: Vec::new(),
            hints: TailHints {
                low_exponent: None,
                high_exponent: None,
                breakpoints,
            },
            label: "tabulated".into(),
        })
    }

    pub fn with_atoms(mut self, atoms: Vec<(f64, f64)>) -> Result<Self> {
        for &(r, w) in &atoms {
            if !(r > 0.0 && r.is_finite()) || !(w >= 0.0 && w.is_finite()) {
                return Err(Error::InvalidArgument(format!("radial atom ({r}, {w})")));
            }
        }
        self.atoms.extend(atoms);
        if self.density.is_none() {
            self.label = "atoms".into();
        }
        Ok(self)
    }

    pub fn with_hints(mut self, hints: TailHints) -> Self {
        self.hints = hints;
        self
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `c · ρ`.
    pub fn scaled(&self, c: f64) -> Self {
        let density = self.density.clone().map(|d| -> Fn1 { Arc::new(move |r| c * d(r)) });
        Self {
            density,
            atoms: self.atoms.iter().map(|&(r, w)| (r, c * w)).collect(),
            hints: self.hints.clone(),
            label: format!("{c}·{}", self.label),
        }
    }

    /// `ρ` restricted to `(lo, hi)`.
    pub fn restricted(&self, lo: f64, hi: f64) -> Self {
        let density = self
            .density
            .clone()
            .map(|d| -> Fn1 { Arc::new(move |r| if r > lo && r < hi { d(r) } else { 0.0 }) });
        let mut hints = self.hints.clone();
        hints.breakpoints.extend([lo, hi].iter().filter(|r| r.is_finite() && **r > 0.0));
        Self {
            density,
            atoms: self.atoms.iter().copied().filter(|(r, _)| *r > lo && *r < hi).collect(),
            hints,
            label: format!("{}|({lo},{hi})", self.label),
        }
    }

    /// Image of `ρ` under `r ↦ s·r`, `s > 0`.
    pub fn dilated(&self, s: f64) -> Self {
        let density = self
            .density
            .clone()
            .map(|d| -> Fn1 { Arc::new(move |v| d(v / s) / s) });
        let mut hints = self.hints.clone();
        hints.breakpoints.iter_mut().for_each(|b| *b *= s);
        Self {
            density,
            atoms: self.atoms.iter().map(|&(r, w)| (s * r, w)).collect(),
            hints,
            label: format!("{}∘/{s}", self.label),
        }
    }

    /// Sum of measures.
    pub fn sum(parts: &[RadialMeasure]) -> Self {
        let densities: Vec<Fn1> = parts.iter().filter_map(|p| p.density.clone()).collect();
        let density = if densities.is_empty() {
            None
        } else {
            Some(Arc::new(move |r: f64| densities.iter().map(|d| d(r)).sum::<f64>()) as Fn1)
        };
        let mut hints = TailHints::default();
        for p in parts {
            hints.breakpoints.extend(&p.hints.breakpoints);
            hints.low_exponent = max_opt(hints.low_exponent, p.hints.low_exponent);
            hints.high_exponent = min_opt(hints.high_exponent, p.hints.high_exponent);
        }
        Self {
            density,
            atoms: parts.iter().flat_map(|p| p.atoms.iter().copied()).collect(),
            hints,
            label: "sum".into(),
        }
    }

    pub fn density_at(&self, r: f64) -> f64 {
        self.density.as_ref().map_or(0.0, |d| d(r))
    }

    pub fn has_density(&self) -> bool {
        self.density.is_some()
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn hints(&self) -> &TailHints {
        &self.hints
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// True when there is no density and every atom weight is zero.
    pub fn is_zero(&self) -> bool {
        self.density.is_none() && self.atoms.iter().all(|a| a.1 == 0.0)
    }

    /// True when the measure is numerically zero on the log-radial probe grid.
    pub fn vanishes_on_grid(&self) -> bool {
        if self.atoms.iter().any(|a| a.1 > 0.0) {
            return false;
        }
        match &self.density {
            None => true,
            Some(d) => probe_radii().all(|r| d(r) <= 0.0),
        }
    }

    /// `∫_{(lo, hi)} h(r) ρ(dr)`.
    pub fn integrate(&self, h: &dyn Fn(f64) -> f64, lo: Limit, hi: Limit, cfg: &QuadratureConfig) -> Result<f64> {
        let in_range = |r: f64| {
            let above = match lo {
                Limit::At(a) => r > a,
                _ => true,
            };
            let below = match hi {
                Limit::At(b) => r < b,
                _ => true,
            };
            above && below
        };
        let mut total: f64 = self
            .atoms
            .iter()
            .filter(|(r, _)| in_range(*r))
            .map(|&(r, w)| w * h(r))
            .sum();
        if let Some(d) = &self.density {
            let f = |r: f64| {
                let v = d(r);
                if v == 0.0 {
                    0.0
                } else {
                    h(r) * v
                }
            };
            total += quadrature::radial_integral(&f, lo, hi, &self.hints.breakpoints, cfg)?;
        }
        Ok(total)
    }

    /// `∫ h dρ` over `(0, ∞)`.
    pub fn integrate_full(&self, h: &dyn Fn(f64) -> f64, cfg: &QuadratureConfig) -> Result<f64> {
        self.integrate(h, Limit::Zero, Limit::Infinity, cfg)
    }
}

fn max_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.max(y)),
        (x, None) | (None, x) => x,
    }
}

fn min_opt(a: Option<f64>, b: Option<f64>) -> Option<f64> {
    match (a, b) {
        (Some(x), Some(y)) => Some(x.min(y)),
        (x, None) | (None, x) => x,
    }
}

/// Log-spaced radii used to probe densities for (non)vanishing.
pub fn probe_radii() -> impl Iterator<Item = f64> {
    (-32..=32).map(|k| 10f64.powf(k as f64 / 4.0))
}

pub(crate) fn interpolate(table: &[(f64, f64)], x: f64) -> f64 {
    let n = table.len();
    if n == 0 || x < table[0].0 || x > table[n - 1].0 {
        return 0.0;
    }
    let i = table.partition_point(|p| p.0 <= x).min(n - 1).max(1);
    let (x0, y0) = table[i - 1];
    let (x1, y1) = table[i];
    y0 + (y1 - y0) * (x - x0) / (x1 - x0)
}

/// A grid node on the sphere with its `λ`-weight.
#[derive(Debug, Clone)]
pub struct WeightedDirection {
    pub direction: UnitDirection,
    pub weight: f64,
    /// Index into the atom list, for atomic measures.
    pub atom: Option<usize>,
}

/// Finite measure `λ` on the unit sphere.
#[derive(Clone)]
pub enum SphericalMeasure {
    Atoms {
        dim: usize,
        atoms: Vec<(UnitDirection, f64)>,
    },
    /// Image of `w(α) dα` on the polar box under the polar map.
    AngularDensity {
        dim: usize,
        density: FnN,
        total_mass: f64,
    },
}

impl fmt::Debug for SphericalMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SphericalMeasure::Atoms { dim, atoms } => f
                .debug_struct("Atoms")
                .field("dim", dim)
                .field("atoms", atoms)
                .finish(),
            SphericalMeasure::AngularDensity { dim, total_mass, .. } => f
                .debug_struct("AngularDensity")
                .field("dim", dim)
                .field("total_mass", total_mass)
                .finish(),
        }
    }
}

impl SphericalMeasure {
    /// Weighted point masses. Weights are validated by [`validate_spec`].
    pub fn atoms(atoms: Vec<(UnitDirection, f64)>) -> Result<Self> {
        let dim = atoms
            .first()
            .map(|a| a.0.dim())
            .ok_or_else(|| Error::InvalidArgument("empty spherical measure".into()))?;
        if atoms.iter().any(|a| a.0.dim() != dim) {
            return Err(Error::InvalidArgument("atoms of mixed dimension".into()));
        }
        Ok(SphericalMeasure::Atoms { dim, atoms })
    }

    /// Angular density on `[0,π]^{d-2} × [0,2π]`; total mass by quadrature.
    pub fn angular(
        dim: usize,
        density: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        cfg: &QuadratureConfig,
    ) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(
                "angular densities need dimension ≥ 2".into(),
            ));
        }
        let density: FnN = Arc::new(density);
        let total_mass = quadrature::integrate_box(
            &|a: &[f64]| density(a),
            &polar_box(dim),
            cfg.rel_tol.max(1e-10),
            cfg.abs_tol,
            cfg.max_subdivisions,
        )?;
        Ok(SphericalMeasure::AngularDensity {
            dim,
            density,
            total_mass,
        })
    }

    /// Image of Lebesgue measure on the polar box (mass `2π·π^{d-2}`).
    pub fn lebesgue(dim: usize) -> Result<Self> {
        if dim < 2 {
            return Err(Error::InvalidArgument(
                "angular densities need dimension ≥ 2".into(),
            ));
        }
        Ok(SphericalMeasure::AngularDensity {
            dim,
            density: Arc::new(|_| 1.0),
            total_mass: 2.0 * PI * PI.powi(dim as i32 - 2),
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            SphericalMeasure::Atoms { dim, .. } | SphericalMeasure::AngularDensity { dim, .. } => *dim,
        }
    }

    pub fn total_mass(&self) -> f64 {
        match self {
            SphericalMeasure::Atoms { atoms, .. } => atoms.iter().map(|a| a.1).sum(),
            SphericalMeasure::AngularDensity { total_mass, .. } => *total_mass,
        }
    }

    /// `c · λ`.
    pub fn scaled(&self, c: f64) -> Self {
        match self {
            SphericalMeasure::Atoms { dim, atoms } => SphericalMeasure::Atoms {
                dim: *dim,
                atoms: atoms.iter().map(|(d, w)| (d.clone(), c * w)).collect(),
            },
            SphericalMeasure::AngularDensity {
                dim,
                density,
                total_mass,
            } => {
                let d = density.clone();
                SphericalMeasure::AngularDensity {
                    dim: *dim,
                    density: Arc::new(move |a| c * d(a)),
                    total_mass: c * total_mass,
                }
            }
        }
    }

    /// Evaluation grid: the atoms themselves, or polar-box nodes with
    /// trapezoidal weights. `refine` multiplies the number of nodes per axis.
    pub fn grid(&self, refine: usize) -> Vec<WeightedDirection> {
        match self {
            SphericalMeasure::Atoms { atoms, .. } => atoms
                .iter()
                .enumerate()
                .map(|(i, (d, w))| WeightedDirection {
                    direction: d.clone(),
                    weight: *w,
                    atom: Some(i),
                })
                .collect(),
            SphericalMeasure::AngularDensity { dim, density, .. } => {
                angular_nodes(*dim, refine.max(1))
                    .into_iter()
                    .map(|(angles, cell)| {
                        let (direction, _) = polar_map(&angles);
                        WeightedDirection {
                            direction,
                            weight: density(&angles) * cell,
                            atom: None,
                        }
                    })
                    .collect()
            }
        }
    }

    /// Grid nodes where the measure is positive.
    pub fn support(&self) -> Vec<WeightedDirection> {
        self.support_refined(1)
    }

    pub fn support_refined(&self, refine: usize) -> Vec<WeightedDirection> {
        let threshold = match self {
            SphericalMeasure::Atoms { .. } => 0.0,
            SphericalMeasure::AngularDensity { .. } => SUPPORT_THRESHOLD,
        };
        self.grid(refine)
            .into_iter()
            .filter(|w| w.weight > threshold)
            .collect()
    }
}

/// The polar parameter box `[0,π]^{d-2} × [0,2π]`.
pub fn polar_box(dim: usize) -> Vec<(f64, f64)> {
    let mut b = vec![(0.0, PI); dim.saturating_sub(2)];
    if dim >= 2 {
        b.push((0.0, 2.0 * PI));
    }
    b
}

/// Node counts per axis: 512 on the circle, 64 per axis for `d = 3`,
/// 16 per axis beyond.
fn angular_nodes(dim: usize, refine: usize) -> Vec<(Vec<f64>, f64)> {
    let per_axis = match dim {
        2 => 512,
        3 => 64,
        _ => 16,
    } * refine;
    let mut nodes: Vec<(Vec<f64>, f64)> = vec![(Vec::new(), 1.0)];
    for axis in 0..dim - 1 {
        let last = axis == dim - 2;
        let mut next = Vec::with_capacity(nodes.len() * (per_axis + 1));
        for (angles, w) in &nodes {
            if last {
                // Periodic axis: equally spaced, equal weights.
                let h = 2.0 * PI / per_axis as f64;
                for k in 0..per_axis {
                    let mut a = angles.clone();
                    a.push(k as f64 * h);
                    next.push((a, w * h));
                }
            } else {
                let h = PI / per_axis as f64;
                for k in 0..=per_axis {
                    let end = k == 0 || k == per_axis;
                    let mut a = angles.clone();
                    a.push(k as f64 * h);
                    next.push((a, w * h * if end { 0.5 } else { 1.0 }));
                }
            }
        }
        nodes = next;
    }
    nodes
}

/// Radial measures indexed by direction.
#[derive(Clone)]
pub enum RadialFamily {
    /// The same `γ` for every direction.
    Identical(RadialMeasure),
    /// One measure per atom of an atomic spherical part.
    PerAtom(Vec<RadialMeasure>),
    /// Arbitrary `ξ ↦ γ_ξ`.
    Function(Arc<dyn Fn(&UnitDirection) -> RadialMeasure + Send + Sync>),
}

impl fmt::Debug for RadialFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RadialFamily::Identical(m) => f.debug_tuple("Identical").field(m).finish(),
            RadialFamily::PerAtom(ms) => f.debug_tuple("PerAtom").field(ms).finish(),
            RadialFamily::Function(_) => f.write_str("Function(..)"),
        }
    }
}

impl RadialFamily {
    pub fn function(f: impl Fn(&UnitDirection) -> RadialMeasure + Send + Sync + 'static) -> Self {
        RadialFamily::Function(Arc::new(f))
    }
}

/// Characteristic pair `(Q, ν)` of a Lévy martingale with `ν` in spherical form.
#[derive(Debug, Clone)]
pub struct LevySpec {
    pub dim: usize,
    pub wiener_cov: DMatrix<f64>,
    pub spherical: SphericalMeasure,
    pub radial: RadialFamily,
}

impl LevySpec {
    pub fn new(wiener_cov: DMatrix<f64>, spherical: SphericalMeasure, radial: RadialFamily) -> Result<Self> {
        let dim = spherical.dim();
        if wiener_cov.nrows() != dim || wiener_cov.ncols() != dim {
            return Err(Error::InvalidArgument(format!(
                "covariance is {}×{}, expected {dim}×{dim}",
                wiener_cov.nrows(),
                wiener_cov.ncols()
            )));
        }
        if let (RadialFamily::PerAtom(ms), SphericalMeasure::Atoms { atoms, .. }) = (&radial, &spherical) {
            if ms.len() != atoms.len() {
                return Err(Error::InvalidArgument(
                    "per-atom radial family length differs from atom count".into(),
                ));
            }
        } else if matches!(radial, RadialFamily::PerAtom(_)) {
            return Err(Error::InvalidArgument(
                "per-atom radial family needs an atomic spherical part".into(),
            ));
        }
        Ok(Self {
            dim,
            wiener_cov,
            spherical,
            radial,
        })
    }

    /// Pure-jump spec.
    pub fn jump_only(spherical: SphericalMeasure, radial: RadialFamily) -> Result<Self> {
        let d = spherical.dim();
        Self::new(DMatrix::zeros(d, d), spherical, radial)
    }

    pub fn with_wiener(mut self, q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != self.dim || q.ncols() != self.dim {
            return Err(Error::InvalidArgument("covariance dimension mismatch".into()));
        }
        self.wiener_cov = q;
        Ok(self)
    }

    /// `γ_ξ` for a grid node.
    pub fn radial_at(&self, node: &WeightedDirection) -> RadialMeasure {
        match &self.radial {
            RadialFamily::Identical(m) => m.clone(),
            RadialFamily::PerAtom(ms) => match node.atom {
                Some(i) => ms[i].clone(),
                None => RadialMeasure::zero(),
            },
            RadialFamily::Function(f) => f(&node.direction),
        }
    }

    /// `γ_ξ` for an arbitrary direction (per-atom families match atoms exactly).
    pub fn radial_for(&self, xi: &UnitDirection) -> RadialMeasure {
        match &self.radial {
            RadialFamily::Identical(m) => m.clone(),
            RadialFamily::Function(f) => f(xi),
            RadialFamily::PerAtom(ms) => match &self.spherical {
                SphericalMeasure::Atoms { atoms, .. } => atoms
                    .iter()
                    .position(|(d, _)| d == xi)
                    .map_or_else(RadialMeasure::zero, |i| ms[i].clone()),
                _ => RadialMeasure::zero(),
            },
        }
    }

    pub fn is_jump_free(&self) -> bool {
        self.spherical.support().iter().all(|n| self.radial_at(n).is_zero())
    }
}

/// Lévy measure given by a density `g` on `R^d`.
#[derive(Clone)]
pub struct DensityLevySpec {
    pub dim: usize,
    density: FnN,
    pub hints: TailHints,
}

impl fmt::Debug for DensityLevySpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DensityLevySpec")
            .field("dim", &self.dim)
            .field("hints", &self.hints)
            .finish()
    }
}

impl DensityLevySpec {
    /// `g(x)`, rejecting negative values.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        let v = (self.density)(x);
        if v < 0.0 || v.is_nan() {
            return Err(Error::NegativeDensity {
                point: x.to_vec(),
                value: v,
            });
        }
        Ok(v)
    }

    /// `g(x)` without the sign check.
    pub fn eval_raw(&self, x: &[f64]) -> f64 {
        (self.density)(x)
    }

    pub(crate) fn density_fn(&self) -> FnN {
        self.density.clone()
    }
}

/// Wraps a jump density on `R^d`, `d ≥ 2`.
pub fn density_spec(
    g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
    dim: usize,
    hints: TailHints,
) -> Result<DensityLevySpec> {
    if dim < 2 {
        return Err(Error::InvalidArgument(
            "density specs need dimension ≥ 2".into(),
        ));
    }
    Ok(DensityLevySpec {
        dim,
        density: Arc::new(g),
        hints,
    })
}

/// α-stable martingale: `Q = 0`, `γ_ξ(dr) = r^{-1-α} dr` for every `ξ`.
pub fn stable_spec(alpha: f64, spherical: SphericalMeasure) -> Result<LevySpec> {
    check_alpha(alpha)?;
    LevySpec::jump_only(spherical, RadialFamily::Identical(RadialMeasure::stable(alpha)))
}

pub(crate) fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 1.0 && alpha < 2.0 {
        Ok(())
    } else {
        Err(Error::AlphaOutOfRange(alpha))
    }
}

/// `G: [0, ∞) → R^d`.
#[derive(Clone)]
pub struct VolatilityFunction {
    dim: usize,
    eval: Arc<dyn Fn(f64) -> Vec<f64> + Send + Sync>,
    pub continuous: bool,
    pub kind: VolatilityKind,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VolatilityKind {
    /// `G(x) = x^{exponent} · direction`.
    Power { exponent: f64, direction: Vec<f64> },
    /// Componentwise linear interpolation of `(x, G(x))`.
    Tabulated { points: Vec<(f64, Vec<f64>)> },
    Custom,
}

impl fmt::Debug for VolatilityFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("VolatilityFunction")
            .field("dim", &self.dim)
            .field("continuous", &self.continuous)
            .field("kind", &self.kind)
            .finish()
    }
}

impl VolatilityFunction {
    pub fn power(exponent: f64, direction: Vec<f64>) -> Self {
        let v = direction.clone();
        Self {
            dim: direction.len(),
            eval: Arc::new(move |x: f64| {
                let s = if x == 0.0 { 0.0 } else { x.max(0.0).powf(exponent) };
                v.iter().map(|c| s * c).collect()
            }),
            continuous: exponent > 0.0,
            kind: VolatilityKind::Power { exponent, direction },
        }
    }

    pub fn tabulated(points: Vec<(f64, Vec<f64>)>) -> Result<Self> {
        let dim = points.first().map(|p| p.1.len()).unwrap_or(0);
        if points.len() < 2 || dim == 0 || points.iter().any(|p| p.1.len() != dim) {
            return Err(Error::InvalidArgument(
                "tabulated G needs ≥ 2 points of equal dimension".into(),
            ));
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidArgument("tabulated G abscissae must increase".into()));
        }
        let table = points.clone();
        Ok(Self {
            dim,
            eval: Arc::new(move |x: f64| {
                let x = x.clamp(table[0].0, table[table.len() - 1].0);
                let i = table.partition_point(|p| p.0 <= x).clamp(1, table.len() - 1);
                let (x0, g0) = &table[i - 1];
                let (x1, g1) = &table[i];
                let t = (x - x0) / (x1 - x0);
                g0.iter().zip(g1).map(|(a, b)| a + t * (b - a)).collect()
            }),
            continuous: true,
            kind: VolatilityKind::Tabulated { points },
        })
    }

    pub fn from_fn(dim: usize, f: impl Fn(f64) -> Vec<f64> + Send + Sync + 'static) -> Self {
        Self {
            dim,
            eval: Arc::new(f),
            continuous: true,
            kind: VolatilityKind::Custom,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, x: f64) -> Vec<f64> {
        (self.eval)(x)
    }
}

/// Structural validation of a [`LevySpec`].
pub fn validate_spec(spec: &LevySpec, cfg: &QuadratureConfig) -> Result<CheckReport> {
    if spec.dim < 1 {
        return Err(Error::InvalidArgument("dimension must be ≥ 1".into()));
    }
    if let SphericalMeasure::Atoms { atoms, .. } = &spec.spherical {
        if atoms.is_empty() {
            return Err(Error::InvalidArgument("empty spherical measure".into()));
        }
    }
    cfg.validate()?;
    let mut report = CheckReport::new("validate_spec");
    let q = &spec.wiener_cov;

    let asym = (q - q.transpose()).abs().max();
    report.push(
        CheckItem::new("wiener_symmetric", Verdict::from_bool(asym <= 1e-10))
            .evidence("max_asymmetry", asym)
            .tolerance(1e-10),
    );
    let sym = (q + q.transpose()) * 0.5;
    let min_eig = if spec.dim == 0 {
        0.0
    } else {
        SymmetricEigen::new(sym).eigenvalues.min()
    };
    report.push(
        CheckItem::new("wiener_psd", Verdict::from_bool(min_eig >= -1e-10))
            .evidence("min_eigenvalue", min_eig)
            .tolerance(1e-10),
    );

    let mass = spec.spherical.total_mass();
    report.push(
        CheckItem::new(
            "spherical_mass_positive",
            Verdict::from_bool(mass.is_finite() && mass > 0.0),
        )
        .evidence("total_mass", mass),
    );
    if let SphericalMeasure::Atoms { atoms, .. } = &spec.spherical {
        let min_w = atoms.iter().map(|a| a.1).fold(f64::INFINITY, f64::min);
        report.push(
            CheckItem::new("atom_weights_positive", Verdict::from_bool(min_w > 0.0))
                .evidence("min_weight", min_w),
        );
        let worst = atoms
            .iter()
            .map(|a| (norm(a.0.coords()) - 1.0).abs())
            .fold(0.0, f64::max);
        report.push(
            CheckItem::new("directions_unit", Verdict::from_bool(worst <= UNIT_TOL))
                .evidence("max_norm_defect", worst)
                .tolerance(UNIT_TOL),
        );
    }

    let support = spec.spherical.support();
    let degenerate = support
        .iter()
        .filter(|n| spec.radial_at(n).vanishes_on_grid())
        .count();
    report.push(
        CheckItem::new("radial_nondegenerate", Verdict::from_bool(degenerate == 0))
            .evidence("degenerate_directions", degenerate as f64)
            .evidence("support_nodes", support.len() as f64),
    );

    let martingale = crate::conditions::check_martingale(spec, cfg);
    report.merge("", martingale);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_atoms(w1: f64, w2: f64) -> SphericalMeasure {
        SphericalMeasure::atoms(vec![
            (UnitDirection::axis(2, 0), w1),
            (UnitDirection::axis(2, 1), w2),
        ])
        .unwrap()
    }

    #[test]
    fn unit_direction_rejects_non_unit() {
        assert!(UnitDirection::new(vec![1.0, 1.0]).is_err());
        assert!(UnitDirection::new(vec![0.6, 0.8]).is_ok());
    }

    #[test]
    fn stable_spec_radial_density() {
        let spec = stable_spec(1.5, two_atoms(1.0, 1.0)).unwrap();
        for node in spec.spherical.support() {
            let m = spec.radial_at(&node);
            assert!((m.density_at(4.0) - 4f64.powf(-2.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn stable_spec_rejects_alpha() {
        assert_eq!(
            stable_spec(0.8, two_atoms(1.0, 1.0)).unwrap_err(),
            Error::AlphaOutOfRange(0.8)
        );
    }

    #[test]
    fn stable_spec_on_angular_density() {
        let cfg = QuadratureConfig::default();
        let quarter = SphericalMeasure::angular(
            2,
            |a| if a[0] <= std::f64::consts::FRAC_PI_2 { 1.0 } else { 0.0 },
            &cfg,
        )
        .unwrap();
        let spec = stable_spec(1.5, quarter).unwrap();
        let support = spec.spherical.support();
        assert!(!support.is_empty());
        for node in &support {
            assert!((spec.radial_at(node).density_at(2.0) - 2f64.powf(-2.5)).abs() < 1e-15);
        }
    }

    #[test]
    fn validate_isotropic_stable_passes() {
        let cfg = QuadratureConfig::default();
        let spec = stable_spec(1.5, SphericalMeasure::lebesgue(2).unwrap()).unwrap();
        let report = validate_spec(&spec, &cfg).unwrap();
        assert!(report.passed(), "{report}");
    }

    #[test]
    fn validate_flags_zero_weight() {
        let cfg = QuadratureConfig::default();
        let spec = stable_spec(1.5, two_atoms(1.0, 0.0)).unwrap();
        let report = validate_spec(&spec, &cfg).unwrap();
        assert_eq!(report.item("atom_weights_positive").unwrap().verdict, Verdict::Fail);
        assert!(!report.passed());
    }

    #[test]
    fn validate_flags_asymmetric_q() {
        let cfg = QuadratureConfig::default();
        let q = DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.0, 1.0]);
        let spec = stable_spec(1.5, two_atoms(1.0, 1.0)).unwrap().with_wiener(q).unwrap();
        let report = validate_spec(&spec, &cfg).unwrap();
        assert_eq!(report.item("wiener_symmetric").unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn validate_is_idempotent() {
        let cfg = QuadratureConfig::default();
        let spec = stable_spec(1.5, two_atoms(1.0, 2.0)).unwrap();
        assert_eq!(validate_spec(&spec, &cfg).unwrap(), validate_spec(&spec, &cfg).unwrap());
    }

    #[test]
    fn empty_atoms_rejected() {
        assert!(SphericalMeasure::atoms(vec![]).is_err());
    }

    #[test]
    fn density_spec_checks() {
        assert!(density_spec(|x| crate::levy_spec::norm(x).powf(-3.5), 1, TailHints::default()).is_err());
        let s = density_spec(|x| crate::levy_spec::norm(x).powf(-3.5), 2, TailHints {
            low_exponent: Some(3.5),
            ..Default::default()
        })
        .unwrap();
        assert_eq!(s.hints.low_exponent, Some(3.5));
        let neg = density_spec(|x| x[0], 2, TailHints::default()).unwrap();
        assert!(matches!(neg.eval(&[-1.0, 0.0]), Err(Error::NegativeDensity { .. })));
    }

    #[test]
    fn angular_grid_weights_sum_to_mass() {
        for d in [2, 3] {
            let m = SphericalMeasure::lebesgue(d).unwrap();
            let total: f64 = m.grid(1).iter().map(|n| n.weight).sum();
            assert!((total - m.total_mass()).abs() < 1e-9 * m.total_mass());
        }
    }

    #[test]
    fn tabulated_volatility_interpolates() {
        let g = VolatilityFunction::tabulated(vec![(0.0, vec![0.0, 0.0]), (2.0, vec![2.0, 4.0])]).unwrap();
        assert_eq!(g.eval(1.0), vec![1.0, 2.0]);
    }
}
