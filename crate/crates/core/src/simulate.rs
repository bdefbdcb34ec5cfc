//! Monte Carlo simulation of the reduced α-stable CIR equation and of the
//! original multivariate equation `dR = (aR + b)dt + ⟨G(R−), dZ⟩`.
//!
//! Both use an Euler scheme with full truncation: coefficients see `R ∨ 0`
//! and the state is clamped at zero after every step. Every path draws from
//! its own ChaCha stream, so results do not depend on the thread count.

use std::f64::consts::PI;
use std::io::Write;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Poisson, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::c_alpha;
use crate::levy_spec::{check_alpha, LevySpec, RadialMeasure, VolatilityFunction};
use crate::quadrature::{Limit, QuadratureConfig};
use crate::reduction::ReducedModel;

/// Deterministic random stream `(seed, id)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngStream {
    pub seed: u64,
    pub id: u64,
}

impl RngStream {
    pub fn new(seed: u64, id: u64) -> Self {
        Self { seed, id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut r = ChaCha8Rng::seed_from_u64(self.seed);
        r.set_stream(self.id);
        r
    }
}

/// Chambers–Mallows–Stuck sampler for increments of the compensated,
/// spectrally positive α-stable martingale with
/// `E e^{-uX} = exp(dt · scale^α · c_α · u^α)`.
#[derive(Debug, Clone, Copy)]
pub struct StableSampler {
    alpha: f64,
    sigma: f64,
    shift: f64,
    factor: f64,
}

impl StableSampler {
    pub fn new(alpha: f64, scale: f64, dt: f64) -> Result<Self> {
        check_alpha(alpha)?;
        if !(scale >= 0.0) || !(dt >= 0.0) {
            return Err(Error::InvalidArgument("scale and dt must be nonnegative".into()));
        }
        let t = (PI * alpha / 2.0).tan();
        // Standard S(α, β=1) has E e^{-uX} = exp(-u^α / cos(πα/2)).
        let sigma = scale * (dt * c_alpha(alpha)? * -(PI * alpha / 2.0).cos()).powf(1.0 / alpha);
        Ok(Self {
            alpha,
            sigma,
            shift: t.atan() / alpha,
            factor: (1.0 + t * t).powf(1.0 / (2.0 * alpha)),
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.sigma == 0.0 {
            return 0.0;
        }
        let a = self.alpha;
        let v = PI * (rng.random::<f64>() - 0.5);
        let w: f64 = Exp1.sample(rng);
        let av = a * (v + self.shift);
        let x = self.factor * av.sin() / v.cos().powf(1.0 / a) * ((v - av).cos() / w).powf((1.0 - a) / a);
        self.sigma * x
    }
}

/// One increment of the stable martingale; see [`StableSampler`].
pub fn sample_stable<R: Rng + ?Sized>(alpha: f64, scale: f64, dt: f64, rng: &mut R) -> Result<f64> {
    Ok(StableSampler::new(alpha, scale, dt)?.sample(rng))
}

/// Treatment of jumps below the cutoff.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SmallJumps {
    /// Dropped; their variance is reported.
    #[default]
    Drop,
    /// Replaced by a Gaussian with the same covariance.
    Gaussian,
}

#[derive(Debug, Clone)]
enum Segment {
    /// Density segment on `[r0, r1]` with local power exponent `p` (density ∝ r^{-p}).
    Interval { r0: f64, r1: f64, p: f64 },
    Atom(f64),
}

/// Inverse-CDF table of a radial measure restricted to `(ε, R_high)`.
#[derive(Debug, Clone)]
struct RadialTable {
    segments: Vec<Segment>,
    cumulative: Vec<f64>,
}

const TABLE_POINTS_PER_DECADE: usize = 100;

impl RadialTable {
    fn build(m: &RadialMeasure, eps: f64, r_high: f64, cfg: &QuadratureConfig) -> Result<(Self, f64, f64)> {
        let mut entries: Vec<(f64, Segment, f64)> = Vec::new(); // (sort key, segment, mass)
        let mut first_moment = 0.0;
        for &(r, w) in m.atoms() {
            if r > eps && r < r_high && w > 0.0 {
                entries.push((r, Segment::Atom(r), w));
                first_moment += w * r;
            }
        }
        if m.has_density() {
            let decades = (r_high / eps).log10();
            let n = ((decades * TABLE_POINTS_PER_DECADE as f64).ceil() as usize).max(1);
            let nodes: Vec<f64> = (0..=n).map(|k| eps * (r_high / eps).powf(k as f64 / n as f64)).collect();
            let density = |r: f64| m.density_at(r);
            for w in nodes.windows(2) {
                let (r0, r1) = (w[0], w[1]);
                let seg = crate::quadrature::integrate(&mut |r| density(r), r0, r1, &[], cfg.rel_tol, cfg.abs_tol * 1e-6, 64)?;
                let mom = crate::quadrature::integrate(&mut |r| r * density(r), r0, r1, &[], cfg.rel_tol, cfg.abs_tol * 1e-6, 64)?;
                if seg > 0.0 {
                    let (d0, d1) = (density(r0), density(r1));
                    let p = if d0 > 0.0 && d1 > 0.0 {
                        -(d1 / d0).ln() / (r1 / r0).ln()
                    } else {
                        0.0
                    };
                    entries.push((r0, Segment::Interval { r0, r1, p }, seg));
                    first_moment += mom;
                }
            }
        }
        entries.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut cumulative = Vec::with_capacity(entries.len());
        let mut acc = 0.0;
        for e in &entries {
            acc += e.2;
            cumulative.push(acc);
        }
        Ok((
            Self {
                segments: entries.into_iter().map(|e| e.1).collect(),
                cumulative,
            },
            acc,
            first_moment,
        ))
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let total = *self.cumulative.last().expect("non-empty table");
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|c| *c <= u).min(self.segments.len() - 1);
        let lo = if i == 0 { 0.0 } else { self.cumulative[i - 1] };
        let t = ((u - lo) / (self.cumulative[i] - lo)).clamp(0.0, 1.0);
        match self.segments[i] {
            Segment::Atom(r) => r,
            Segment::Interval { r0, r1, p } => {
                let q = 1.0 - p;
                if q.abs() < 1e-9 {
                    r0 * (r1 / r0).powf(t)
                } else {
                    let (a, b) = (r0.powf(q), r1.powf(q));
                    (a + t * (b - a)).powf(1.0 / q).clamp(r0, r1)
                }
            }
        }
    }
}

/// Compound-Poisson sampler for the jumps of `X` above a cutoff `ε`,
/// compensated by their mean.
#[derive(Debug, Clone)]
pub struct JumpSampler {
    dim: usize,
    directions: Vec<Vec<f64>>,
    tables: Vec<RadialTable>,
    direction_cumulative: Vec<f64>,
    /// `ν(|y| > ε)`, per unit time.
    pub intensity: f64,
    /// `∫_{ε<|y|<R_high} y ν(dy)`, per unit time.
    pub compensator: Vec<f64>,
    /// `∫_{|y|≤ε} |y|² ν(dy)`.
    pub dropped_variance: f64,
    /// `∫_{|y|≤ε} y yᵀ ν(dy)`.
    pub small_covariance: DMatrix<f64>,
    pub eps: f64,
}

/// Default cap on `ν(|y| > ε)`.
pub const DEFAULT_INTENSITY_BUDGET: f64 = 1e6;

/// Builds the jump sampler for `ν` restricted to `|y| > ε`.
pub fn compound_poisson_approx(spec: &LevySpec, eps: f64, budget: f64, cfg: &QuadratureConfig) -> Result<JumpSampler> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument(format!("cutoff {eps} must be positive")));
    }
    let d = spec.dim;
    let mut directions = Vec::new();
    let mut tables = Vec::new();
    let mut direction_cumulative = Vec::new();
    let mut intensity = 0.0;
    let mut compensator = vec![0.0; d];
    let mut dropped_variance = 0.0;
    let mut small_covariance = DMatrix::zeros(d, d);
    let r_high = cfg.r_high.max(10.0 * eps);

    for node in spec.spherical.support() {
        let m = spec.radial_at(&node);
        if m.vanishes_on_grid() {
            continue;
        }
        let xi = node.direction.coords().to_vec();
        let small = m.integrate(&|r| r * r, Limit::Zero, Limit::At(eps), cfg)?
            + m.atoms().iter().filter(|a| a.0 == eps).map(|a| a.1 * eps * eps).sum::<f64>();
        dropped_variance += node.weight * small;
        for i in 0..d {
            for j in 0..d {
                small_covariance[(i, j)] += node.weight * small * xi[i] * xi[j];
            }
        }
        if eps >= r_high {
            continue;
        }
        let (table, mass, mean) = RadialTable::build(&m, eps, r_high, cfg)?;
        if mass <= 0.0 {
            continue;
        }
        intensity += node.weight * mass;
        for i in 0..d {
            compensator[i] += node.weight * mean * xi[i];
        }
        direction_cumulative.push(intensity);
        directions.push(xi);
        tables.push(table);
    }
    if intensity > budget {
        return Err(Error::CutoffTooSmall { intensity, budget });
    }
    Ok(JumpSampler {
        dim: d,
        directions,
        tables,
        direction_cumulative,
        intensity,
        compensator,
        dropped_variance,
        small_covariance,
        eps,
    })
}

impl JumpSampler {
    /// Sum of uncompensated jumps in one step with `n ~ Poisson` given.
    fn add_jumps<R: Rng + ?Sized>(&self, n: u64, rng: &mut R, out: &mut [f64]) {
        for _ in 0..n {
            let u = rng.random::<f64>() * self.intensity;
            let k = self
                .direction_cumulative
                .partition_point(|c| *c <= u)
                .min(self.directions.len() - 1);
            let r = self.tables[k].sample(rng);
            for (o, x) in out.iter_mut().zip(&self.directions[k]) {
                *o += r * x;
            }
        }
    }

    /// Samples `n` jumps (direction and radius) without Poisson counting; for tests.
    pub fn sample_jump<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        if self.intensity > 0.0 {
            self.add_jumps(1, rng, &mut v);
        }
        v
    }
}

/// Symmetric square root of a PSD matrix (negative eigenvalues clipped).
fn psd_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Per-step increment `ΔZ` of the full Lévy process over a fixed `dt`.
#[derive(Debug, Clone)]
pub struct LevyIncrement {
    jumps: JumpSampler,
    poisson: Option<Poisson<f64>>,
    drift: Vec<f64>,
    /// Square root of the Gaussian covariance per step (Wiener part and,
    /// optionally, small jumps).
    gauss: Option<DMatrix<f64>>,
}

impl LevyIncrement {
    pub fn new(spec: &LevySpec, jumps: JumpSampler, small: SmallJumps, dt: f64) -> Result<Self> {
        let poisson = if jumps.intensity * dt > 0.0 {
            Some(Poisson::new(jumps.intensity * dt).map_err(|e| Error::InvalidArgument(e.to_string()))?)
        } else {
            None
        };
        let mut cov = spec.wiener_cov.clone();
        if small == SmallJumps::Gaussian {
            cov += &jumps.small_covariance;
        }
        let gauss = (cov.iter().any(|v| *v != 0.0)).then(|| psd_sqrt(&(cov * dt)));
        let drift = jumps.compensator.iter().map(|c| -c * dt).collect();
        Ok(Self {
            jumps,
            poisson,
            drift,
            gauss,
        })
    }

    pub fn dim(&self) -> usize {
        self.drift.len()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        out.copy_from_slice(&self.drift);
        if let Some(p) = &self.poisson {
            let n = p.sample(rng) as u64;
            self.jumps.add_jumps(n, rng, out);
        }
        if let Some(l) = &self.gauss {
            let d = out.len();
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            for i in 0..d {
                out[i] += (0..d).map(|j| l[(i, j)] * z[j]).sum::<f64>();
            }
        }
    }

    pub fn jump_sampler(&self) -> &JumpSampler {
        &self.jumps
    }
}

/// Noise term of one Euler step given the current (nonnegative) state.
trait Noise: Sync {
    fn increment(&self, x: f64, rng: &mut ChaCha8Rng, buf: &mut [f64]) -> f64;
    fn buffer_len(&self) -> usize {
        0
    }
}

struct ReducedNoise {
    c: f64,
    inv_alpha: f64,
    stable: StableSampler,
}

impl Noise for ReducedNoise {
    fn increment(&self, x: f64, rng: &mut ChaCha8Rng, _: &mut [f64]) -> f64 {
        if self.c == 0.0 {
            return 0.0;
        }
        self.c * x.powf(self.inv_alpha) * self.stable.sample(rng)
    }
}

struct OriginalNoise<'a> {
    g: &'a VolatilityFunction,
    inc: &'a LevyIncrement,
}

impl Noise for OriginalNoise<'_> {
    fn increment(&self, x: f64, rng: &mut ChaCha8Rng, buf: &mut [f64]) -> f64 {
        self.inc.sample(rng, buf);
        self.g.eval(x).iter().zip(buf.iter()).map(|(g, z)| g * z).sum()
    }

    fn buffer_len(&self) -> usize {
        self.inc.dim()
    }
}

/// Euler time grid.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub dt: f64,
    pub n_steps: usize,
}

impl TimeGrid {
    pub fn new(horizon: f64, n_steps: usize) -> Result<Self> {
        if !(horizon > 0.0) || n_steps == 0 {
            return Err(Error::InvalidArgument("horizon and step count must be positive".into()));
        }
        Ok(Self {
            dt: horizon / n_steps as f64,
            n_steps,
        })
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    /// Step index of `tau`, which must lie on the grid.
    pub fn index_of(&self, tau: f64) -> Result<usize> {
        let k = (tau / self.dt).round();
        if !(tau >= 0.0) || (k * self.dt - tau).abs() > 1e-9 * tau.max(1.0) || k as usize > self.n_steps {
            return Err(Error::InvalidArgument(format!(
                "maturity {tau} is not a grid point of dt = {} up to {}",
                self.dt,
                self.horizon()
            )));
        }
        Ok(k as usize)
    }
}

/// Simulated short-rate paths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathEnsemble {
    pub n_paths: usize,
    pub n_steps: usize,
    pub dt: f64,
    pub seed: u64,
    /// `values[path][step]`, with `values[·][0] = x₀`.
    pub values: Vec<Vec<f64>>,
    /// Number of steps where the state was clamped at zero.
    pub clamp_events: u64,
}

/// Path integrals `∫₀^τ R(s) ds` recorded at selected maturities only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralEnsemble {
    pub taus: Vec<f64>,
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    /// `integrals[path][k]` at `taus[k]` (trapezoidal rule).
    pub integrals: Vec<Vec<f64>>,
    pub clamp_events: u64,
}

enum Record<'a> {
    Full,
    Integrals(&'a [usize]),
}

struct PathOut {
    values: Vec<f64>,
    clamps: u64,
}

#[allow(clippy::too_many_arguments)]
fn drive(noise: &dyn Noise, a: f64, b: f64, x0: f64, grid: TimeGrid, n_paths: usize, seed: u64, record: Record<'_>) -> Vec<PathOut> {
    let dt = grid.dt;
    (0..n_paths as u64)
        .into_par_iter()
        .map(|p| {
            let mut rng = RngStream::new(seed, p).rng();
            let mut buf = vec![0.0; noise.buffer_len()];
            let mut x = x0;
            let mut clamps = 0u64;
            let mut integral = 0.0;
            let mut out = match record {
                Record::Full => {
                    let mut v = Vec::with_capacity(grid.n_steps + 1);
                    v.push(x0);
                    v
                }
                Record::Integrals(idx) => Vec::with_capacity(idx.len()),
            };
            let mut next = 0usize;
            if let Record::Integrals(idx) = record {
                while next < idx.len() && idx[next] == 0 {
                    out.push(0.0);
                    next += 1;
                }
            }
            for n in 1..=grid.n_steps {
                let xp = x.max(0.0);
                let mut y = x + (a * xp + b) * dt + noise.increment(xp, &mut rng, &mut buf);
                if y < 0.0 {
                    y = 0.0;
                    clamps += 1;
                }
                integral += 0.5 * (x + y) * dt;
                x = y;
                match record {
                    Record::Full => out.push(x),
                    Record::Integrals(idx) => {
                        while next < idx.len() && idx[next] == n {
                            out.push(integral);
                            next += 1;
                        }
                    }
                }
            }
            PathOut { values: out, clamps }
        })
        .collect()
}

fn reduced_noise(model: &ReducedModel, dt: f64) -> Result<ReducedNoise> {
    Ok(ReducedNoise {
        c: model.c,
        inv_alpha: 1.0 / model.alpha,
        stable: StableSampler::new(model.alpha, 1.0, dt)?,
    })
}

fn check_start(x0: f64, b: f64) -> Result<()> {
    if !(x0 >= 0.0) || !(b >= 0.0) {
        return Err(Error::InvalidArgument(format!("need x0 ≥ 0 and b ≥ 0 (x0={x0}, b={b})")));
    }
    Ok(())
}

fn ensemble(outs: Vec<PathOut>, grid: TimeGrid, seed: u64) -> PathEnsemble {
    PathEnsemble {
        n_paths: outs.len(),
        n_steps: grid.n_steps,
        dt: grid.dt,
        seed,
        clamp_events: outs.iter().map(|o| o.clamps).sum(),
        values: outs.into_iter().map(|o| o.values).collect(),
    }
}

fn integral_ensemble(outs: Vec<PathOut>, taus: &[f64], grid: TimeGrid, seed: u64) -> IntegralEnsemble {
    IntegralEnsemble {
        taus: taus.to_vec(),
        n_paths: outs.len(),
        dt: grid.dt,
        seed,
        clamp_events: outs.iter().map(|o| o.clamps).sum(),
        integrals: outs.into_iter().map(|o| o.values).collect(),
    }
}

fn tau_indices(grid: TimeGrid, taus: &[f64]) -> Result<Vec<usize>> {
    let idx: Vec<usize> = taus.iter().map(|t| grid.index_of(*t)).collect::<Result<_>>()?;
    if idx.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("maturities must be nondecreasing".into()));
    }
    Ok(idx)
}

/// Paths of `dR = (aR + b)dt + C (R∨0)^{1/α} dZ^α`.
pub fn simulate_reduced(model: &ReducedModel, x0: f64, grid: TimeGrid, n_paths: usize, seed: u64) -> Result<PathEnsemble> {
    check_start(x0, model.b)?;
    let noise = reduced_noise(model, grid.dt)?;
    Ok(ensemble(drive(&noise, model.a, model.b, x0, grid, n_paths, seed, Record::Full), grid, seed))
}

/// As [`simulate_reduced`], keeping only `∫₀^τ R` at the given maturities.
pub fn simulate_reduced_integrals(
    model: &ReducedModel,
    x0: f64,
    grid: TimeGrid,
    taus: &[f64],
    n_paths: usize,
    seed: u64,
) -> Result<IntegralEnsemble> {
    check_start(x0, model.b)?;
    let idx = tau_indices(grid, taus)?;
    let noise = reduced_noise(model, grid.dt)?;
    let outs = drive(&noise, model.a, model.b, x0, grid, n_paths, seed, Record::Integrals(&idx));
    Ok(integral_ensemble(outs, taus, grid, seed))
}

/// Settings of [`simulate_original`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OriginalOptions {
    pub eps: f64,
    pub small_jumps: SmallJumps,
    pub intensity_budget: f64,
}

impl Default for OriginalOptions {
    fn default() -> Self {
        Self {
            eps: 1e-3,
            small_jumps: SmallJumps::Drop,
            intensity_budget: DEFAULT_INTENSITY_BUDGET,
        }
    }
}

fn original_increment(spec: &LevySpec, opts: &OriginalOptions, dt: f64, cfg: &QuadratureConfig) -> Result<LevyIncrement> {
    let jumps = compound_poisson_approx(spec, opts.eps, opts.intensity_budget, cfg)?;
    LevyIncrement::new(spec, jumps, opts.small_jumps, dt)
}

/// Paths of `dR = (aR + b)dt + ⟨G(R−), dZ⟩` with compound-Poisson jumps.
#[allow(clippy::too_many_arguments)]
pub fn simulate_original(
    g: &VolatilityFunction,
    spec: &LevySpec,
    a: f64,
    b: f64,
    x0: f64,
    grid: TimeGrid,
    n_paths: usize,
    seed: u64,
    opts: &OriginalOptions,
    cfg: &QuadratureConfig,
) -> Result<PathEnsemble> {
    check_start(x0, b)?;
    let inc = original_increment(spec, opts, grid.dt, cfg)?;
    let noise = OriginalNoise { g, inc: &inc };
    Ok(ensemble(drive(&noise, a, b, x0, grid, n_paths, seed, Record::Full), grid, seed))
}

/// As [`simulate_original`], keeping only `∫₀^τ R` at the given maturities.
#[allow(clippy::too_many_arguments)]
pub fn simulate_original_integrals(
    g: &VolatilityFunction,
    spec: &LevySpec,
    a: f64,
    b: f64,
    x0: f64,
    grid: TimeGrid,
    taus: &[f64],
    n_paths: usize,
    seed: u64,
    opts: &OriginalOptions,
    cfg: &QuadratureConfig,
) -> Result<IntegralEnsemble> {
    check_start(x0, b)?;
    let idx = tau_indices(grid, taus)?;
    let inc = original_increment(spec, opts, grid.dt, cfg)?;
    let noise = OriginalNoise { g, inc: &inc };
    let outs = drive(&noise, a, b, x0, grid, n_paths, seed, Record::Integrals(&idx));
    Ok(integral_ensemble(outs, taus, grid, seed))
}

impl PathEnsemble {
    /// Values of all paths at step `n`.
    pub fn column(&self, n: usize) -> Vec<f64> {
        self.values.iter().map(|p| p[n]).collect()
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }

    /// One row per path: `path, t0, t1, …`, keeping every `stride`-th step.
    pub fn write_csv<W: Write>(&self, w: W, stride: usize) -> Result<()> {
        let stride = stride.max(1);
        let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let steps: Vec<usize> = (0..=self.n_steps).step_by(stride).collect();
        let mut header = vec!["path".to_string()];
        header.extend(steps.iter().map(|n| format!("t={}", *n as f64 * self.dt)));
        wtr.write_record(&header)?;
        for (i, p) in self.values.iter().enumerate() {
            let mut row = vec![i.to_string()];
            row.extend(steps.iter().map(|n| p[*n].to_string()));
            wtr.write_record(&row)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Two-sample Kolmogorov–Smirnov distance.
pub fn ks_distance(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// Sample mean and standard error.
pub fn mean_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    (mean, (var / n).sqrt())
}
