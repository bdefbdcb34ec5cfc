//! Reduction of a multivariate generating equation to the one-dimensional
//! α-stable CIR equation `dR = (aR + b)dt + C R^{1/α} dZ^α`.
//!
//! The induced measure `μ` is never formed explicitly. Its Laplace exponent
//! is read off as the slope in `x` of `J_Z(b G(x))`, then fitted to a power
//! law `J_μ(b) = C̃ b^α`. With the normalisation `μ(dv) = v^{-1-α} dv` the
//! volatility constant is `C = (C̃ / c_α)^{1/α}`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    check_martingale, check_positive_jumps, check_variation, default_balance_grid, log_grid, radial_balance,
    wiener_cir_check,
};
use crate::error::{Error, Result};
use crate::laplace::{angular_power_integral, c_alpha, kernel_h, laplace_radial, laplace_total};
use crate::levy_spec::{check_alpha, norm, LevySpec, RadialMeasure, SphericalMeasure, UnitDirection, VolatilityFunction};
use crate::quadrature::QuadratureConfig;
use crate::report::{CheckItem, CheckReport, Verdict};

/// Tolerance on the relative affinity residual of [`mu_extract`].
pub const AFFINITY_TOL: f64 = 1e-4;
/// Tolerance on the log-log fit residual and on the scaling ratios.
pub const POWER_FIT_TOL: f64 = 1e-4;
/// Fitted α in this band is reported as the Gaussian boundary.
pub const GAUSSIAN_BAND: (f64, f64) = (1.995, 2.005);
/// Residual above which the direction `G(x)/|G(x)|` is declared non-convergent.
pub const G0_TOL: f64 = 1e-4;
/// Relative size of the intercept `J_{ν_{G(0)}}` tolerated by [`reduce`].
pub const INTERCEPT_TOL: f64 = 1e-6;
/// Tolerance of [`example1_condition`].
pub const EXAMPLE1_TOL: f64 = 1e-6;

/// Parameters `(a, b, c, ν_{G(0)}, μ)` of an affine short-rate generator.
#[derive(Debug, Clone)]
pub struct GeneratingModel {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub nu_g0: RadialMeasure,
    pub mu: RadialMeasure,
}

impl GeneratingModel {
    /// Generator of a reduced model: `c = 0`, `ν_{G(0)} = 0`, `μ = C^α v^{-1-α} dv`.
    pub fn from_reduced(m: &ReducedModel) -> Self {
        Self {
            a: m.a,
            b: m.b,
            c: 0.0,
            nu_g0: RadialMeasure::zero(),
            mu: RadialMeasure::power(1.0 + m.alpha, m.c.powf(m.alpha)),
        }
    }

    /// Generator induced by `(G, spec)` for an atomic spherical part, using the
    /// image measures at `x_ref`: `μ = x_ref^{-1} Σ w_i (γ_i ∘ ⟨G(x_ref), ξ_i⟩^{-1})`
    /// and `ν_{G(0)}` likewise at `x = 0`.
    pub fn pushforward(g: &VolatilityFunction, spec: &LevySpec, a: f64, b: f64, x_ref: f64) -> Result<Self> {
        if !(x_ref > 0.0) {
            return Err(Error::InvalidArgument("x_ref must be positive".into()));
        }
        if !matches!(spec.spherical, SphericalMeasure::Atoms { .. }) {
            return Err(Error::InvalidArgument("pushforward needs an atomic spherical part".into()));
        }
        let image = |x: f64| -> RadialMeasure {
            let gx = g.eval(x);
            let parts: Vec<RadialMeasure> = spec
                .spherical
                .support()
                .iter()
                .filter_map(|n| {
                    let p = n.direction.dot(&gx);
                    (p > 0.0).then(|| spec.radial_at(n).dilated(p).scaled(n.weight))
                })
                .collect();
            if parts.is_empty() {
                RadialMeasure::zero()
            } else {
                RadialMeasure::sum(&parts)
            }
        };
        let c = wiener_cir_check(&spec.wiener_cov, g, &[x_ref]).c;
        Ok(Self {
            a,
            b,
            c,
            nu_g0: image(0.0),
            mu: image(x_ref).scaled(1.0 / x_ref),
        })
    }
}

/// The α-stable CIR model `dR = (aR + b)dt + C R^{1/α} dZ^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub a: f64,
    pub b: f64,
    #[serde(rename = "C")]
    pub c: f64,
    pub alpha: f64,
}

impl ReducedModel {
    pub fn new(a: f64, b: f64, c: f64, alpha: f64) -> Result<Self> {
        let m = Self { a, b, c, alpha };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        check_alpha(self.alpha)?;
        if !(self.c > 0.0) || !(self.b >= 0.0) || !self.a.is_finite() || !self.c.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "reduced model needs C > 0, b ≥ 0, finite a (got a={}, b={}, C={})",
                self.a, self.b, self.c
            )));
        }
        Ok(())
    }

    /// `J_μ(B) = C^α c_α B^α`.
    pub fn j_mu(&self, b: f64) -> f64 {
        let c = c_alpha(self.alpha).unwrap_or(f64::NAN);
        self.c.powf(self.alpha) * c * b.max(0.0).powf(self.alpha)
    }
}

/// Grids used by the reduction.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct ReduceOptions {
    pub b_grid: Vec<f64>,
    pub x_grid: Vec<f64>,
    pub balance_grid: Vec<f64>,
    pub g0_probes: Vec<f64>,
}

impl Default for ReduceOptions {
    fn default() -> Self {
        Self {
            b_grid: log_grid(1e-2, 1e2, 40),
            x_grid: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            balance_grid: default_balance_grid(),
            g0_probes: (1..=8).map(|k| 10f64.powi(-k)).collect(),
        }
    }
}

/// `lim_{x→0} G(x)/|G(x)|`, estimated on a decreasing probe sequence.
///
/// Returns the direction at the smallest probe and the largest deviation
/// from it among the last three probes.
pub fn g0_limit(g: &VolatilityFunction, probes: &[f64]) -> Result<(UnitDirection, f64)> {
    if probes.len() < 3 || probes.windows(2).any(|w| !(w[1] < w[0])) || probes.iter().any(|p| !(*p > 0.0)) {
        return Err(Error::InvalidArgument("need ≥ 3 decreasing positive probes".into()));
    }
    let dirs: Vec<Vec<f64>> = probes
        .iter()
        .map(|&x| {
            let gx = g.eval(x);
            let n = norm(&gx);
            if n == 0.0 {
                Err(Error::ZeroVolatility { x })
            } else {
                Ok(gx.iter().map(|c| c / n).collect())
            }
        })
        .collect::<Result<_>>()?;
    let last = dirs.last().expect("non-empty");
    let residual = dirs[dirs.len() - 3..]
        .iter()
        .map(|d| d.iter().zip(last).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt())
        .fold(0.0, f64::max);
    Ok((UnitDirection::normalized(last)?, residual))
}

/// Laplace exponents of `μ` and `ν_{G(0)}` on a `b` grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MuSamples {
    pub b: Vec<f64>,
    /// `J_μ(b)`: regression slope minus the Wiener term `c b²`.
    pub j_mu: Vec<f64>,
    /// `J_{ν_{G(0)}}(b)`: regression intercept.
    pub j_nu_g0: Vec<f64>,
    pub c: f64,
    pub affinity_residual: f64,
}

/// Regresses `J_Z(b G(x))` on `x` for every `b`; slope `= c b² + J_μ(b)`,
/// intercept `= J_{ν_{G(0)}}(b)`.
pub fn mu_extract(
    g: &VolatilityFunction,
    spec: &LevySpec,
    b_grid: &[f64],
    x_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<MuSamples> {
    if x_grid.len() < 3 {
        return Err(Error::InvalidArgument("x grid needs ≥ 3 points".into()));
    }
    if g.dim() != spec.dim {
        return Err(Error::InvalidArgument("G and the Lévy spec differ in dimension".into()));
    }
    let c = wiener_cir_check(&spec.wiener_cov, g, x_grid).c;
    let gx: Vec<Vec<f64>> = x_grid.iter().map(|&x| g.eval(x)).collect();
    let n = x_grid.len() as f64;
    let mx = x_grid.iter().sum::<f64>() / n;
    let sxx: f64 = x_grid.iter().map(|x| (x - mx).powi(2)).sum();

    let columns: Vec<(f64, f64, f64)> = b_grid
        .par_iter()
        .map(|&b| -> Result<(f64, f64, f64)> {
            if b == 0.0 {
                return Ok((0.0, 0.0, 0.0));
            }
            let y: Vec<f64> = gx
                .iter()
                .map(|v| {
                    let z: Vec<f64> = v.iter().map(|c| b * c).collect();
                    laplace_total(spec, &z, cfg)
                })
                .collect::<Result<_>>()?;
            let my = y.iter().sum::<f64>() / n;
            let sxy: f64 = x_grid.iter().zip(&y).map(|(x, y)| (x - mx) * (y - my)).sum();
            let slope = sxy / sxx;
            let intercept = my - slope * mx;
            let scale = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            let resid = x_grid
                .iter()
                .zip(&y)
                .map(|(x, y)| (y - intercept - slope * x).abs())
                .fold(0.0, f64::max);
            let rel = if scale > 0.0 { resid / scale } else { 0.0 };
            Ok((slope - c * b * b, intercept, rel))
        })
        .collect::<Result<_>>()?;

    let affinity_residual = columns.iter().map(|c| c.2).fold(0.0, f64::max);
    if affinity_residual > AFFINITY_TOL {
        return Err(Error::AffinityViolation {
            residual: affinity_residual,
        });
    }
    Ok(MuSamples {
        b: b_grid.to_vec(),
        j_mu: columns.iter().map(|c| c.0).collect(),
        j_nu_g0: columns.iter().map(|c| c.1).collect(),
        c,
        affinity_residual,
    })
}

/// Result of fitting `J(b) = C̃ b^α`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PowerFit {
    pub c_tilde: f64,
    pub alpha: f64,
    /// Largest absolute residual of the log-log fit.
    pub fit_residual: f64,
    /// Mean of `J(2b)/J(b)` and `J(3b)/J(b)` over the grid.
    pub ratio2: f64,
    pub ratio3: f64,
    pub report: CheckReport,
}

fn loglog_interp(lb: &[f64], lj: &[f64], x: f64) -> f64 {
    let l = x.ln();
    let i = lb.partition_point(|v| *v <= l).clamp(1, lb.len() - 1);
    let t = (l - lb[i - 1]) / (lb[i] - lb[i - 1]);
    (lj[i - 1] + t * (lj[i] - lj[i - 1])).exp()
}

fn spread(v: &[f64]) -> (f64, f64) {
    let mean = v.iter().sum::<f64>() / v.len() as f64;
    let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(*x), b.max(*x)));
    (mean, (hi - lo) / mean.abs())
}

/// Log-log least squares for `(C̃, α)` plus the two-factor scaling test
/// (`β = 2`, `γ = 3`): `J(βb)/J(b)` must not depend on `b`.
pub fn power_fit(b: &[f64], j: &[f64]) -> Result<PowerFit> {
    let pts: Vec<(f64, f64)> = b
        .iter()
        .zip(j)
        .filter(|(b, _)| **b > 0.0)
        .map(|(b, j)| (*b, *j))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InvalidArgument("power fit needs ≥ 3 positive abscissae".into()));
    }
    if let Some((b, j)) = pts.iter().find(|(_, j)| !(*j > 0.0)) {
        return Err(Error::InvalidArgument(format!("J({b}) = {j} is not positive")));
    }
    let lb: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let lj: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let n = lb.len() as f64;
    let (mx, my) = (lb.iter().sum::<f64>() / n, lj.iter().sum::<f64>() / n);
    let sxx: f64 = lb.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lb.iter().zip(&lj).map(|(x, y)| (x - mx) * (y - my)).sum();
    let alpha = sxy / sxx;
    let log_c = my - alpha * mx;
    let fit_residual = lb
        .iter()
        .zip(&lj)
        .map(|(x, y)| (y - log_c - alpha * x).abs())
        .fold(0.0, f64::max);

    let b_max = pts.last().map(|p| p.0).unwrap_or(0.0);
    let mut r2 = Vec::new();
    let mut r3 = Vec::new();
    for &(bb, jj) in &pts {
        if 3.0 * bb <= b_max * (1.0 + 1e-12) {
            r2.push(loglog_interp(&lb, &lj, 2.0 * bb) / jj);
            r3.push(loglog_interp(&lb, &lj, 3.0 * bb) / jj);
        }
    }
    if r2.is_empty() {
        return Err(Error::InvalidArgument("b grid spans less than a factor 3".into()));
    }
    let (ratio2, s2) = spread(&r2);
    let (ratio3, s3) = spread(&r3);
    let worst = s2.max(s3);
    if worst > POWER_FIT_TOL {
        return Err(Error::NotPowerLaw { spread: worst });
    }

    let mut report = CheckReport::new("power_fit");
    report.push(
        CheckItem::new("scaling_ratios", Verdict::Pass)
            .evidence("ratio_2", ratio2)
            .evidence("ratio_3", ratio3)
            .evidence("spread", worst)
            .tolerance(POWER_FIT_TOL),
    );
    report.push(
        CheckItem::new("fit_residual", Verdict::from_bool(fit_residual < POWER_FIT_TOL))
            .evidence("residual", fit_residual)
            .tolerance(POWER_FIT_TOL),
    );
    let alpha_verdict = if (GAUSSIAN_BAND.0..=GAUSSIAN_BAND.1).contains(&alpha) {
        Verdict::GaussianBoundary
    } else {
        Verdict::from_bool(alpha > 1.0 && alpha < 2.0)
    };
    report.push(CheckItem::new("alpha_range", alpha_verdict).evidence("alpha", alpha));
    Ok(PowerFit {
        c_tilde: log_c.exp(),
        alpha,
        fit_residual,
        ratio2,
        ratio3,
        report,
    })
}

/// Output of [`reduce`].
#[derive(Debug, Clone)]
pub struct Reduction {
    pub model: ReducedModel,
    pub samples: MuSamples,
    pub fit: PowerFit,
    pub report: CheckReport,
}

/// Verifies the hypotheses, extracts `μ`, fits the power law and returns the
/// reduced model.
///
/// Fails before extraction when a precondition fails: martingale
/// integrability, positive jumps, radial balance, existence of `G₀`, or the
/// assumption set "infinite variation with spanning directions, or
/// `G(0) = 0`". A non-affine Wiener part or a positive Wiener coefficient
/// next to an α-stable jump part is reported in the returned report; the jump
/// part is still reduced.
pub fn reduce(
    spec: &LevySpec,
    g: &VolatilityFunction,
    a: f64,
    b: f64,
    opts: &ReduceOptions,
    cfg: &QuadratureConfig,
) -> Result<Reduction> {
    let mut report = CheckReport::new("reduce");
    report.merge("", check_martingale(spec, cfg));
    let variation = check_variation(spec, cfg);
    let g_at_zero = norm(&g.eval(0.0));
    let assumptions = if variation.report.passed() || g_at_zero == 0.0 {
        Verdict::Pass
    } else {
        Verdict::Unmet
    };
    let mut vreport = variation.report;
    if g_at_zero == 0.0 && !vreport.passed() {
        vreport.overall = true;
        for item in &mut vreport.items {
            if !item.verdict.is_pass() {
                item.verdict = Verdict::PassWithWarning;
                item.detail = "not required: G(0) = 0".into();
            }
        }
    }
    report.merge("", vreport);
    report.push(
        CheckItem::new("theorem_assumptions", assumptions)
            .evidence("g_at_zero_norm", g_at_zero)
            .detail("infinite variation with spanning directions, or G(0) = 0"),
    );
    report.merge("", check_positive_jumps(g, spec, &opts.x_grid));
    report.merge("", radial_balance(spec, &opts.balance_grid, None, cfg)?.report);
    let (g0, g0_res) = g0_limit(g, &opts.g0_probes)?;
    let mut g0_item = CheckItem::new("g0_limit", Verdict::from_bool(g0_res <= G0_TOL))
        .evidence("residual", g0_res)
        .tolerance(G0_TOL);
    for (i, c) in g0.coords().iter().enumerate() {
        g0_item = g0_item.evidence(format!("g0_{i}"), *c);
    }
    report.push(g0_item);

    // Structural failures other than the (possibly degenerate) span are fatal.
    let fatal: Vec<String> = report
        .items
        .iter()
        .filter(|i| !i.verdict.is_pass() && i.name != "infinite_variation" && i.name != "variation_span" || i.verdict == Verdict::Unmet)
        .map(|i| i.name.clone())
        .collect();
    if !fatal.is_empty() {
        return Err(Error::ConditionsFailed { failed: fatal });
    }

    let wiener = wiener_cir_check(&spec.wiener_cov, g, &opts.x_grid);
    report.merge("", wiener.report.clone());
    let jump_spec = spec.clone().with_wiener(DMatrix::zeros(spec.dim, spec.dim))?;
    let samples = mu_extract(g, &jump_spec, &opts.b_grid, &opts.x_grid, cfg)?;
    report.push(
        CheckItem::new("affinity", Verdict::from_bool(samples.affinity_residual <= AFFINITY_TOL))
            .evidence("residual", samples.affinity_residual)
            .tolerance(AFFINITY_TOL),
    );

    let mu_scale = samples.j_mu.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let nu_max = samples.j_nu_g0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let rel = if mu_scale > 0.0 { nu_max / mu_scale } else { nu_max };
    if rel > INTERCEPT_TOL {
        return Err(Error::ResidualNuG0 { value: rel });
    }
    report.push(
        CheckItem::new("nu_g0_vanishes", Verdict::Pass)
            .evidence("relative_intercept", rel)
            .tolerance(INTERCEPT_TOL),
    );

    let fit = power_fit(&samples.b, &samples.j_mu)?;
    report.merge("", fit.report.clone());
    let corollary = if wiener.c > 1e-12 && fit.alpha < GAUSSIAN_BAND.0 {
        Verdict::Fail
    } else {
        Verdict::Pass
    };
    report.push(
        CheckItem::new("no_wiener_with_stable_jumps", corollary)
            .evidence("c", wiener.c)
            .evidence("alpha", fit.alpha),
    );
    report.push(CheckItem::new("drift_nonnegative", Verdict::from_bool(b >= 0.0)).evidence("b", b));

    let c = c_alpha(fit.alpha.clamp(1.0 + 1e-12, 2.0 - 1e-12))?;
    let model = ReducedModel {
        a,
        b,
        c: (fit.c_tilde / c).powf(1.0 / fit.alpha),
        alpha: fit.alpha,
    };
    Ok(Reduction {
        model,
        samples,
        fit,
        report,
    })
}

/// Checks `∫⟨G(x), ξ⟩^α λ(dξ) = (C/c_α) x` on `x_grid`; returns the fitted `C`.
pub fn example1_condition(
    g: &VolatilityFunction,
    spherical: &SphericalMeasure,
    alpha: f64,
    x_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<(f64, CheckReport)> {
    let c_a = c_alpha(alpha)?;
    let i: Vec<f64> = x_grid
        .iter()
        .map(|&x| angular_power_integral(spherical, alpha, &g.eval(x), cfg))
        .collect::<Result<_>>()?;
    let sxx: f64 = x_grid.iter().map(|x| x * x).sum();
    let k = x_grid.iter().zip(&i).map(|(x, y)| x * y).sum::<f64>() / sxx;
    let residual = x_grid
        .iter()
        .zip(&i)
        .map(|(x, y)| {
            let s = y.abs().max((k * x).abs());
            if s == 0.0 {
                0.0
            } else {
                (y - k * x).abs() / s
            }
        })
        .fold(0.0, f64::max);
    let c = c_a * k;
    let verdict = if residual >= EXAMPLE1_TOL {
        Verdict::Fail
    } else if c == 0.0 {
        Verdict::PassWithWarning
    } else {
        Verdict::Pass
    };
    let mut report = CheckReport::new("example1_condition");
    report.push(
        CheckItem::new("stable_linearity", verdict)
            .evidence("C", c)
            .evidence("max_relative_residual", residual)
            .tolerance(EXAMPLE1_TOL),
    );
    Ok((c, report))
}

/// `𝒜 f_λ(x)` for `f_λ(v) = e^{-λv}`, integrating the generator term by term
/// with the truncation `1 ∧ v`.
pub fn generator_apply(model: &GeneratingModel, lambda: f64, x: f64, cfg: &QuadratureConfig) -> Result<f64> {
    if !(lambda > 0.0) || !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("need λ > 0 and x ≥ 0 (λ={lambda}, x={x})")));
    }
    let f = (-lambda * x).exp();
    let jump_kernel = |v: f64| {
        if v <= 1.0 {
            kernel_h(lambda * v)
        } else {
            (-lambda * v).exp_m1() + lambda
        }
    };
    let large_drift = |v: f64| if v > 1.0 { 1.0 - v } else { 0.0 };
    let integ = |m: &RadialMeasure, h: &dyn Fn(f64) -> f64| -> Result<f64> {
        if m.is_zero() {
            Ok(0.0)
        } else {
            m.integrate_full(h, cfg)
        }
    };
    let drift = model.a * x + model.b + integ(&model.nu_g0, &large_drift)? + x * integ(&model.mu, &large_drift)?;
    let jumps = integ(&model.nu_g0, &jump_kernel)? + x * integ(&model.mu, &jump_kernel)?;
    Ok(model.c * x * lambda * lambda * f - lambda * f * drift + f * jumps)
}

/// `J_μ(λ)` of a generating model by radial quadrature.
pub fn j_mu(model: &GeneratingModel, lambda: f64, cfg: &QuadratureConfig) -> Result<f64> {
    laplace_radial(&model.mu, lambda, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::levy_spec::stable_spec;

    fn example_spec() -> LevySpec {
        let s = SphericalMeasure::atoms(vec![(UnitDirection::axis(2, 0), 0.5), (UnitDirection::axis(2, 1), 0.5)]).unwrap();
        stable_spec(1.5, s).unwrap()
    }

    fn example_g() -> VolatilityFunction {
        VolatilityFunction::power(2.0 / 3.0, vec![1.0, 1.0])
    }

    #[test]
    fn g0_examples() {
        let probes = ReduceOptions::default().g0_probes;
        let (d, r) = g0_limit(&example_g(), &probes).unwrap();
        assert!((d.coords()[0] - 0.5f64.sqrt()).abs() < 1e-15 && r < 1e-15);

        let g = VolatilityFunction::from_fn(2, |x| vec![x, x * x]);
        let (d, r) = g0_limit(&g, &probes).unwrap();
        assert!((d.coords()[0] - 1.0).abs() < 1e-12 && r < G0_TOL);

        let osc = VolatilityFunction::from_fn(2, |x| vec![x * (1.0 / x).cos(), x * (1.0 / x).sin()]);
        let (_, r) = g0_limit(&osc, &probes).unwrap();
        assert!(r > G0_TOL);

        let zero = VolatilityFunction::from_fn(2, |_| vec![0.0, 0.0]);
        assert!(matches!(g0_limit(&zero, &probes), Err(Error::ZeroVolatility { .. })));
    }

    #[test]
    fn mu_extract_example() {
        let cfg = QuadratureConfig::default();
        let mut b = log_grid(1e-2, 1e2, 10);
        b.insert(0, 0.0);
        let s = mu_extract(&example_g(), &example_spec(), &b, &[0.25, 0.5, 1.0, 2.0, 4.0], &cfg).unwrap();
        let c = c_alpha(1.5).unwrap();
        assert_eq!(s.j_mu[0], 0.0);
        for (bb, j) in s.b.iter().zip(&s.j_mu).skip(1) {
            assert!((j / (c * bb.powf(1.5)) - 1.0).abs() < 1e-7);
        }
        assert!(s.affinity_residual < 1e-6);
        assert!(s.j_nu_g0.iter().all(|v| v.abs() < 1e-6));
    }

    #[test]
    fn mu_extract_rejects_non_affine() {
        let g = VolatilityFunction::from_fn(2, |x| vec![x, x]);
        let err = mu_extract(&g, &example_spec(), &[1.0, 2.0], &[0.25, 0.5, 1.0, 2.0, 4.0], &QuadratureConfig::default());
        assert!(matches!(err, Err(Error::AffinityViolation { .. })));
    }

    #[test]
    fn power_fit_examples() {
        let b = log_grid(1e-2, 1e2, 40);
        let j: Vec<f64> = b.iter().map(|b| 2.5 * b.powf(1.5)).collect();
        let f = power_fit(&b, &j).unwrap();
        assert!((f.c_tilde - 2.5).abs() < 1e-12 && (f.alpha - 1.5).abs() < 1e-12);
        assert!((f.ratio2 - 2f64.powf(1.5)).abs() < 1e-10 && (f.ratio3 - 3f64.powf(1.5)).abs() < 1e-10);
        assert!(f.report.passed());

        let sq: Vec<f64> = b.iter().map(|b| b * b).collect();
        let f = power_fit(&b, &sq).unwrap();
        assert_eq!(f.report.item("alpha_range").unwrap().verdict, Verdict::GaussianBoundary);

        let e: Vec<f64> = b.iter().map(|b| b.exp() - 1.0 - b).collect();
        assert!(matches!(power_fit(&b, &e), Err(Error::NotPowerLaw { .. })));
    }

    #[test]
    fn reduce_example() {
        let cfg = QuadratureConfig::default();
        let r = reduce(&example_spec(), &example_g(), -0.5, 0.1, &ReduceOptions::default(), &cfg).unwrap();
        assert!(r.report.passed(), "{}", r.report);
        assert!((r.model.alpha - 1.5).abs() < 1e-6);
        assert!((r.model.c - 1.0).abs() < 1e-6);
        assert_eq!((r.model.a, r.model.b), (-0.5, 0.1));
    }

    #[test]
    fn reduce_flags_wiener_part() {
        let cfg = QuadratureConfig::default();
        let spec = example_spec().with_wiener(DMatrix::identity(2, 2)).unwrap();
        let r = reduce(&spec, &example_g(), -0.5, 0.1, &ReduceOptions::default(), &cfg).unwrap();
        assert_eq!(r.report.item("wiener_affinity").unwrap().verdict, Verdict::Fail);
        assert_eq!(r.report.item("no_wiener_with_stable_jumps").unwrap().verdict, Verdict::Fail);
    }

    #[test]
    fn reduce_rejects_unmet_assumptions() {
        let s = SphericalMeasure::atoms(vec![(UnitDirection::axis(2, 0), 1.0)]).unwrap();
        let spec = stable_spec(1.5, s).unwrap();
        let g = VolatilityFunction::from_fn(2, |x| vec![1.0 + x, 0.0]);
        let err = reduce(&spec, &g, 0.0, 0.0, &ReduceOptions::default(), &QuadratureConfig::default()).unwrap_err();
        match err {
            Error::ConditionsFailed { failed } => assert!(failed.contains(&"theorem_assumptions".to_string())),
            e => panic!("{e}"),
        }
    }

    #[test]
    fn example1_examples() {
        let cfg = QuadratureConfig::default();
        let s = example_spec().spherical;
        let v = vec![2.0, 1.0];
        let g = VolatilityFunction::power(1.0 / 1.5, v.clone());
        let (c, r) = example1_condition(&g, &s, 1.5, &[0.25, 0.5, 1.0, 2.0, 4.0], &cfg).unwrap();
        let expected = c_alpha(1.5).unwrap() * 0.5 * (2f64.powf(1.5) + 1.0);
        assert!((c - expected).abs() < 1e-12 && r.passed());

        let lin = VolatilityFunction::from_fn(2, |x| vec![x, x]);
        assert!(!example1_condition(&lin, &s, 1.5, &[0.25, 0.5, 1.0, 2.0, 4.0], &cfg).unwrap().1.passed());

        let zero = VolatilityFunction::from_fn(2, |_| vec![0.0, 0.0]);
        let (c, r) = example1_condition(&zero, &s, 1.5, &[1.0, 2.0], &cfg).unwrap();
        assert_eq!(c, 0.0);
        assert_eq!(r.items[0].verdict, Verdict::PassWithWarning);
    }

    #[test]
    fn generator_pure_drift() {
        let m = GeneratingModel {
            a: -1.0,
            b: 0.3,
            c: 0.0,
            nu_g0: RadialMeasure::zero(),
            mu: RadialMeasure::zero(),
        };
        let (l, x) = (0.7, 1.3);
        let v = generator_apply(&m, l, x, &QuadratureConfig::default()).unwrap();
        let exact = -l * (m.a * x + m.b) * (-l * x).exp();
        assert!((v - exact).abs() < 1e-15);
    }

    #[test]
    fn generator_slope_matches_laplace_exponent() {
        let cfg = QuadratureConfig::default();
        let m = GeneratingModel::from_reduced(&ReducedModel::new(-0.5, 0.1, 1.2, 1.5).unwrap());
        let lambda = 0.8;
        let ratio = |x: f64| generator_apply(&m, lambda, x, &cfg).unwrap() / (-lambda * x).exp();
        let slope = ratio(2.0) - ratio(1.0);
        let expected = -m.a * lambda + m.c * lambda * lambda + j_mu(&m, lambda, &cfg).unwrap();
        assert!((slope - expected).abs() < 1e-8, "{slope} vs {expected}");
        let affine = ratio(3.0) - 2.0 * ratio(2.0) + ratio(1.0);
        assert!(affine.abs() < 1e-8);
    }

    #[test]
    fn pushforward_matches_reduced_generator() {
        let cfg = QuadratureConfig::default();
        let orig = GeneratingModel::pushforward(&example_g(), &example_spec(), -0.5, 0.1, 1.0).unwrap();
        let red = GeneratingModel::from_reduced(&ReducedModel::new(-0.5, 0.1, 1.0, 1.5).unwrap());
        for lambda in [0.1, 1.0, 5.0] {
            for x in [0.0, 0.5, 2.0] {
                let u = generator_apply(&orig, lambda, x, &cfg).unwrap();
                let v = generator_apply(&red, lambda, x, &cfg).unwrap();
                assert!((u - v).abs() < 1e-7 * (1.0 + v.abs()), "{u} vs {v}");
            }
        }
    }
}
