//! Hypothesis checks for generating equations and for reducibility.
//!
//! Every check returns a [`CheckReport`]; failures are reported, not thrown,
//! except where the quantity being checked cannot be formed at all
//! (`InfimumZero`, `DenominatorZero`).

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::laplace::laplace_radial;
use crate::levy_spec::{
    norm, probe_radii, DensityLevySpec, LevySpec, RadialFamily, RadialMeasure, SphericalMeasure, UnitDirection,
    VolatilityFunction, WeightedDirection,
};
use crate::quadrature::{Limit, QuadratureConfig, TailHints};
use crate::report::{CheckItem, CheckReport, Verdict};
use crate::spherical::{density_to_levy, density_vanishes_along, polar_map, spherical_integrate, sqrt_product};

/// Relative change below which a sequence of ε-ratios counts as stabilized.
pub const STABILIZATION_TOL: f64 = 1e-3;
/// Relative change of `K̂` under grid refinement tolerated by [`radial_balance`].
pub const BALANCE_REFINE_TOL: f64 = 1e-3;
/// Affinity tolerance of [`wiener_cir_check`].
pub const WIENER_AFFINITY_TOL: f64 = 1e-6;
/// Rank tolerance (relative to the largest singular value).
const RANK_TOL: f64 = 1e-9;

/// `n` log-spaced points on `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// Default `b` grid for [`radial_balance`]: 31 points on `[1e-3, 1e3]`.
pub fn default_balance_grid() -> Vec<f64> {
    log_grid(1e-3, 1e3, 31)
}

/// Default ε grid for [`q_ratios`]: `10^{-1}, …, 10^{-8}`.
pub fn default_eps_grid() -> Vec<f64> {
    (1..=8).map(|k| 10f64.powi(-k)).collect()
}

/// Numerical rank of a set of directions.
pub fn span_rank(dirs: &[&UnitDirection], dim: usize) -> usize {
    if dirs.is_empty() {
        return 0;
    }
    let m = DMatrix::from_fn(dirs.len(), dim, |i, j| dirs[i].coords()[j]);
    let sv = m.singular_values();
    let max = sv.max();
    sv.iter().filter(|s| **s > RANK_TOL * max.max(1e-300)).count()
}

/// Per-node radial measures, evaluated once for identical families.
fn radial_nodes(spec: &LevySpec, nodes: &[WeightedDirection]) -> Vec<RadialMeasure> {
    match &spec.radial {
        RadialFamily::Identical(m) => vec![m.clone(); nodes.len()],
        _ => nodes.iter().map(|n| spec.radial_at(n)).collect(),
    }
}

/// Martingale integrability `∫ (r² ∧ r) γ_ξ(dr) < ∞` on the support of `λ`.
pub fn check_martingale(spec: &LevySpec, cfg: &QuadratureConfig) -> CheckReport {
    let mut report = CheckReport::new("check_martingale");
    let nodes = spec.spherical.support();
    let radials = radial_nodes(spec, &nodes);
    let moment = |m: &RadialMeasure| m.integrate_full(&|r| (r * r).min(r), cfg);
    let mut max_val: f64 = 0.0;
    let mut divergent = 0usize;
    let mut cache: Option<Result<f64>> = None;
    for m in &radials {
        let v = if matches!(spec.radial, RadialFamily::Identical(_)) {
            cache.get_or_insert_with(|| moment(m)).clone()
        } else {
            moment(m)
        };
        match v {
            Ok(v) => max_val = max_val.max(v),
            Err(_) => divergent += 1,
        }
    }
    let degenerate = divergent == 0 && max_val == 0.0;
    let verdict = if divergent > 0 {
        Verdict::Fail
    } else if degenerate {
        Verdict::PassWithWarning
    } else {
        Verdict::Pass
    };
    let mut item = CheckItem::new("martingale_integrability", verdict)
        .evidence("max_moment", if divergent > 0 { f64::INFINITY } else { max_val })
        .evidence("divergent_directions", divergent as f64)
        .evidence("directions", nodes.len() as f64);
    if degenerate {
        item = item.detail("zero jump measure");
    }
    report.push(item);
    report
}

/// Γ_λ and the two infinite-variation conditions.
#[derive(Debug, Clone)]
pub struct VariationCheck {
    /// Support nodes with `∫₀¹ r γ_ξ(dr) = ∞`.
    pub gamma_set: Vec<WeightedDirection>,
    pub gamma_mass: f64,
    pub rank: usize,
    pub report: CheckReport,
}

/// `λ(Γ_λ) > 0` and `span Γ_λ = R^d`, with Γ_λ detected by tail divergence.
pub fn check_variation(spec: &LevySpec, cfg: &QuadratureConfig) -> VariationCheck {
    let nodes = spec.spherical.support();
    let radials = radial_nodes(spec, &nodes);
    let small_moment = |m: &RadialMeasure| m.integrate(&|r| r, Limit::Zero, Limit::At(1.0), cfg);
    let mut gamma_set = Vec::new();
    let mut identical: Option<bool> = None;
    for (node, m) in nodes.iter().zip(&radials) {
        let infinite = match (&spec.radial, identical) {
            (RadialFamily::Identical(_), Some(v)) => v,
            _ => {
                let v = matches!(small_moment(m), Err(Error::DivergentIntegral { .. }));
                if matches!(spec.radial, RadialFamily::Identical(_)) {
                    identical = Some(v);
                }
                v
            }
        };
        if infinite {
            gamma_set.push(node.clone());
        }
    }
    let gamma_mass: f64 = gamma_set.iter().map(|n| n.weight).sum();
    let dirs: Vec<&UnitDirection> = gamma_set.iter().map(|n| &n.direction).collect();
    let rank = span_rank(&dirs, spec.dim);

    let mut report = CheckReport::new("check_variation");
    report.push(
        CheckItem::new("infinite_variation", Verdict::from_bool(gamma_mass > 0.0))
            .evidence("gamma_lambda_mass", gamma_mass)
            .evidence("gamma_lambda_nodes", gamma_set.len() as f64),
    );
    report.push(
        CheckItem::new("variation_span", Verdict::from_bool(rank == spec.dim))
            .evidence("rank", rank as f64)
            .evidence("dimension", spec.dim as f64),
    );
    VariationCheck {
        gamma_set,
        gamma_mass,
        rank,
        report,
    }
}

/// `⟨G(x), ξ⟩ ≥ 0` for every grid `x` and every support direction carrying jumps.
pub fn check_positive_jumps(g: &VolatilityFunction, spec: &LevySpec, x_grid: &[f64]) -> CheckReport {
    let mut report = CheckReport::new("check_positive_jumps");
    let nodes: Vec<WeightedDirection> = spec
        .spherical
        .support()
        .into_iter()
        .filter(|n| !spec.radial_at(n).vanishes_on_grid())
        .collect();
    let mut worst = f64::INFINITY;
    let mut worst_x = f64::NAN;
    let mut worst_dir: Vec<f64> = Vec::new();
    let mut violations = 0usize;
    let mut all_zero = true;
    for &x in x_grid {
        let gx = g.eval(x);
        let gn = norm(&gx);
        if gn > 0.0 {
            all_zero = false;
        }
        for n in &nodes {
            let p = n.direction.dot(&gx);
            if p < -1e-12 * gn {
                violations += 1;
            }
            let scaled = if gn > 0.0 { p / gn } else { 0.0 };
            if scaled < worst {
                worst = scaled;
                worst_x = x;
                worst_dir = n.direction.coords().to_vec();
            }
        }
    }
    let verdict = if violations > 0 {
        Verdict::Fail
    } else if all_zero {
        Verdict::PassWithWarning
    } else {
        Verdict::Pass
    };
    let mut item = CheckItem::new("positive_jumps", verdict)
        .evidence("violations", violations as f64)
        .evidence("min_normalized_product", if worst.is_finite() { worst } else { 0.0 })
        .tolerance(1e-12);
    if violations > 0 {
        item = item
            .evidence("worst_x", worst_x)
            .detail(format!("⟨G(x), ξ⟩ < 0 at ξ = {worst_dir:?}"));
    } else if all_zero {
        item = item.detail("G vanishes on the grid");
    }
    report.push(item);
    report
}

/// Least-squares fit of `½⟨Q G(x), G(x)⟩ = c x`.
#[derive(Debug, Clone)]
pub struct WienerFit {
    pub c: f64,
    pub residual: f64,
    pub report: CheckReport,
}

pub fn wiener_cir_check(q: &DMatrix<f64>, g: &VolatilityFunction, x_grid: &[f64]) -> WienerFit {
    let quad: Vec<(f64, f64)> = x_grid
        .iter()
        .map(|&x| {
            let gx = g.eval(x);
            let mut s = 0.0;
            for i in 0..gx.len() {
                for j in 0..gx.len() {
                    s += q[(i, j)] * gx[i] * gx[j];
                }
            }
            (x, 0.5 * s)
        })
        .collect();
    let sxx: f64 = quad.iter().map(|(x, _)| x * x).sum();
    let sxy: f64 = quad.iter().map(|(x, y)| x * y).sum();
    let c = if sxx > 0.0 { sxy / sxx } else { 0.0 };
    let residual = quad
        .iter()
        .map(|&(x, y)| {
            let scale = y.abs().max((c * x).abs());
            if scale == 0.0 {
                0.0
            } else {
                (y - c * x).abs() / scale
            }
        })
        .fold(0.0, f64::max);
    let mut report = CheckReport::new("wiener_cir_check");
    report.push(
        CheckItem::new("wiener_affinity", Verdict::from_bool(residual < WIENER_AFFINITY_TOL))
            .evidence("c", c)
            .evidence("max_relative_residual", residual)
            .tolerance(WIENER_AFFINITY_TOL),
    );
    WienerFit { c, residual, report }
}

/// Estimated balance constant and its report.
#[derive(Debug, Clone)]
pub struct BalanceResult {
    pub k_hat: f64,
    pub k_refined: f64,
    pub report: CheckReport,
}

fn balance_on(spec: &LevySpec, b_grid: &[f64], radials: &[RadialMeasure], identical: bool, cfg: &QuadratureConfig) -> Result<f64> {
    let mut k: f64 = 1.0;
    for &b in b_grid {
        let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
        let values: Vec<f64> = if identical {
            let v = laplace_radial(&radials[0], b, cfg)?;
            vec![v]
        } else {
            radials
                .iter()
                .map(|m| laplace_radial(m, b, cfg))
                .collect::<Result<_>>()?
        };
        for v in values {
            lo = lo.min(v);
            hi = hi.max(v);
        }
        if !(lo > 0.0) {
            return Err(Error::InfimumZero { b });
        }
        k = k.max(hi / lo);
    }
    let _ = spec;
    Ok(k)
}

/// `K̂ = max_b sup_ξ J_{γ_ξ}(b) / inf_ξ J_{γ_ξ}(b)`, checked for stability on
/// a grid extended by a decade at each end and with interleaved midpoints.
pub fn radial_balance(
    spec: &LevySpec,
    b_grid: &[f64],
    xi_samples: Option<&[WeightedDirection]>,
    cfg: &QuadratureConfig,
) -> Result<BalanceResult> {
    let nodes: Vec<WeightedDirection> = match xi_samples {
        Some(s) => s.to_vec(),
        None => spec.spherical.support(),
    };
    if nodes.is_empty() {
        return Err(Error::InvalidArgument("no directions to balance".into()));
    }
    let identical = matches!(spec.radial, RadialFamily::Identical(_));
    let radials = radial_nodes(spec, &nodes);
    let k_hat = balance_on(spec, b_grid, &radials, identical, cfg)?;

    let mut refined: Vec<f64> = Vec::with_capacity(2 * b_grid.len() + 2);
    if let (Some(first), Some(last)) = (b_grid.first(), b_grid.last()) {
        refined.push(first / 10.0);
        for w in b_grid.windows(2) {
            refined.push((w[0] * w[1]).sqrt());
        }
        refined.push(last * 10.0);
    }
    let k_refined = balance_on(spec, &refined, &radials, identical, cfg)?.max(k_hat);
    let change = (k_refined - k_hat) / k_hat;
    let stable = k_hat.is_finite() && change <= BALANCE_REFINE_TOL;
    let mut report = CheckReport::new("radial_balance");
    report.push(
        CheckItem::new("radial_balance", Verdict::from_bool(stable))
            .evidence("k_hat", k_hat)
            .evidence("k_refined", k_refined)
            .evidence("relative_change", change)
            .tolerance(BALANCE_REFINE_TOL),
    );
    Ok(BalanceResult {
        k_hat,
        k_refined,
        report,
    })
}

/// Estimated `(q₀, q_∞)` and the checks behind them.
#[derive(Debug, Clone)]
pub struct QRatios {
    pub q0: f64,
    pub q_inf: f64,
    pub report: CheckReport,
}

fn limsup_estimate(eps: &[f64], ratios: &[f64]) -> (f64, Verdict, f64) {
    // eps sorted descending; the last three are the smallest.
    let n = ratios.len();
    let tail = &ratios[n.saturating_sub(3)..];
    let max_change = tail
        .windows(2)
        .map(|w| ((w[1] - w[0]) / w[0]).abs())
        .fold(0.0, f64::max);
    let estimate = tail.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let _ = eps;
    let verdict = if !estimate.is_finite() {
        Verdict::Fail
    } else if max_change < STABILIZATION_TOL {
        Verdict::Pass
    } else {
        Verdict::Inconclusive
    };
    (estimate, verdict, max_change)
}

/// Small- and large-jump moment ratios of a dominating pair `γ ≤ Γ`.
pub fn q_ratios(
    gamma_lower: &RadialMeasure,
    gamma_upper: &RadialMeasure,
    eps_grid: &[f64],
    cfg: &QuadratureConfig,
) -> Result<QRatios> {
    let mut eps: Vec<f64> = eps_grid.iter().copied().filter(|e| *e > 0.0 && *e < 1.0).collect();
    eps.sort_by(|a, b| b.total_cmp(a));
    if eps.len() < 3 {
        return Err(Error::InvalidArgument("eps grid needs ≥ 3 points in (0, 1)".into()));
    }
    let mut report = CheckReport::new("q_ratios");

    let mut ordering_violations = 0usize;
    for r in probe_radii() {
        let (lo, hi) = (gamma_lower.density_at(r), gamma_upper.density_at(r));
        if lo > hi * (1.0 + 1e-12) + 1e-300 {
            ordering_violations += 1;
        }
    }
    report.push(
        CheckItem::new("ordering", Verdict::from_bool(ordering_violations == 0))
            .evidence("violations", ordering_violations as f64),
    );

    let moment = |m: &RadialMeasure| m.integrate_full(&|r| (r * r).min(r), cfg);
    let (lower_m, upper_m) = (moment(gamma_lower), moment(gamma_upper));
    let finite_ok = matches!((&lower_m, &upper_m), (Ok(l), Ok(u)) if *l > 0.0 && l <= &(u * (1.0 + 1e-9)));
    report.push(
        CheckItem::new("dominating_integrability", Verdict::from_bool(finite_ok))
            .evidence("lower_moment", lower_m.clone().unwrap_or(f64::INFINITY))
            .evidence("upper_moment", upper_m.clone().unwrap_or(f64::INFINITY)),
    );

    let n = eps.len();
    let mut r0 = Vec::with_capacity(n);
    let mut rinf = Vec::with_capacity(n);
    for (i, &e) in eps.iter().enumerate() {
        let near_zero = i + 3 >= n;
        let small = |m: &RadialMeasure| m.integrate(&|r| r, Limit::At(e), Limit::At(1.0), cfg);
        let large = |m: &RadialMeasure| m.integrate(&|r| r * r, Limit::At(1.0), Limit::At(1.0 / e), cfg);
        let (num0, den0) = (small(gamma_upper)?, small(gamma_lower)?);
        let (numi, deni) = (large(gamma_upper)?, large(gamma_lower)?);
        if den0 <= 0.0 || deni <= 0.0 {
            if near_zero {
                return Err(Error::DenominatorZero { eps: e });
            }
            continue;
        }
        r0.push(num0 / den0);
        rinf.push(numi / deni);
    }
    if r0.len() < 3 {
        return Err(Error::DenominatorZero { eps: eps[n - 1] });
    }
    let (q0, v0, c0) = limsup_estimate(&eps, &r0);
    let (q_inf, vi, ci) = limsup_estimate(&eps, &rinf);
    report.push(
        CheckItem::new("q0_finite", v0)
            .evidence("q0", q0)
            .evidence("max_relative_change", c0)
            .tolerance(STABILIZATION_TOL),
    );
    report.push(
        CheckItem::new("q_inf_finite", vi)
            .evidence("q_inf", q_inf)
            .evidence("max_relative_change", ci)
            .tolerance(STABILIZATION_TOL),
    );
    Ok(QRatios { q0, q_inf, report })
}

/// Lower and upper angular envelopes `g̲(r), ḡ(r)` of `g(x)·∏√(…)` over `|x| = r`.
pub fn density_envelopes(spec: &DensityLevySpec, refine: usize) -> (RadialMeasure, RadialMeasure) {
    let nodes: Vec<(Vec<f64>, f64)> = SphericalMeasure::lebesgue(spec.dim)
        .expect("density specs have d ≥ 2")
        .grid(refine)
        .into_iter()
        .map(|n| {
            let f = sqrt_product(n.direction.coords());
            (n.direction.coords().to_vec(), f)
        })
        .collect();
    let make = |lower: bool| {
        let nodes = nodes.clone();
        let s = spec.clone();
        RadialMeasure::from_density(
            move |r: f64| {
                let mut acc = if lower { f64::INFINITY } else { 0.0f64 };
                for (xi, f) in &nodes {
                    let x: Vec<f64> = xi.iter().map(|c| c * r).collect();
                    let v = s.eval_raw(&x).max(0.0) * f;
                    acc = if lower { acc.min(v) } else { acc.max(v) };
                }
                acc
            },
            TailHints {
                breakpoints: spec.hints.breakpoints.clone(),
                ..Default::default()
            },
        )
    };
    (make(true), make(false))
}

/// All density criteria for reducibility: (a) martingale integrability,
/// (b) span of the support cone, (c) positive mass of infinite-variation
/// directions, envelope integrability and both envelope ratio limits.
pub fn density_reducibility_check(spec: &DensityLevySpec, cfg: &QuadratureConfig) -> Result<CheckReport> {
    let d = spec.dim;
    let mut report = CheckReport::new("density_reducibility_check");
    let levy = density_to_levy(spec)?;

    let a = spherical_integrate(
        &|y: &[f64]| {
            let r = norm(y);
            (r * r).min(r)
        },
        &levy,
        cfg,
    );
    report.push(match a {
        Ok(v) => CheckItem::new("a_martingale_integrability", Verdict::from_bool(v.is_finite())).evidence("integral", v),
        Err(e) => CheckItem::new("a_martingale_integrability", Verdict::Fail)
            .evidence("integral", f64::INFINITY)
            .detail(e.to_string()),
    });

    let grid = SphericalMeasure::lebesgue(d)?.grid(1);
    let support: Vec<&WeightedDirection> = grid
        .iter()
        .filter(|n| !density_vanishes_along(spec, &n.direction))
        .collect();
    let dirs: Vec<&UnitDirection> = support.iter().map(|n| &n.direction).collect();
    let rank = span_rank(&dirs, d);
    report.push(
        CheckItem::new("b_span", Verdict::from_bool(rank == d))
            .evidence("rank", rank as f64)
            .evidence("support_nodes", support.len() as f64),
    );

    let mut infinite_mass = 0.0;
    for n in &support {
        let xi = n.direction.coords();
        let h = |r: f64| {
            let x: Vec<f64> = xi.iter().map(|c| c * r).collect();
            r.powi(d as i32) * spec.eval_raw(&x).max(0.0)
        };
        let v = crate::quadrature::radial_integral(&h, Limit::Zero, Limit::At(1.0), &spec.hints.breakpoints, cfg);
        if matches!(v, Err(Error::DivergentIntegral { .. })) {
            infinite_mass += n.weight;
        }
    }
    report.push(
        CheckItem::new("c_infinite_variation", Verdict::from_bool(infinite_mass > 0.0))
            .evidence("lambda_mass", infinite_mass),
    );

    // Envelopes, refined once if the coarse grid disagrees with a finer one.
    let (mut lower, mut upper) = density_envelopes(spec, 1);
    let (lower2, upper2) = density_envelopes(spec, 2);
    let disagree = [0.1, 1.0, 10.0].iter().any(|&r| {
        let rel = |a: f64, b: f64| if a == b { 0.0 } else { (a - b).abs() / a.abs().max(b.abs()) };
        rel(lower.density_at(r), lower2.density_at(r)) > 1e-6 || rel(upper.density_at(r), upper2.density_at(r)) > 1e-6
    });
    if disagree {
        lower = lower2;
        upper = upper2;
    }
    let weight = |r: f64| r.powi(d as i32).min(r.powi(d as i32 + 1));
    let lo_int = lower.integrate_full(&weight, cfg);
    let hi_int = upper.integrate_full(&weight, cfg);
    let env_ok = matches!((&lo_int, &hi_int), (Ok(l), Ok(u)) if *l > 0.0 && *l <= *u * (1.0 + 1e-9));
    report.push(
        CheckItem::new("envelope_integrability", Verdict::from_bool(env_ok))
            .evidence("lower", lo_int.clone().unwrap_or(f64::INFINITY))
            .evidence("upper", hi_int.clone().unwrap_or(f64::INFINITY))
            .evidence("refined", if disagree { 1.0 } else { 0.0 }),
    );

    // Ratio limits use γ = g̲ r^{d−1} dr and Γ = ḡ r^{d−1} dr.
    let shift = |m: &RadialMeasure| {
        let hints = m.hints().clone();
        let m = m.clone();
        RadialMeasure::from_density(move |r| m.density_at(r) * r.powi(d as i32 - 1), hints)
    };
    match q_ratios(&shift(&lower), &shift(&upper), &default_eps_grid(), cfg) {
        Ok(q) => {
            let v0 = q.report.item("q0_finite").map(|i| i.verdict).unwrap_or(Verdict::Fail);
            let vi = q.report.item("q_inf_finite").map(|i| i.verdict).unwrap_or(Verdict::Fail);
            report.push(CheckItem::new("ratio_small_jumps", v0).evidence("limit", q.q0).tolerance(STABILIZATION_TOL));
            report.push(CheckItem::new("ratio_large_jumps", vi).evidence("limit", q.q_inf).tolerance(STABILIZATION_TOL));
        }
        Err(e) => {
            report.push(CheckItem::new("ratio_small_jumps", Verdict::Fail).detail(e.to_string()));
            report.push(CheckItem::new("ratio_large_jumps", Verdict::Fail).detail(e.to_string()));
        }
    }
    Ok(report)
}

/// Nodes of the support grid as unit directions; helper for callers that
/// sample directions explicitly.
pub fn support_directions(spec: &LevySpec) -> Vec<UnitDirection> {
    spec.spherical.support().into_iter().map(|n| n.direction).collect()
}

/// `polar_map` of the first axis node, used by doc examples.
#[doc(hidden)]
pub fn first_axis(dim: usize) -> UnitDirection {
    polar_map(&vec![0.0; dim - 1]).0
}
