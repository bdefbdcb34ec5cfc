//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Runs as a plain binary (`harness = false`). The process fails when a
//! criterion fails, except for those listed in [`KNOWN_UNATTAINABLE`], whose
//! failure is expected and explained in the printed detail.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use stable_cir::conditions::{density_reducibility_check, q_ratios, radial_balance, default_balance_grid, default_eps_grid};
use stable_cir::laplace::{c_alpha, kernel_h, laplace_radial};
use stable_cir::levy_spec::{
    density_spec, stable_spec, LevySpec, RadialFamily, RadialMeasure, SphericalMeasure, UnitDirection,
    VolatilityFunction,
};
use stable_cir::pricing::{
    compare_term_structures, judge_prices, mc_bond_prices, riccati_solve, CompareSettings, RiccatiConfig,
};
use stable_cir::quadrature::{integrate_box, Limit, TailHints};
use stable_cir::reduction::{example1_condition, reduce, ReduceOptions, ReducedModel};
use stable_cir::simulate::{ks_distance, simulate_reduced_integrals, OriginalOptions, SmallJumps, StableSampler, TimeGrid};
use stable_cir::spherical::spherical_integrate;
use stable_cir::{QuadratureConfig, Result};

/// Criteria whose literal fixture cannot meet the stated outcome.
const KNOWN_UNATTAINABLE: &[u32] = &[10];

type Criterion = (u32, &'static str, fn() -> Result<Outcome>);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Result<Outcome> {
    Ok(Outcome { pass, detail })
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn example1_spec() -> Result<(LevySpec, VolatilityFunction)> {
    let lambda = SphericalMeasure::atoms(vec![(UnitDirection::axis(2, 0), 0.5), (UnitDirection::axis(2, 1), 0.5)])?;
    Ok((stable_spec(1.5, lambda)?, VolatilityFunction::power(2.0 / 3.0, vec![1.0, 1.0])))
}

fn c1_c_alpha() -> Result<Outcome> {
    let cfg = QuadratureConfig::default();
    let start = Instant::now();
    let mut worst = 0.0f64;
    for alpha in [1.1, 1.5, 1.9] {
        let v = RadialMeasure::stable(alpha).integrate(&kernel_h, Limit::Zero, Limit::Infinity, &cfg)?;
        worst = worst.max((v / c_alpha(alpha)? - 1.0).abs());
    }
    let t = start.elapsed();
    outcome(worst < 1e-8 && t < Duration::from_secs(1), format!("max rel err {worst:.2e}, {t:.2?}"))
}

fn within(lo: f64, v: f64, hi: f64) -> bool {
    const SLACK: f64 = 1e-12;
    lo <= v * (1.0 + SLACK) + f64::MIN_POSITIVE && v <= hi * (1.0 + SLACK) + f64::MIN_POSITIVE
}

fn c2_bounds() -> Result<Outcome> {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let log_t = |rng: &mut ChaCha8Rng| 10f64.powf(rng.random_range(-3.0..=3.0));
    let mut h_viol = 0usize;
    for _ in 0..100_000 {
        let z = rng.random_range(0.0..=50.0);
        let t = log_t(&mut rng);
        let h = kernel_h(z);
        if !within(t.powi(2).min(1.0) * h, kernel_h(t * z), t.powi(2).max(1.0) * h) {
            h_viol += 1;
        }
    }
    let cfg = QuadratureConfig::default();
    let fixtures = [
        RadialMeasure::stable(1.5),
        RadialMeasure::dirac(1.0, 1.0)?,
        RadialMeasure::tabulated(vec![(0.05, 3.0), (0.5, 1.0), (2.0, 0.4), (8.0, 0.0)])?,
    ];
    let mut j_viol = 0usize;
    for rho in &fixtures {
        for _ in 0..1000 {
            let b = 10f64.powf(rng.random_range(-2.0..=2.0));
            let t = log_t(&mut rng);
            let j = laplace_radial(rho, b, &cfg)?;
            if !within(t.powi(2).min(1.0) * j, laplace_radial(rho, t * b, &cfg)?, t.powi(2).max(1.0) * j) {
                j_viol += 1;
            }
        }
    }
    outcome(h_viol == 0 && j_viol == 0, format!("H violations {h_viol}/100000, J violations {j_viol}/3000"))
}

/// `|y|² ∧ |y|` against a smoothly truncated, direction-dependent density.
fn c3_spherical_vs_cartesian() -> Result<Outcome> {
    let start = Instant::now();
    let cfg = QuadratureConfig::default();
    let mut worst = 0.0f64;
    let mut parts = Vec::new();
    for d in [2usize, 3] {
        let g = |x: &[f64]| {
            let r = norm(x);
            if !(0.5..2.0).contains(&r) {
                return 0.0;
            }
            (1.0 + 0.5 * x[0] / r) * r.powf(-3.5) * (r * r - 0.25).powi(2) * (4.0 - r * r).powi(2)
        };
        let f = |y: &[f64]| {
            let r = norm(y);
            (r * r).min(r)
        };
        let hints = TailHints {
            breakpoints: vec![0.5, 1.0, 2.0],
            ..Default::default()
        };
        let spec = stable_cir::spherical::density_to_levy(&density_spec(g, d, hints)?)?;
        let polar = spherical_integrate(&f, &spec, &cfg)?;
        let cart = integrate_box(&|x: &[f64]| f(x) * g(x), &vec![(-2.0, 2.0); d], 1e-6, 1e-12, 20_000)?;
        let rel = (polar / cart - 1.0).abs();
        worst = worst.max(rel);
        parts.push(format!("d={d}: {rel:.1e}"));
    }
    let t = start.elapsed();
    outcome(worst < 1e-3 && t < Duration::from_secs(10), format!("{}, {t:.2?}", parts.join(", ")))
}

fn c4_balance() -> Result<Outcome> {
    let cfg = QuadratureConfig::default();
    let plain = stable_spec(1.5, SphericalMeasure::lebesgue(2)?)?;
    let k1 = radial_balance(&plain, &default_balance_grid(), None, &cfg)?.k_hat;
    let stable = RadialMeasure::stable(1.5);
    let family = {
        let s = stable.clone();
        RadialFamily::function(move |xi: &UnitDirection| s.scaled(1.0 + 0.5 * xi.coords()[0]))
    };
    let cosine = LevySpec::jump_only(SphericalMeasure::lebesgue(2)?, family)?;
    let k3 = radial_balance(&cosine, &default_balance_grid(), None, &cfg)?.k_hat;
    // Pointwise envelopes of the family: θ = π and θ = 0.
    let lower = cosine.radial_for(&UnitDirection::new(vec![-1.0, 0.0])?);
    let upper = cosine.radial_for(&UnitDirection::axis(2, 0));
    let q = q_ratios(&lower, &upper, &default_eps_grid(), &cfg)?;
    let pass = (k1 - 1.0).abs() <= 1e-9
        && (k3 - 3.0).abs() <= 1e-6
        && (q.q0 - 3.0).abs() <= 1e-6
        && (q.q_inf - 3.0).abs() <= 1e-6;
    outcome(pass, format!("K̂ stable {k1:.12}, K̂ cosine {k3:.9}, q = ({:.9}, {:.9})", q.q0, q.q_inf))
}

fn c5_reduction() -> Result<Outcome> {
    let cfg = QuadratureConfig::default();
    let start = Instant::now();
    let (spec, g) = example1_spec()?;
    let r = reduce(&spec, &g, -0.5, 0.1, &ReduceOptions::default(), &cfg)?;
    // The example's constant multiplies x b^α in J; the reduced C is its α-th root over c_α.
    let (c_tilde, _) = example1_condition(&g, &spec.spherical, 1.5, &ReduceOptions::default().x_grid, &cfg)?;
    let c_quad = (c_tilde / c_alpha(1.5)?).powf(1.0 / 1.5);
    let t = start.elapsed();
    let rel_c = (r.model.c / c_quad - 1.0).abs().max((r.fit.c_tilde / c_tilde - 1.0).abs());
    let res = r.samples.affinity_residual;
    let pass = (r.model.alpha - 1.5).abs() <= 0.01 && rel_c <= 0.01 && res < 1e-4 && t < Duration::from_secs(30);
    outcome(
        pass,
        format!("alpha {:.6}, C {:.6} vs {c_quad:.6}, affinity residual {res:.1e}, {t:.2?}", r.model.alpha, r.model.c),
    )
}

fn c6_steady_state() -> Result<Outcome> {
    let cfg = QuadratureConfig::default();
    let ts = riccati_solve(ReducedModel::new(0.0, 0.0, 1.0, 1.5)?, 10.0, 1000, &RiccatiConfig::default(), &cfg)?;
    let b10 = ts.at(10.0)?.1;
    let target = c_alpha(1.5)?.powf(-2.0 / 3.0);
    outcome((b10 - target).abs() <= 1e-3, format!("B(10) = {b10:.6}, target {target:.6}"))
}

fn rows_detail(rows: &[stable_cir::pricing::CompareRow]) -> String {
    rows.iter()
        .map(|r| format!("τ={}: Δ={:+.1e} (SE {:.1e})", r.tau, r.price_mc - r.price_riccati, r.se))
        .collect::<Vec<_>>()
        .join(", ")
}

fn c7_mc_vs_riccati() -> Result<Outcome> {
    let cfg = QuadratureConfig::default();
    let start = Instant::now();
    let model = ReducedModel::new(-0.5, 0.1, 1.0, 1.5)?;
    let taus = [0.5, 1.0, 5.0];
    let grid = TimeGrid::new(5.0, 5000)?;
    let ts = riccati_solve(model, 5.0, 5000, &RiccatiConfig::default(), &cfg)?;
    let ens = simulate_reduced_integrals(&model, 1.0, grid, &taus, 100_000, 7)?;
    let (rows, report) = judge_prices(&ts, 1.0, &mc_bond_prices(&ens), 1e-3)?;
    let t = start.elapsed();
    outcome(report.passed() && t < Duration::from_secs(120), format!("{}, {t:.1?}", rows_detail(&rows)))
}

fn c8_end_to_end() -> Result<Outcome> {
    let cfg = QuadratureConfig::default();
    let start = Instant::now();
    let (spec, g) = example1_spec()?;
    let reduced = reduce(&spec, &g, -0.5, 0.1, &ReduceOptions::default(), &cfg)?.model;
    let settings = CompareSettings {
        dt: 1e-3,
        n_paths: 100_000,
        seed: 8,
        original: OriginalOptions {
            eps: 0.02,
            small_jumps: SmallJumps::Gaussian,
            ..OriginalOptions::default()
        },
        scheme_tol: 1e-3,
    };
    let cmp = compare_term_structures(&g, &spec, -0.5, 0.1, &reduced, 1.0, &[0.5, 1.0, 2.0], &settings, &cfg)?;

    // Control: the same Monte Carlo prices against a model with α = 1.7.
    let control = ReducedModel { alpha: 1.7, ..reduced };
    let ts = riccati_solve(control, 2.0, 2000, &RiccatiConfig::default(), &cfg)?;
    let mc: Vec<(f64, f64, f64)> = cmp.rows.iter().map(|r| (r.tau, r.price_mc, r.se)).collect();
    let (ctrl_rows, ctrl) = judge_prices(&ts, 1.0, &mc, settings.scheme_tol)?;
    let t = start.elapsed();
    outcome(
        cmp.report.passed() && !ctrl.passed(),
        format!(
            "reduced: {}; control α=1.7 {}: {}; {t:.1?}",
            rows_detail(&cmp.rows),
            if ctrl.passed() { "PASSED" } else { "fails" },
            rows_detail(&ctrl_rows)
        ),
    )
}

fn c9_sampler() -> Result<Outcome> {
    let (alpha, scale, dt) = (1.5, 0.8, 0.5);
    let sampler = StableSampler::new(alpha, scale, dt)?;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let draws: Vec<f64> = (0..1_000_000).map(|_| sampler.sample(&mut rng)).collect();
    let c = c_alpha(alpha)?;
    let mut pass = true;
    let mut parts = Vec::new();
    for u in [0.5, 1.0, 2.0] {
        let vals: Vec<f64> = draws.iter().map(|x| (-u * x).exp()).collect();
        let (m, se) = stable_cir::simulate::mean_se(&vals);
        let exact = (c * u.powf(alpha) * dt * scale.powf(alpha)).exp();
        let z = (m - exact).abs() / se;
        pass &= z <= 3.0;
        parts.push(format!("u={u}: {z:.2} SE"));
    }
    // X_{dt} has the law of dt^{1/α} X_1.
    let short = StableSampler::new(alpha, scale, 0.25)?;
    let unit = StableSampler::new(alpha, scale, 1.0)?;
    let a: Vec<f64> = (0..200_000).map(|_| short.sample(&mut rng)).collect();
    let f = 0.25f64.powf(1.0 / alpha);
    let b: Vec<f64> = (0..200_000).map(|_| f * unit.sample(&mut rng)).collect();
    let ks = ks_distance(&a, &b);
    pass &= ks < 0.01;
    parts.push(format!("KS {ks:.4}"));
    outcome(pass, parts.join(", "))
}

fn density_failures(g: impl Fn(&[f64]) -> f64 + Send + Sync + 'static, hints: TailHints) -> Result<Vec<String>> {
    let spec = density_spec(g, 2, hints)?;
    let report = density_reducibility_check(&spec, &QuadratureConfig::default())?;
    Ok(report.failures())
}

fn power_hints(p: f64) -> TailHints {
    TailHints {
        low_exponent: Some(p),
        high_exponent: Some(p),
        breakpoints: Vec::new(),
    }
}

fn c10_density() -> Result<Outcome> {
    let good = density_failures(
        |x| {
            let r = norm(x);
            (1.0 + 0.5 * x[0] / r) * r.powf(-3.5)
        },
        power_hints(3.5),
    )?;
    let slow = density_failures(|x| norm(x).powf(-1.5), power_hints(1.5))?;
    let pass = good.is_empty() && slow == ["c_infinite_variation"];
    let mut detail = format!("(1+½cosθ)|x|^-3.5 failures {good:?}; |x|^-1.5 failures {slow:?}");
    if !pass && good.is_empty() {
        detail.push_str(
            "; in d=2 ∫(|x|²∧|x|)|x|^-1.5 dx diverges at infinity like ∫r^0.5 dr, \
             so conditions (a) and the envelope bound fail alongside (c)",
        );
    }
    outcome(pass, detail)
}

/// Same small-jump singularity with a tail steep enough for (a): isolates (c).
fn supplementary_piecewise() -> Result<String> {
    let failures = density_failures(
        |x| {
            let r = norm(x);
            if r <= 1.0 {
                r.powf(-1.5)
            } else {
                r.powf(-3.5)
            }
        },
        TailHints {
            low_exponent: Some(1.5),
            high_exponent: Some(3.5),
            breakpoints: vec![1.0],
        },
    )?;
    Ok(format!("|x|^-1.5 on |x|≤1, |x|^-3.5 beyond: failures {failures:?}"))
}

fn main() {
    let criteria: [Criterion; 10] = [
        (1, "c_alpha identity", c1_c_alpha),
        (2, "H and J scaling bounds", c2_bounds),
        (3, "spherical vs Cartesian integration", c3_spherical_vs_cartesian),
        (4, "radial balance and q ratios", c4_balance),
        (5, "reduction accuracy", c5_reduction),
        (6, "Riccati steady state", c6_steady_state),
        (7, "MC vs Riccati, reduced model", c7_mc_vs_riccati),
        (8, "end-to-end reducibility", c8_end_to_end),
        (9, "stable sampler contract", c9_sampler),
        (10, "density criteria", c10_density),
    ];
    let mut unexpected = Vec::new();
    for (id, name, f) in criteria {
        let start = Instant::now();
        let (pass, detail) = match f() {
            Ok(o) => (o.pass, o.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        let tag = if pass { "PASS" } else { "FAIL" };
        println!("{tag} criterion {id:>2} ({name}) [{:.1?}]: {detail}", start.elapsed());
        if !pass && !KNOWN_UNATTAINABLE.contains(&id) {
            unexpected.push(id);
        }
        if id == 10 {
            match supplementary_piecewise() {
                Ok(s) => println!("     note: {s}"),
                Err(e) => println!("     note: supplementary fixture error: {e}"),
            }
        }
    }
    if !unexpected.is_empty() {
        eprintln!("unexpected acceptance failures: {unexpected:?}");
        std::process::exit(1);
    }
}
