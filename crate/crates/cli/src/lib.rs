//! Command-line driver: `stable-cir <check|reduce|simulate|price|compare> CONFIG [OUT_DIR]`.
//!
//! Every run writes `report.json` (schema in `schema/report.schema.json`)
//! plus command-specific CSV files. Exit codes: 0 pass, 1 condition or
//! verification failure, 2 invalid input.

pub mod config;

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};
use stable_cir::conditions::{check_martingale, check_positive_jumps, check_variation, radial_balance, wiener_cir_check};
use stable_cir::levy_spec::validate_spec;
use stable_cir::pricing::{
    compare_term_structures, judge_prices, mc_bond_prices, riccati_solve, write_comparison_csv, CompareSettings,
};
use stable_cir::reduction::{g0_limit, reduce, ReducedModel, Reduction, G0_TOL};
use stable_cir::simulate::{mean_se, simulate_original, simulate_reduced_integrals, TimeGrid};
use stable_cir::{CheckItem, CheckReport, Error, Verdict};

pub use config::RunConfig;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "STABLE_CIR_OUT";

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "stable-cir", version, about = "Reduce Lévy-driven short-rate models to the α-stable CIR model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check the generating and reducibility conditions.
    Check(RunArgs),
    /// Extract the reduced model (a, b, C, α).
    Reduce(RunArgs),
    /// Simulate the original equation.
    Simulate(RunArgs),
    /// Riccati term structure of the reduced model, checked by Monte Carlo.
    Price(RunArgs),
    /// Original-equation Monte Carlo prices against reduced Riccati prices.
    Compare(RunArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// JSON run configuration.
    config: PathBuf,
    /// Output directory (created if missing).
    #[arg(env = OUT_DIR_ENV)]
    out_dir: PathBuf,
    /// Relative quadrature tolerance, overriding the config.
    #[arg(long)]
    tol: Option<f64>,
    /// Random seed, overriding the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long)]
    threads: Option<usize>,
    /// Suppress the summary on standard output.
    #[arg(long)]
    quiet: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
enum Status {
    Pass,
    Fail,
    Invalid,
}

impl Status {
    fn exit_code(self) -> i32 {
        match self {
            Status::Pass => EXIT_PASS,
            Status::Fail => EXIT_FAIL,
            Status::Invalid => EXIT_INVALID,
        }
    }
}

#[derive(Debug, Serialize)]
struct Report {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    status: Status,
    exit_code: i32,
    seed: Option<u64>,
    checks: Option<CheckReport>,
    reduced_model: Option<ReducedModel>,
    results: BTreeMap<String, Value>,
    outputs: Vec<String>,
    error: Option<String>,
}

/// Files produced by a pipeline, written after it finishes.
#[derive(Default)]
struct Outcome {
    checks: Option<CheckReport>,
    reduced: Option<ReducedModel>,
    results: BTreeMap<String, Value>,
    files: Vec<(String, Vec<u8>)>,
    seed: Option<u64>,
}

impl Outcome {
    fn passed(&self) -> bool {
        self.checks.as_ref().is_none_or(CheckReport::passed)
    }
}

/// Runs the CLI on `argv` (including the program name) and returns the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
        }
    };
    let (name, args) = match &cli.command {
        Command::Check(a) => ("check", a),
        Command::Reduce(a) => ("reduce", a),
        Command::Simulate(a) => ("simulate", a),
        Command::Price(a) => ("price", a),
        Command::Compare(a) => ("compare", a),
    };
    execute(name, args)
}

fn execute(name: &'static str, args: &RunArgs) -> i32 {
    let seed = args.seed;
    let outcome = load(args).and_then(|cfg| {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(args.threads.unwrap_or(0))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?;
        pool.install(|| match name {
            "check" => check(&cfg),
            "reduce" => run_reduce(&cfg),
            "simulate" => simulate(&cfg),
            "price" => price(&cfg),
            _ => compare(&cfg),
        })
        .map(|mut o| {
            if matches!(name, "simulate" | "price" | "compare") {
                o.seed = Some(cfg.simulation.seed);
            }
            o
        })
    });

    let (status, outcome, error) = match outcome {
        Ok(o) => (if o.passed() { Status::Pass } else { Status::Fail }, o, None),
        Err(e) => {
            let status = if is_input_error(&e) { Status::Invalid } else { Status::Fail };
            (status, Outcome { seed, ..Outcome::default() }, Some(e.to_string()))
        }
    };
    let mut outputs: Vec<String> = outcome.files.iter().map(|f| f.0.clone()).collect();
    outputs.push("report.json".into());
    outputs.sort();
    let report = Report {
        tool: "stable-cir",
        version: env!("CARGO_PKG_VERSION"),
        command: name,
        status,
        exit_code: status.exit_code(),
        seed: outcome.seed,
        checks: outcome.checks,
        reduced_model: outcome.reduced,
        results: outcome.results,
        outputs,
        error,
    };

    if let Err(e) = write_outputs(&args.out_dir, &outcome.files, &report) {
        eprintln!("error: cannot write outputs to {}: {e}", args.out_dir.display());
        return EXIT_INVALID;
    }
    if let Some(err) = &report.error {
        eprintln!("error: {err}");
    }
    if !args.quiet {
        print_summary(&report);
    }
    report.exit_code
}

fn load(args: &RunArgs) -> stable_cir::Result<RunConfig> {
    let mut cfg = RunConfig::load(&args.config)?;
    if let Some(tol) = args.tol {
        if !(tol > 0.0 && tol < 1.0) {
            return Err(Error::InvalidArgument(format!("--tol {tol} outside (0, 1)")));
        }
        cfg.quadrature.rel_tol = tol;
    }
    if let Some(seed) = args.seed {
        cfg.simulation.seed = seed;
    }
    if args.threads == Some(0) {
        return Err(Error::InvalidArgument("--threads must be ≥ 1".into()));
    }
    Ok(cfg)
}

fn is_input_error(e: &Error) -> bool {
    matches!(
        e,
        Error::InvalidArgument(_)
            | Error::InvalidConfig(_)
            | Error::AlphaOutOfRange(_)
            | Error::NotUnit(_)
            | Error::NegativeDensity { .. }
            | Error::Io(_)
    )
}

fn write_outputs(dir: &Path, files: &[(String, Vec<u8>)], report: &Report) -> std::io::Result<()> {
    fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        fs::write(dir.join(name), bytes)?;
    }
    let mut json = serde_json::to_string_pretty(report).map_err(std::io::Error::other)?;
    json.push('\n');
    fs::write(dir.join("report.json"), json)
}

fn print_summary(report: &Report) {
    let mut out = std::io::stdout().lock();
    if let Some(checks) = &report.checks {
        for item in &checks.items {
            let _ = writeln!(out, "{:<18} {}", item.verdict.to_string(), item.name);
        }
    }
    if let Some(m) = &report.reduced_model {
        let _ = writeln!(out, "reduced model: a = {}, b = {}, C = {}, alpha = {}", m.a, m.b, m.c, m.alpha);
    }
    let _ = writeln!(out, "{}: {:?} (exit {})", report.command, report.status, report.exit_code);
}

fn json_bytes<T: Serialize>(value: &T) -> stable_cir::Result<Vec<u8>> {
    let mut s = serde_json::to_string_pretty(value).map_err(|e| Error::Io(e.to_string()))?;
    s.push('\n');
    Ok(s.into_bytes())
}

fn check(cfg: &RunConfig) -> stable_cir::Result<Outcome> {
    let spec = cfg.levy_spec()?;
    let g = cfg.volatility()?;
    if g.dim() != spec.dim {
        return Err(Error::InvalidConfig("G and the model have different dimensions".into()));
    }
    let q = &cfg.quadrature;
    let opts = &cfg.reduction;
    let mut report = CheckReport::new("check");
    report.merge("spec", validate_spec(&spec, q)?);
    report.merge("", check_martingale(&spec, q));
    let variation = check_variation(&spec, q);
    let variation_ok = variation.report.passed();
    report.merge("", variation.report);
    let g_at_zero = g.eval(0.0).iter().map(|v| v * v).sum::<f64>().sqrt();
    report.push(
        CheckItem::new(
            "theorem_assumptions",
            if variation_ok || g_at_zero == 0.0 { Verdict::Pass } else { Verdict::Unmet },
        )
        .evidence("g_at_zero_norm", g_at_zero)
        .detail("infinite variation with spanning directions, or G(0) = 0"),
    );
    report.merge("", check_positive_jumps(&g, &spec, &opts.x_grid));
    report.merge("", wiener_cir_check(&spec.wiener_cov, &g, &opts.x_grid).report);
    match radial_balance(&spec, &opts.balance_grid, None, q) {
        Ok(b) => report.merge("", b.report),
        Err(e) => report.push(CheckItem::new("radial_balance", Verdict::Fail).detail(e.to_string())),
    }
    match g0_limit(&g, &opts.g0_probes) {
        Ok((dir, res)) => {
            let mut item = CheckItem::new("g0_limit", Verdict::from_bool(res <= G0_TOL))
                .evidence("residual", res)
                .tolerance(G0_TOL);
            for (i, c) in dir.coords().iter().enumerate() {
                item = item.evidence(format!("g0_{i}"), *c);
            }
            report.push(item);
        }
        Err(e @ Error::InvalidArgument(_)) => return Err(e),
        Err(e) => report.push(CheckItem::new("g0_limit", Verdict::Fail).detail(e.to_string())),
    }
    Ok(Outcome {
        checks: Some(report),
        ..Outcome::default()
    })
}

fn reduction(cfg: &RunConfig) -> stable_cir::Result<Reduction> {
    let spec = cfg.levy_spec()?;
    let g = cfg.volatility()?;
    if g.dim() != spec.dim {
        return Err(Error::InvalidConfig("G and the model have different dimensions".into()));
    }
    reduce(&spec, &g, cfg.drift.a, cfg.drift.b, &cfg.reduction, &cfg.quadrature)
}

fn samples_csv(r: &Reduction) -> stable_cir::Result<Vec<u8>> {
    let mut w = csv_writer(Vec::new());
    w.write_record(["b", "J_mu", "J_nu_g0"])?;
    for i in 0..r.samples.b.len() {
        w.write_record([
            r.samples.b[i].to_string(),
            r.samples.j_mu[i].to_string(),
            r.samples.j_nu_g0[i].to_string(),
        ])?;
    }
    finish(w)
}

fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> stable_cir::Result<Vec<u8>> {
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

fn reduced_outcome(r: Reduction) -> stable_cir::Result<Outcome> {
    let mut results = BTreeMap::new();
    results.insert("fit".into(), json!({
        "C_tilde": r.fit.c_tilde,
        "alpha": r.fit.alpha,
        "fit_residual": r.fit.fit_residual,
        "ratio2": r.fit.ratio2,
        "ratio3": r.fit.ratio3,
        "affinity_residual": r.samples.affinity_residual,
        "wiener_c": r.samples.c,
    }));
    Ok(Outcome {
        files: vec![
            ("mu_samples.csv".into(), samples_csv(&r)?),
            ("reduced.json".into(), json_bytes(&r.model)?),
        ],
        checks: Some(r.report),
        reduced: Some(r.model),
        results,
        seed: None,
    })
}

fn run_reduce(cfg: &RunConfig) -> stable_cir::Result<Outcome> {
    reduced_outcome(reduction(cfg)?)
}

fn grid(cfg: &RunConfig, horizon: f64) -> stable_cir::Result<TimeGrid> {
    let n = (horizon / cfg.simulation.dt).round().max(1.0) as usize;
    TimeGrid::new(n as f64 * cfg.simulation.dt, n)
}

fn simulate(cfg: &RunConfig) -> stable_cir::Result<Outcome> {
    let spec = cfg.levy_spec()?;
    let g = cfg.volatility()?;
    if g.dim() != spec.dim {
        return Err(Error::InvalidConfig("G and the model have different dimensions".into()));
    }
    let s = &cfg.simulation;
    let tg = grid(cfg, s.horizon)?;
    let (a, b) = (cfg.drift.a, cfg.drift.b);
    let ens = simulate_original(&g, &spec, a, b, s.x0, tg, s.n_paths, s.seed, &cfg.original_options(), &cfg.quadrature)?;

    // Jumps are compensated, so E R_t solves m' = a m + b.
    let exact = |t: f64| {
        if a == 0.0 {
            s.x0 + b * t
        } else {
            s.x0 * (a * t).exp() + b * (a * t).exp_m1() / a
        }
    };
    let mut w = csv_writer(Vec::new());
    w.write_record(["t", "mean", "se", "mean_exact"])?;
    let stride = s.csv_stride.max(1);
    let mut steps: Vec<usize> = (0..=tg.n_steps).step_by(stride).collect();
    if steps.last() != Some(&tg.n_steps) {
        steps.push(tg.n_steps);
    }
    for &n in &steps {
        let (m, se) = mean_se(&ens.column(n));
        let t = n as f64 * tg.dt;
        w.write_record([t.to_string(), m.to_string(), se.to_string(), exact(t).to_string()])?;
    }
    let moments = finish(w)?;
    let mut paths = Vec::new();
    ens.write_csv(&mut paths, stride)?;

    let mut report = CheckReport::new("simulate");
    let min = ens.min_value();
    report.push(
        CheckItem::new("nonnegative_paths", Verdict::from_bool(min >= 0.0))
            .evidence("min_value", min)
            .evidence("clamp_events", ens.clamp_events as f64),
    );
    let horizon = tg.horizon();
    let (m, se) = mean_se(&ens.column(tg.n_steps));
    let band = 3.0 * se + cfg.pricing.scheme_tol;
    report.push(
        CheckItem::new("mean_at_horizon", Verdict::from_bool((m - exact(horizon)).abs() <= band))
            .evidence("mean_mc", m)
            .evidence("se", se)
            .evidence("mean_exact", exact(horizon))
            .tolerance(band),
    );
    let mut results = BTreeMap::new();
    results.insert("grid".into(), json!({"dt": tg.dt, "n_steps": tg.n_steps, "n_paths": ens.n_paths}));
    Ok(Outcome {
        checks: Some(report),
        files: vec![("moments.csv".into(), moments), ("paths.csv".into(), paths)],
        results,
        ..Outcome::default()
    })
}

fn sorted_taus(cfg: &RunConfig) -> Vec<f64> {
    let mut t = cfg.pricing.tau_grid.clone();
    t.sort_by(f64::total_cmp);
    t.dedup();
    t
}

fn price(cfg: &RunConfig) -> stable_cir::Result<Outcome> {
    let red = reduction(cfg)?;
    let model = red.model;
    let mut out = reduced_outcome(red)?;
    let taus = sorted_taus(cfg);
    let s = &cfg.simulation;
    let tau_max = *taus.last().expect("validated non-empty");
    let tg = grid(cfg, tau_max)?;
    let ts = riccati_solve(model, tg.horizon(), tg.n_steps, &cfg.pricing.riccati, &cfg.quadrature)?;
    let mut term = Vec::new();
    ts.write_csv(&mut term)?;
    let ens = simulate_reduced_integrals(&model, s.x0, tg, &taus, s.n_paths, s.seed)?;
    let (rows, judged) = judge_prices(&ts, s.x0, &mc_bond_prices(&ens), cfg.pricing.scheme_tol)?;
    let mut prices = Vec::new();
    write_comparison_csv(&rows, &mut prices)?;
    if let Some(r) = out.checks.as_mut() {
        r.merge("pricing", judged);
    }
    out.results.insert("clamp_events".into(), json!(ens.clamp_events));
    out.files.push(("prices.csv".into(), prices));
    out.files.push(("term_structure.csv".into(), term));
    Ok(out)
}

fn compare(cfg: &RunConfig) -> stable_cir::Result<Outcome> {
    let spec = cfg.levy_spec()?;
    let g = cfg.volatility()?;
    let red = reduction(cfg)?;
    let model = red.model;
    let mut out = reduced_outcome(red)?;
    let s = &cfg.simulation;
    let settings = CompareSettings {
        dt: s.dt,
        n_paths: s.n_paths,
        seed: s.seed,
        original: cfg.original_options(),
        scheme_tol: cfg.pricing.scheme_tol,
    };
    let cmp = compare_term_structures(
        &g,
        &spec,
        cfg.drift.a,
        cfg.drift.b,
        &model,
        s.x0,
        &sorted_taus(cfg),
        &settings,
        &cfg.quadrature,
    )?;
    let mut bytes = Vec::new();
    write_comparison_csv(&cmp.rows, &mut bytes)?;
    if let Some(r) = out.checks.as_mut() {
        r.merge("compare", cmp.report);
    }
    out.results.insert("clamp_events".into(), json!(cmp.clamp_events));
    out.results.insert("scheme_tol".into(), json!(cmp.scheme_tol));
    out.files.push(("comparison.csv".into(), bytes));
    Ok(out)
}
