//! Affine term structures: `P(τ, x) = exp(−A(τ) − B(τ) x)`.
//!
//! Substituting `f = e^{-B x}` into the generator gives
//!
//! ```text
//! B' = 1 + aB − cB² − J_μ(B),        B(0) = 0,
//! A' = bB − J_{ν_{G(0)}}(B),         A(0) = 0.
//! ```
//!
//! Monte Carlo prices average `exp(−∫₀^τ R)` over simulated paths.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::laplace::laplace_radial;
use crate::levy_spec::{LevySpec, VolatilityFunction};
use crate::quadrature::QuadratureConfig;
use crate::reduction::{GeneratingModel, ReducedModel};
use crate::report::{CheckItem, CheckReport, Verdict};
use crate::simulate::{mean_se, simulate_original_integrals, IntegralEnsemble, OriginalOptions, PathEnsemble, TimeGrid};

/// Upper bound on `B` before the solve is declared a blow-up.
pub const DEFAULT_B_CAP: f64 = 1e3;

/// `A(τ)`, `B(τ)` on an increasing grid starting at `τ = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TermStructure {
    pub tau: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

/// Generator parameters entering the Riccati equations.
#[derive(Debug, Clone)]
pub enum AffineModel {
    Reduced(ReducedModel),
    Generating(Box<GeneratingModel>),
}

impl From<ReducedModel> for AffineModel {
    fn from(m: ReducedModel) -> Self {
        AffineModel::Reduced(m)
    }
}

impl From<GeneratingModel> for AffineModel {
    fn from(m: GeneratingModel) -> Self {
        AffineModel::Generating(Box::new(m))
    }
}

impl AffineModel {
    /// `(B', A')` at `B`.
    fn rhs(&self, b_val: f64, cfg: &QuadratureConfig) -> Result<(f64, f64)> {
        let b_pos = b_val.max(0.0);
        match self {
            AffineModel::Reduced(m) => Ok((1.0 + m.a * b_val - m.j_mu(b_pos), m.b * b_val)),
            AffineModel::Generating(m) => {
                let j_mu = laplace_radial(&m.mu, b_pos, cfg)?;
                let j_nu = if m.nu_g0.is_zero() { 0.0 } else { laplace_radial(&m.nu_g0, b_pos, cfg)? };
                Ok((1.0 + m.a * b_val - m.c * b_val * b_val - j_mu, m.b * b_val - j_nu))
            }
        }
    }
}

/// ODE integration settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RiccatiConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub b_cap: f64,
    /// Fixed-step classical RK4 instead of adaptive Dormand–Prince.
    pub fixed_step: bool,
}

impl Default for RiccatiConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            b_cap: DEFAULT_B_CAP,
            fixed_step: false,
        }
    }
}

type State = [f64; 2];

fn f_state(model: &AffineModel, y: State, cfg: &QuadratureConfig) -> Result<State> {
    let (db, da) = model.rhs(y[0], cfg)?;
    Ok([db, da])
}

fn axpy(y: State, h: f64, k: &[(f64, State)]) -> State {
    let mut out = y;
    for (c, v) in k {
        out[0] += h * c * v[0];
        out[1] += h * c * v[1];
    }
    out
}

fn rk4_step(model: &AffineModel, y: State, h: f64, cfg: &QuadratureConfig) -> Result<State> {
    let k1 = f_state(model, y, cfg)?;
    let k2 = f_state(model, axpy(y, h, &[(0.5, k1)]), cfg)?;
    let k3 = f_state(model, axpy(y, h, &[(0.5, k2)]), cfg)?;
    let k4 = f_state(model, axpy(y, h, &[(1.0, k3)]), cfg)?;
    Ok(axpy(y, h, &[(1.0 / 6.0, k1), (1.0 / 3.0, k2), (1.0 / 3.0, k3), (1.0 / 6.0, k4)]))
}

/// Dormand–Prince 5(4) from `t0` to `t1`; returns the state at `t1`.
fn dopri(model: &AffineModel, y0: State, t0: f64, t1: f64, h0: f64, rc: &RiccatiConfig, cfg: &QuadratureConfig) -> Result<(State, f64)> {
    const A: [&[f64]; 6] = [
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let mut t = t0;
    let mut y = y0;
    let mut h = h0.min(t1 - t0);
    let mut guard = 0usize;
    while t1 - t > 1e-15 * t1.max(1.0) {
        guard += 1;
        if guard > 1_000_000 {
            return Err(Error::QuadratureNotConverged { value: y[0], error: h });
        }
        h = h.min(t1 - t);
        let mut k: Vec<State> = vec![f_state(model, y, cfg)?];
        for row in A.iter() {
            let terms: Vec<(f64, State)> = row.iter().zip(&k).map(|(c, v)| (*c, *v)).collect();
            k.push(f_state(model, axpy(y, h, &terms), cfg)?);
        }
        let y5 = axpy(y, h, &A[5].iter().zip(&k).map(|(c, v)| (*c, *v)).collect::<Vec<_>>());
        let err_terms: Vec<(f64, State)> = E.iter().zip(&k).map(|(c, v)| (*c, *v)).collect();
        let err = axpy([0.0, 0.0], h, &err_terms);
        let scale = |i: usize| rc.abs_tol + rc.rel_tol * y[i].abs().max(y5[i].abs());
        let en = ((err[0] / scale(0)).powi(2) + (err[1] / scale(1)).powi(2)).sqrt() / 2f64.sqrt();
        if en <= 1.0 {
            t += h;
            y = y5;
        }
        let factor = if en == 0.0 { 5.0 } else { (0.9 * en.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    Ok((y, h))
}

/// Solves the Riccati system on `n_steps + 1` equally spaced maturities in `[0, tau_max]`.
pub fn riccati_solve(
    model: impl Into<AffineModel>,
    tau_max: f64,
    n_steps: usize,
    rc: &RiccatiConfig,
    cfg: &QuadratureConfig,
) -> Result<TermStructure> {
    let model = model.into();
    if let AffineModel::Reduced(m) = &model {
        m.validate()?;
    }
    if !(tau_max > 0.0) || n_steps == 0 {
        return Err(Error::InvalidArgument("need tau_max > 0 and n_steps ≥ 1".into()));
    }
    let dt = tau_max / n_steps as f64;
    let mut ts = TermStructure {
        tau: vec![0.0],
        a: vec![0.0],
        b: vec![0.0],
    };
    let mut y: State = [0.0, 0.0];
    let mut h = dt.min(1e-3);
    for n in 1..=n_steps {
        let (t0, t1) = ((n - 1) as f64 * dt, n as f64 * dt);
        if rc.fixed_step {
            y = rk4_step(&model, y, dt, cfg)?;
        } else {
            let (yn, hn) = dopri(&model, y, t0, t1, h, rc, cfg)?;
            y = yn;
            h = hn;
        }
        if !(y[0] >= -1e-12 && y[0] <= rc.b_cap) || !y[1].is_finite() {
            return Err(Error::BlowUp { tau: t1, cap: rc.b_cap });
        }
        ts.tau.push(t1);
        ts.b.push(y[0]);
        ts.a.push(y[1]);
    }
    Ok(ts)
}

impl TermStructure {
    pub fn tau_max(&self) -> f64 {
        *self.tau.last().unwrap_or(&0.0)
    }

    /// `(A(τ), B(τ))` by linear interpolation.
    pub fn at(&self, tau: f64) -> Result<(f64, f64)> {
        let max = self.tau_max();
        if !(tau >= 0.0) || tau > max * (1.0 + 1e-12) {
            return Err(Error::MaturityOutOfRange { tau, max });
        }
        let i = self.tau.partition_point(|t| *t <= tau).clamp(1, self.tau.len() - 1);
        let (t0, t1) = (self.tau[i - 1], self.tau[i]);
        let w = ((tau - t0) / (t1 - t0)).clamp(0.0, 1.0);
        Ok((
            self.a[i - 1] + w * (self.a[i] - self.a[i - 1]),
            self.b[i - 1] + w * (self.b[i] - self.b[i - 1]),
        ))
    }

    /// `tau, A, B` rows.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv_writer(w);
        wtr.write_record(["tau", "A", "B"])?;
        for i in 0..self.tau.len() {
            wtr.write_record([self.tau[i].to_string(), self.a[i].to_string(), self.b[i].to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

pub(crate) fn csv_writer<W: Write>(w: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w)
}

/// `exp(−A(τ) − B(τ) x)`.
pub fn bond_price(ts: &TermStructure, x: f64, tau: f64) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidArgument(format!("short rate {x} < 0")));
    }
    let (a, b) = ts.at(tau)?;
    Ok((-a - b * x).exp())
}

/// Monte Carlo price `E exp(−∫₀^τ R)` with the trapezoidal rule on the path grid.
pub fn mc_bond_price(ensemble: &PathEnsemble, tau: f64) -> Result<(f64, f64)> {
    let grid = TimeGrid {
        dt: ensemble.dt,
        n_steps: ensemble.n_steps,
    };
    let k = grid.index_of(tau)?;
    let disc: Vec<f64> = ensemble
        .values
        .iter()
        .map(|p| {
            let mut s = 0.0;
            for n in 0..k {
                s += 0.5 * (p[n] + p[n + 1]);
            }
            (-s * ensemble.dt).exp()
        })
        .collect();
    Ok(mean_se(&disc))
}

/// Monte Carlo prices at every recorded maturity: `(τ, price, SE)`.
pub fn mc_bond_prices(ensemble: &IntegralEnsemble) -> Vec<(f64, f64, f64)> {
    ensemble
        .taus
        .iter()
        .enumerate()
        .map(|(k, tau)| {
            let disc: Vec<f64> = ensemble.integrals.iter().map(|p| (-p[k]).exp()).collect();
            let (m, se) = mean_se(&disc);
            (*tau, m, se)
        })
        .collect()
}

/// One maturity of a term-structure comparison.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareRow {
    pub tau: f64,
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub price_riccati: f64,
    pub price_mc: f64,
    pub se: f64,
}

impl CompareRow {
    pub fn discrepancy(&self) -> f64 {
        (self.price_mc - self.price_riccati).abs()
    }
}

/// Result of [`compare_term_structures`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<CompareRow>,
    pub scheme_tol: f64,
    pub clamp_events: u64,
    pub report: CheckReport,
}

/// Writes `tau, A, B, price_riccati, price_mc, se`.
pub fn write_comparison_csv<W: Write>(rows: &[CompareRow], w: W) -> Result<()> {
    let mut wtr = csv_writer(w);
    wtr.write_record(["tau", "A", "B", "price_riccati", "price_mc", "se"])?;
    for r in rows {
        wtr.write_record([
            r.tau.to_string(),
            r.a.to_string(),
            r.b.to_string(),
            r.price_riccati.to_string(),
            r.price_mc.to_string(),
            r.se.to_string(),
        ])?;
    }
    wtr.flush()?;
    Ok(())
}

/// Monte Carlo settings for a comparison.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CompareSettings {
    pub dt: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub original: OriginalOptions,
    /// Allowance for time-discretisation and jump-truncation bias.
    pub scheme_tol: f64,
}

/// Builds rows from a term structure and Monte Carlo prices, and judges
/// every maturity against `3·SE + scheme_tol`.
pub fn judge_prices(ts: &TermStructure, x0: f64, mc: &[(f64, f64, f64)], scheme_tol: f64) -> Result<(Vec<CompareRow>, CheckReport)> {
    let mut rows = Vec::with_capacity(mc.len());
    let mut report = CheckReport::new("term_structure_comparison");
    for &(tau, price_mc, se) in mc {
        let (a, b) = ts.at(tau)?;
        let row = CompareRow {
            tau,
            a,
            b,
            price_riccati: (-a - b * x0).exp(),
            price_mc,
            se,
        };
        let band = 3.0 * se + scheme_tol;
        report.push(
            CheckItem::new(format!("price_tau_{tau}"), Verdict::from_bool(row.discrepancy() <= band))
                .evidence("discrepancy", row.discrepancy())
                .evidence("band", band)
                .evidence("se", se)
                .tolerance(scheme_tol),
        );
        rows.push(row);
    }
    Ok((rows, report))
}

/// Monte Carlo prices of the original equation against Riccati prices of the
/// reduced model.
#[allow(clippy::too_many_arguments)]
pub fn compare_term_structures(
    g: &VolatilityFunction,
    spec: &LevySpec,
    a: f64,
    b: f64,
    reduced: &ReducedModel,
    x0: f64,
    taus: &[f64],
    sim: &CompareSettings,
    cfg: &QuadratureConfig,
) -> Result<Comparison> {
    let tau_max = taus.iter().copied().fold(0.0, f64::max);
    let n_steps = (tau_max / sim.dt).round() as usize;
    let mut clamp_events = 0;
    let mc = if n_steps == 0 {
        taus.iter().map(|t| (*t, 1.0, 0.0)).collect::<Vec<_>>()
    } else {
        let grid = TimeGrid::new(n_steps as f64 * sim.dt, n_steps)?;
        let mut sorted = taus.to_vec();
        sorted.sort_by(f64::total_cmp);
        let ens = simulate_original_integrals(g, spec, a, b, x0, grid, &sorted, sim.n_paths, sim.seed, &sim.original, cfg)?;
        clamp_events = ens.clamp_events;
        mc_bond_prices(&ens)
    };
    let ts = if tau_max > 0.0 {
        riccati_solve(*reduced, tau_max, n_steps.max(1), &RiccatiConfig::default(), cfg)?
    } else {
        TermStructure {
            tau: vec![0.0, 1.0],
            a: vec![0.0, 0.0],
            b: vec![0.0, 0.0],
        }
    };
    let (rows, report) = judge_prices(&ts, x0, &mc, sim.scheme_tol)?;
    Ok(Comparison {
        rows,
        scheme_tol: sim.scheme_tol,
        clamp_events,
        report,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::laplace::c_alpha;
    use crate::levy_spec::RadialMeasure;
    use crate::simulate::simulate_reduced;

    fn cfg() -> QuadratureConfig {
        QuadratureConfig::default()
    }

    #[test]
    fn small_tau_slope_is_one() {
        let m = ReducedModel::new(-0.5, 0.1, 1.0, 1.5).unwrap();
        let ts = riccati_solve(m, 1e-4, 1, &RiccatiConfig::default(), &cfg()).unwrap();
        assert!((ts.b[1] / 1e-4 - 1.0).abs() < 1e-4);
        assert_eq!((ts.a[0], ts.b[0]), (0.0, 0.0));
    }

    #[test]
    fn steady_state() {
        let m = ReducedModel::new(0.0, 0.0, 1.0, 1.5).unwrap();
        let ts = riccati_solve(m, 10.0, 100, &RiccatiConfig::default(), &cfg()).unwrap();
        let b_inf = c_alpha(1.5).unwrap().powf(-2.0 / 3.0);
        assert!((ts.b[100] - b_inf).abs() < 1e-6);
        assert!(ts.b.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn pure_drift_closed_form() {
        let m = GeneratingModel {
            a: -1.0,
            b: 0.2,
            c: 0.0,
            nu_g0: RadialMeasure::zero(),
            mu: RadialMeasure::zero(),
        };
        let ts = riccati_solve(m, 1.0, 10, &RiccatiConfig::default(), &cfg()).unwrap();
        let b1 = 1.0 - (-1f64).exp();
        assert!((ts.b[10] - b1).abs() < 1e-9);
        // A = b ∫ B = 0.2 (1 − (1 − e^{-1}))
        assert!((ts.a[10] - 0.2 * (-1f64).exp()).abs() < 1e-9);
        let p = bond_price(&ts, 1.0, 1.0).unwrap();
        assert!((p - (-ts.b[10] - ts.a[10]).exp()).abs() < 1e-15);
    }

    #[test]
    fn bond_price_edges() {
        let ts = TermStructure {
            tau: vec![0.0, 1.0],
            a: vec![0.0, 0.02],
            b: vec![0.0, 0.5],
        };
        assert_eq!(bond_price(&ts, 3.0, 0.0).unwrap(), 1.0);
        assert!((bond_price(&ts, 0.0, 1.0).unwrap() - (-0.02f64).exp()).abs() < 1e-15);
        assert!(matches!(bond_price(&ts, 0.0, 2.0), Err(Error::MaturityOutOfRange { .. })));
    }

    #[test]
    fn reduced_and_generating_forms_agree() {
        let m = ReducedModel::new(-0.5, 0.1, 1.3, 1.5).unwrap();
        let a = riccati_solve(m, 2.0, 20, &RiccatiConfig::default(), &cfg()).unwrap();
        let b = riccati_solve(GeneratingModel::from_reduced(&m), 2.0, 20, &RiccatiConfig::default(), &cfg()).unwrap();
        for i in 0..=20 {
            assert!((a.b[i] - b.b[i]).abs() < 1e-7 && (a.a[i] - b.a[i]).abs() < 1e-7);
        }
    }

    #[test]
    fn fixed_step_converges() {
        let m = ReducedModel::new(0.0, 0.0, 1.0, 1.5).unwrap();
        let exact = riccati_solve(m, 2.0, 1, &RiccatiConfig::default(), &cfg()).unwrap().b[1];
        let fixed = RiccatiConfig {
            fixed_step: true,
            ..Default::default()
        };
        let e1 = (riccati_solve(m, 2.0, 20, &fixed, &cfg()).unwrap().b[20] - exact).abs();
        let e2 = (riccati_solve(m, 2.0, 40, &fixed, &cfg()).unwrap().b[40] - exact).abs();
        assert!(e2 <= 0.5 * e1, "{e1} {e2}");
    }

    #[test]
    fn zero_rate_ensemble_prices_at_par() {
        let m = ReducedModel { a: 0.0, b: 0.0, c: 0.0, alpha: 1.5 };
        let e = simulate_reduced(&m, 0.0, TimeGrid::new(1.0, 10).unwrap(), 5, 0).unwrap();
        assert_eq!(mc_bond_price(&e, 1.0).unwrap(), (1.0, 0.0));
    }

    #[test]
    fn deterministic_mc_matches_closed_form() {
        let m = ReducedModel { a: -1.0, b: 0.0, c: 0.0, alpha: 1.5 };
        let e = simulate_reduced(&m, 1.0, TimeGrid::new(1.0, 1000).unwrap(), 1, 0).unwrap();
        let (p, _) = mc_bond_price(&e, 1.0).unwrap();
        let exact = (-(1.0 - (-1f64).exp())).exp();
        assert!((p - exact).abs() < 1e-3);
    }

    #[test]
    fn comparison_csv_layout() {
        let rows = vec![CompareRow {
            tau: 0.5,
            a: 0.01,
            b: 0.4,
            price_riccati: 0.6,
            price_mc: 0.61,
            se: 0.001,
        }];
        let mut buf = Vec::new();
        write_comparison_csv(&rows, &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "tau,A,B,price_riccati,price_mc,se\n0.5,0.01,0.4,0.6,0.61,0.001\n"
        );
    }
}
