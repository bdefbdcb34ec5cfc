//! Adaptive Gauss–Kronrod quadrature and improper integrals over `(0, ∞)`.
//!
//! Radial integrals are evaluated in the logarithmic variable `s = ln r` on
//! decade panels between the configured cutoffs `eps_low` and `r_high`. The
//! contributions outside the cutoffs are extrapolated from the three decades
//! next to each cutoff. Writing `F0, F1, F2` for those decade integrals (`F0`
//! adjacent to the cutoff) the model
//!
//! ```text
//! F_j = A u^j + B (10 u)^j
//! ```
//!
//! covers a power-law tail with a first-order correction one power of `r`
//! away; `u` is the root of `10 F0 u² − 11 F1 u + F2 = 0` closest to
//! `F1 / F0`. The tail beyond the cutoff is then `A/(u−1) + B/(10u−1)`,
//! and `u ≤ 1 + DIVERGENCE_MARGIN` means the integral does not converge.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_18,
    0.140_653_259_715_525_92,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_83,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// Ratio margin below which a tail is declared divergent.
pub const DIVERGENCE_MARGIN: f64 = 1e-3;

/// Tolerances and truncation limits shared by every numerical integral.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct QuadratureConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_subdivisions: usize,
    pub eps_low: f64,
    pub r_high: f64,
}

impl Default for QuadratureConfig {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            max_subdivisions: 4000,
            eps_low: 1e-8,
            r_high: 1e8,
        }
    }
}

impl QuadratureConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.rel_tol, self.abs_tol, self.eps_low, self.r_high]
            .iter()
            .all(|v| v.is_finite() && *v > 0.0);
        if !positive || self.max_subdivisions == 0 {
            return Err(Error::InvalidConfig(
                "quadrature tolerances and cutoffs must be positive".into(),
            ));
        }
        if !(self.eps_low < 1.0 && 1.0 < self.r_high) {
            return Err(Error::InvalidConfig(
                "quadrature cutoffs must satisfy eps_low < 1 < r_high".into(),
            ));
        }
        Ok(())
    }

    /// Same cutoffs with a different relative tolerance.
    pub fn with_rel_tol(mut self, rel_tol: f64) -> Self {
        self.rel_tol = rel_tol;
        self
    }
}

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
    segment: usize,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error.total_cmp(&other.error) == Ordering::Equal
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error
            .total_cmp(&other.error)
            .then_with(|| other.a.total_cmp(&self.a))
    }
}

fn gauss_kronrod(f: &mut dyn FnMut(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    let mut fv1 = [0.0; 7];
    let mut fv2 = [0.0; 7];
    for j in 0..7 {
        let dx = half * XGK[j];
        let f1 = f(center - dx);
        let f2 = f(center + dx);
        fv1[j] = f1;
        fv2[j] = f2;
        kronrod += WGK[j] * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    let mean = 0.5 * kronrod;
    let mut asc = WGK[7] * (fc - mean).abs();
    for j in 0..7 {
        asc += WGK[j] * ((fv1[j] - mean).abs() + (fv2[j] - mean).abs());
    }
    let result = kronrod * half;
    let resasc = asc * half.abs();
    let mut err = ((kronrod - gauss) * half).abs();
    if resasc != 0.0 && err != 0.0 {
        err = resasc * (200.0 * err / resasc).powf(1.5).min(1.0);
    }
    (result, err)
}

/// Integral split over consecutive segments `[breaks[i], breaks[i+1]]`.
#[derive(Debug, Clone)]
pub struct SegmentedIntegral {
    pub segments: Vec<f64>,
    pub error: f64,
}

impl SegmentedIntegral {
    pub fn total(&self) -> f64 {
        self.segments.iter().sum()
    }
}

/// Globally adaptive integration over a sequence of breakpoints.
///
/// Panels are bisected largest-error-first until the summed error estimate
/// drops below `max(abs_tol, rel_tol·|I|)`. Per-segment sums are accumulated
/// in position order so the result does not depend on refinement history.
pub fn integrate_segments(
    f: &mut dyn FnMut(f64) -> f64,
    breaks: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<SegmentedIntegral> {
    let n_seg = breaks.len().saturating_sub(1);
    let mut heap = BinaryHeap::with_capacity(n_seg * 4);
    let mut done = Vec::new();
    for (segment, w) in breaks.windows(2).enumerate() {
        let (a, b) = (w[0], w[1]);
        if b <= a {
            continue;
        }
        let (value, error) = gauss_kronrod(f, a, b);
        heap.push(Panel {
            a,
            b,
            value,
            error,
            segment,
        });
    }
    let mut bisections = 0usize;
    loop {
        let (total, err) = heap
            .iter()
            .chain(done.iter())
            .fold((0.0, 0.0), |(t, e), p: &Panel| (t + p.value, e + p.error));
        if !total.is_finite() || !err.is_finite() {
            return Err(Error::NonFinite);
        }
        if err <= abs_tol.max(rel_tol * total.abs()) || heap.is_empty() {
            break;
        }
        if bisections >= max_subdivisions {
            return Err(Error::QuadratureNotConverged {
                value: total,
                error: err,
            });
        }
        let worst = heap.pop().expect("heap checked non-empty");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // Panel collapsed to machine resolution; freeze it.
            done.push(Panel { error: 0.0, ..worst });
            continue;
        }
        for (a, b) in [(worst.a, mid), (mid, worst.b)] {
            let (value, error) = gauss_kronrod(f, a, b);
            heap.push(Panel {
                a,
                b,
                value,
                error,
                segment: worst.segment,
            });
        }
        bisections += 1;
    }
    let mut panels: Vec<Panel> = heap.into_vec();
    panels.extend(done);
    panels.sort_by(|p, q| p.a.total_cmp(&q.a));
    let mut segments = vec![0.0; n_seg];
    let mut error = 0.0;
    for p in &panels {
        segments[p.segment] += p.value;
        error += p.error;
    }
    Ok(SegmentedIntegral { segments, error })
}

/// Adaptive integral of `f` over `[a, b]` with interior breakpoints.
pub fn integrate(
    f: &mut dyn FnMut(f64) -> f64,
    a: f64,
    b: f64,
    interior: &[f64],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    let mut breaks = vec![a];
    breaks.extend(interior.iter().copied().filter(|x| *x > a && *x < b));
    breaks.push(b);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup();
    Ok(integrate_segments(f, &breaks, rel_tol, abs_tol, max_subdivisions)?.total())
}

/// End of a radial integration range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Limit {
    /// `0`, reached by extrapolating below `eps_low`.
    Zero,
    /// `+∞`, reached by extrapolating above `r_high`.
    Infinity,
    /// A finite positive radius.
    At(f64),
}

/// Which end of a radial integral failed to converge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TailEnd {
    Zero,
    Infinity,
}

impl std::fmt::Display for TailEnd {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            TailEnd::Zero => write!(f, "0"),
            TailEnd::Infinity => write!(f, "∞"),
        }
    }
}

/// Extrapolated tail beyond a cutoff, given the three adjacent decades
/// ordered from the cutoff inward. Returns `(tail, growth_ratio)`.
pub fn extrapolate_tail(f0: f64, f1: f64, f2: f64) -> (f64, f64) {
    if f0 == 0.0 {
        return (0.0, f64::INFINITY);
    }
    let simple = f1 / f0;
    let disc = 121.0 * f1 * f1 - 40.0 * f0 * f2;
    let u = if disc >= 0.0 {
        let sq = disc.sqrt();
        let r1 = (11.0 * f1 + sq) / (20.0 * f0);
        let r2 = (11.0 * f1 - sq) / (20.0 * f0);
        if (r1 - simple).abs() <= (r2 - simple).abs() {
            r1
        } else {
            r2
        }
    } else {
        simple
    };
    if !(u > 1.0 + DIVERGENCE_MARGIN) {
        return (f64::INFINITY, u);
    }
    // B from the second equation; fall back to the pure power law when the
    // correction fit is degenerate.
    let b = (f1 / u - f0) / 9.0;
    let a = f0 - b;
    let tail = a / (u - 1.0) + b / (10.0 * u - 1.0);
    if tail.is_finite() {
        (tail, u)
    } else {
        (f0 / (u - 1.0), u)
    }
}

/// Radial integrand hints: exponents are informational, breakpoints become
/// panel edges.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TailHints {
    /// `p₀` with `ρ(r) ~ r^{-p₀}` near zero.
    pub low_exponent: Option<f64>,
    /// `p_∞` with `ρ(r) ~ r^{-p_∞}` near infinity.
    pub high_exponent: Option<f64>,
    /// Radii where the density is discontinuous or changes form.
    #[serde(default)]
    pub breakpoints: Vec<f64>,
}

/// `∫ f(r) dr` between two radial limits.
///
/// Improper ends are extrapolated; a tail that does not decay produces
/// [`Error::DivergentIntegral`].
pub fn radial_integral(
    f: &dyn Fn(f64) -> f64,
    lo: Limit,
    hi: Limit,
    breakpoints: &[f64],
    cfg: &QuadratureConfig,
) -> Result<f64> {
    let ln_lo = match lo {
        Limit::Zero => cfg.eps_low.ln(),
        Limit::At(r) => r.ln(),
        Limit::Infinity => return Err(Error::InvalidArgument("lower limit ∞".into())),
    };
    let ln_hi = match hi {
        Limit::Infinity => cfg.r_high.ln(),
        Limit::At(r) => r.ln(),
        Limit::Zero => return Err(Error::InvalidArgument("upper limit 0".into())),
    };
    if ln_hi <= ln_lo {
        return Ok(0.0);
    }
    let ln10 = std::f64::consts::LN_10;
    let mut breaks = vec![ln_lo, ln_hi];
    if lo == Limit::Zero {
        for k in 1..=3 {
            breaks.push(ln_lo + k as f64 * ln10);
        }
    }
    if hi == Limit::Infinity {
        for k in 1..=3 {
            breaks.push(ln_hi - k as f64 * ln10);
        }
    }
    // Decade grid plus r = 1 and caller breakpoints.
    let first = (ln_lo / ln10).ceil() as i64;
    let last = (ln_hi / ln10).floor() as i64;
    for k in first..=last {
        breaks.push(k as f64 * ln10);
    }
    breaks.extend(
        breakpoints
            .iter()
            .filter(|r| **r > 0.0)
            .map(|r| r.ln()),
    );
    breaks.retain(|s| *s >= ln_lo && *s <= ln_hi);
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|x, y| (*x - *y).abs() < 1e-12);

    let mut g = |s: f64| {
        let r = s.exp();
        f(r) * r
    };
    let seg = integrate_segments(
        &mut g,
        &breaks,
        cfg.rel_tol * 0.5,
        cfg.abs_tol * 0.5,
        cfg.max_subdivisions,
    )?;
    let decade = |from: f64, to: f64| -> f64 {
        breaks
            .windows(2)
            .zip(&seg.segments)
            .filter(|(w, _)| w[0] >= from - 1e-9 && w[1] <= to + 1e-9)
            .map(|(_, v)| *v)
            .sum()
    };
    let mut total = seg.total();
    if lo == Limit::Zero {
        let f0 = decade(ln_lo, ln_lo + ln10);
        let f1 = decade(ln_lo + ln10, ln_lo + 2.0 * ln10);
        let f2 = decade(ln_lo + 2.0 * ln10, ln_lo + 3.0 * ln10);
        let (tail, ratio) = extrapolate_tail(f0, f1, f2);
        if !tail.is_finite() {
            return Err(Error::DivergentIntegral {
                end: TailEnd::Zero,
                ratio,
            });
        }
        total += tail;
    }
    if hi == Limit::Infinity {
        let f0 = decade(ln_hi - ln10, ln_hi);
        let f1 = decade(ln_hi - 2.0 * ln10, ln_hi - ln10);
        let f2 = decade(ln_hi - 3.0 * ln10, ln_hi - 2.0 * ln10);
        let (tail, ratio) = extrapolate_tail(f0, f1, f2);
        if !tail.is_finite() {
            return Err(Error::DivergentIntegral {
                end: TailEnd::Infinity,
                ratio,
            });
        }
        total += tail;
    }
    Ok(total)
}

/// Nested adaptive integral over the box `∏ [lo_i, hi_i]`.
///
/// Every coordinate is integrated with the same tolerances; the innermost
/// integrand receives the full point.
pub fn integrate_box(
    f: &dyn Fn(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    rel_tol: f64,
    abs_tol: f64,
    max_subdivisions: usize,
) -> Result<f64> {
    let mut point = vec![0.0; bounds.len()];
    nested(f, bounds, 0, &mut point, rel_tol, abs_tol, max_subdivisions)
}

fn nested(
    f: &dyn Fn(&[f64]) -> f64,
    bounds: &[(f64, f64)],
    level: usize,
    point: &mut [f64],
    rel_tol: f64,
    abs_tol: f64,
    max_sub: usize,
) -> Result<f64> {
    if level == bounds.len() {
        return Ok(f(point));
    }
    let (a, b) = bounds[level];
    let mut failure = None;
    let mut g = |x: f64| {
        point[level] = x;
        let mut inner = point.to_vec();
        match nested(f, bounds, level + 1, &mut inner, rel_tol, abs_tol, max_sub) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        }
    };
    let value = integrate(&mut g, a, b, &[], rel_tol, abs_tol, max_sub);
    if let Some(e) = failure {
        return Err(e);
    }
    value
}
