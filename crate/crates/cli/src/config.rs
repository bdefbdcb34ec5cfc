//! The JSON run configuration.
//!
//! Tabulated functions are `(x, value)` pairs, either inline (`points`) or
//! in a CSV file (`file`, resolved relative to the config file) with a
//! header row and one column per component.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::Deserialize;
use stable_cir::levy_spec::{
    LevySpec, RadialFamily, RadialMeasure, SphericalMeasure, UnitDirection, VolatilityFunction,
};
use stable_cir::pricing::RiccatiConfig;
use stable_cir::reduction::ReduceOptions;
use stable_cir::simulate::{OriginalOptions, SmallJumps, DEFAULT_INTENSITY_BUDGET};
use stable_cir::{Error, QuadratureConfig, Result};

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelSection,
    #[serde(rename = "G")]
    pub g: GSection,
    pub drift: Drift,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default)]
    pub pricing: PricingSection,
    #[serde(default)]
    pub quadrature: QuadratureConfig,
    #[serde(default)]
    pub reduction: ReduceOptions,
    /// Directory of the config file, for relative `file` references.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    pub d: usize,
    /// Wiener covariance; zero when absent.
    #[serde(rename = "Q", default)]
    pub q: Option<Vec<Vec<f64>>>,
    pub spherical: SphericalSection,
    pub radial: RadialSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SphericalSection {
    /// Weighted directions; directions are normalized.
    Atoms { atoms: Vec<AtomEntry> },
    Angular { density: AngularDensity },
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AtomEntry {
    pub direction: Vec<f64>,
    pub weight: f64,
}

/// Density on the polar box `[0,π]^{d-2} × [0,2π]`.
#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AngularDensity {
    Uniform { value: f64 },
    /// `base + amplitude·cos θ`, `d = 2`.
    Cosine { base: f64, amplitude: f64 },
    /// Piecewise linear in `θ ∈ [0, 2π]`, `d = 2`.
    Tabulated(Table),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RadialSection {
    /// `scale · r^{-1-α} dr`.
    Power {
        alpha: f64,
        #[serde(default = "one")]
        scale: f64,
    },
    /// Piecewise linear density in `r`, zero outside the table.
    Custom(Table),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GSection {
    /// `x^{exponent} · direction`.
    Power { exponent: f64, direction: Vec<f64> },
    Tabulated(Table),
}

/// Inline rows `[x, v1, v2, …]` or a CSV file with the same columns.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Table {
    #[serde(default)]
    pub points: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub file: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Drift {
    pub a: f64,
    pub b: f64,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationSection {
    pub x0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub n_paths: usize,
    /// Jump cutoff of the compound-Poisson approximation.
    pub eps: f64,
    pub seed: u64,
    pub small_jumps: SmallJumps,
    pub intensity_budget: f64,
    /// Every `csv_stride`-th step is written to `paths.csv`.
    pub csv_stride: usize,
}

impl Default for SimulationSection {
    fn default() -> Self {
        Self {
            x0: 1.0,
            horizon: 1.0,
            dt: 1e-3,
            n_paths: 10_000,
            eps: 0.02,
            seed: 0,
            small_jumps: SmallJumps::Gaussian,
            intensity_budget: DEFAULT_INTENSITY_BUDGET,
            csv_stride: 10,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PricingSection {
    pub tau_grid: Vec<f64>,
    /// Allowance added to `3·SE` when Monte Carlo prices are judged.
    pub scheme_tol: f64,
    pub riccati: RiccatiConfig,
}

impl Default for PricingSection {
    fn default() -> Self {
        Self {
            tau_grid: vec![0.5, 1.0, 2.0],
            scheme_tol: 1e-3,
            riccati: RiccatiConfig::default(),
        }
    }
}

fn one() -> f64 {
    1.0
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidConfig(msg.into())
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

impl RunConfig {
    /// Reads, parses and validates a config file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        cfg.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| invalid(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.model.d;
        if d == 0 {
            return Err(invalid("model.d must be ≥ 1"));
        }
        if let Some(q) = &self.model.q {
            if q.len() != d || q.iter().any(|row| row.len() != d) {
                return Err(invalid(format!("model.Q must be {d}×{d}")));
            }
            for v in q.iter().flatten() {
                finite("model.Q", *v)?;
            }
        }
        match &self.model.spherical {
            SphericalSection::Atoms { atoms } => {
                if atoms.is_empty() {
                    return Err(invalid("model.spherical.atoms is empty"));
                }
                for a in atoms {
                    if a.direction.len() != d {
                        return Err(invalid("atom direction has the wrong dimension"));
                    }
                    if !(a.weight > 0.0 && a.weight.is_finite()) {
                        return Err(invalid("atom weights must be positive"));
                    }
                }
            }
            SphericalSection::Angular { density } => {
                if d < 2 {
                    return Err(invalid("angular densities need d ≥ 2"));
                }
                match density {
                    AngularDensity::Uniform { value } => {
                        if !(*value > 0.0 && value.is_finite()) {
                            return Err(invalid("uniform angular density must be positive"));
                        }
                    }
                    AngularDensity::Cosine { base, amplitude } => {
                        if d != 2 {
                            return Err(invalid("cosine angular density needs d = 2"));
                        }
                        finite("amplitude", *amplitude)?;
                        if !(base - amplitude.abs() >= 0.0) || !(*base > 0.0) {
                            return Err(invalid("cosine angular density must be nonnegative"));
                        }
                    }
                    AngularDensity::Tabulated(_) => {
                        if d != 2 {
                            return Err(invalid("tabulated angular density needs d = 2"));
                        }
                    }
                }
            }
        }
        if let RadialSection::Power { alpha, scale } = self.model.radial {
            if !(alpha > 0.0 && alpha < 2.0) {
                return Err(invalid(format!("radial alpha {alpha} outside (0, 2)")));
            }
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(invalid("radial scale must be positive"));
            }
        }
        if let GSection::Power { exponent, direction } = &self.g {
            finite("G.exponent", *exponent)?;
            if direction.len() != d {
                return Err(invalid("G.direction has the wrong dimension"));
            }
        }
        finite("drift.a", self.drift.a)?;
        if !(self.drift.b >= 0.0 && self.drift.b.is_finite()) {
            return Err(invalid("drift.b must be ≥ 0"));
        }
        let s = &self.simulation;
        if !(s.x0 >= 0.0 && s.x0.is_finite()) {
            return Err(invalid("simulation.x0 must be ≥ 0"));
        }
        if !(s.dt > 0.0 && s.horizon > 0.0 && s.dt <= s.horizon) {
            return Err(invalid("need 0 < simulation.dt ≤ simulation.horizon"));
        }
        if s.n_paths < 2 {
            return Err(invalid("simulation.n_paths must be ≥ 2"));
        }
        if !(s.eps > 0.0 && s.eps < 1.0) {
            return Err(invalid("simulation.eps must lie in (0, 1)"));
        }
        if !(s.intensity_budget > 0.0) {
            return Err(invalid("simulation.intensity_budget must be positive"));
        }
        let p = &self.pricing;
        if p.tau_grid.is_empty() || p.tau_grid.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(invalid("pricing.tau_grid needs positive maturities"));
        }
        if !(p.scheme_tol >= 0.0) {
            return Err(invalid("pricing.scheme_tol must be ≥ 0"));
        }
        self.quadrature.validate()
    }

    /// Path of a `file` reference.
    fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    fn rows(&self, t: &Table, width: usize, what: &str) -> Result<Vec<Vec<f64>>> {
        let rows = match (&t.points, &t.file) {
            (Some(p), None) => p.clone(),
            (None, Some(f)) => read_table(&self.resolve(f))?,
            _ => return Err(invalid(format!("{what}: give exactly one of points, file"))),
        };
        if rows.len() < 2 || rows.iter().any(|r| r.len() != width) {
            return Err(invalid(format!("{what}: need ≥ 2 rows of {width} numbers")));
        }
        if rows.iter().flatten().any(|v| !v.is_finite()) {
            return Err(invalid(format!("{what}: non-finite entry")));
        }
        Ok(rows)
    }

    pub fn wiener(&self) -> DMatrix<f64> {
        let d = self.model.d;
        match &self.model.q {
            Some(q) => DMatrix::from_fn(d, d, |i, j| q[i][j]),
            None => DMatrix::zeros(d, d),
        }
    }

    pub fn spherical(&self) -> Result<SphericalMeasure> {
        match &self.model.spherical {
            SphericalSection::Atoms { atoms } => SphericalMeasure::atoms(
                atoms
                    .iter()
                    .map(|a| Ok((UnitDirection::normalized(&a.direction)?, a.weight)))
                    .collect::<Result<_>>()?,
            ),
            SphericalSection::Angular { density } => {
                let d = self.model.d;
                match density {
                    AngularDensity::Uniform { value } => {
                        let v = *value;
                        SphericalMeasure::angular(d, move |_| v, &self.quadrature)
                    }
                    AngularDensity::Cosine { base, amplitude } => {
                        let (b, a) = (*base, *amplitude);
                        SphericalMeasure::angular(2, move |t| b + a * t[0].cos(), &self.quadrature)
                    }
                    AngularDensity::Tabulated(t) => {
                        let rows = self.rows(t, 2, "angular density")?;
                        let pts: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[1])).collect();
                        if pts.windows(2).any(|w| w[1].0 <= w[0].0)
                            || pts[0].0 > 0.0
                            || pts[pts.len() - 1].0 < 2.0 * PI
                        {
                            return Err(invalid("angular table must increase and cover [0, 2π]"));
                        }
                        if pts.iter().any(|p| p.1 < 0.0) {
                            return Err(invalid("angular table has negative values"));
                        }
                        SphericalMeasure::angular(2, move |t| interp(&pts, t[0]), &self.quadrature)
                    }
                }
            }
        }
    }

    pub fn radial(&self) -> Result<RadialMeasure> {
        match &self.model.radial {
            RadialSection::Power { alpha, scale } => Ok(RadialMeasure::power(1.0 + alpha, *scale)),
            RadialSection::Custom(t) => {
                let rows = self.rows(t, 2, "radial density")?;
                RadialMeasure::tabulated(rows.iter().map(|r| (r[0], r[1])).collect())
                    .map_err(|e| invalid(format!("radial density: {e}")))
            }
        }
    }

    pub fn levy_spec(&self) -> Result<LevySpec> {
        LevySpec::new(self.wiener(), self.spherical()?, RadialFamily::Identical(self.radial()?))
    }

    pub fn volatility(&self) -> Result<VolatilityFunction> {
        match &self.g {
            GSection::Power { exponent, direction } => {
                Ok(VolatilityFunction::power(*exponent, direction.clone()))
            }
            GSection::Tabulated(t) => {
                let rows = self.rows(t, self.model.d + 1, "G table")?;
                VolatilityFunction::tabulated(rows.into_iter().map(|r| (r[0], r[1..].to_vec())).collect())
                    .map_err(|e| invalid(format!("G table: {e}")))
            }
        }
    }

    pub fn original_options(&self) -> OriginalOptions {
        OriginalOptions {
            eps: self.simulation.eps,
            small_jumps: self.simulation.small_jumps,
            intensity_budget: self.simulation.intensity_budget,
        }
    }
}

fn interp(pts: &[(f64, f64)], x: f64) -> f64 {
    let i = pts.partition_point(|p| p.0 <= x).clamp(1, pts.len() - 1);
    let (x0, y0) = pts[i - 1];
    let (x1, y1) = pts[i];
    let w = ((x - x0) / (x1 - x0)).clamp(0.0, 1.0);
    y0 + w * (y1 - y0)
}

fn read_table(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut rdr = csv::Reader::from_path(path)
        .map_err(|e| invalid(format!("cannot read {}: {e}", path.display())))?;
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let row = rec
            .iter()
            .map(|f| f.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        rows.push(row);
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    const EXAMPLE: &str = r#"{
        "model": {
            "d": 2,
            "spherical": {"kind": "atoms", "atoms": [
                {"direction": [1, 0], "weight": 0.5},
                {"direction": [0, 1], "weight": 0.5}
            ]},
            "radial": {"kind": "power", "alpha": 1.5}
        },
        "G": {"kind": "power", "exponent": 0.6666666666666666, "direction": [1, 1]},
        "drift": {"a": -0.5, "b": 0.1}
    }"#;

    #[test]
    fn parses_minimal_config_with_defaults() {
        let cfg = RunConfig::from_json(EXAMPLE).unwrap();
        assert_eq!(cfg.model.d, 2);
        assert_eq!(cfg.pricing.tau_grid, vec![0.5, 1.0, 2.0]);
        let spec = cfg.levy_spec().unwrap();
        assert_eq!(spec.dim, 2);
        assert_eq!(cfg.volatility().unwrap().eval(1.0), vec![1.0, 1.0]);
    }

    #[test]
    fn rejects_bad_ranges() {
        let bad = EXAMPLE.replace("\"alpha\": 1.5", "\"alpha\": 2.5");
        assert!(matches!(RunConfig::from_json(&bad), Err(Error::InvalidConfig(_))));
        let bad = EXAMPLE.replace("\"b\": 0.1", "\"b\": -0.1");
        assert!(RunConfig::from_json(&bad).is_err());
        let bad = EXAMPLE.replace("[1, 1]", "[1, 1, 1]");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn rejects_unknown_fields() {
        let bad = EXAMPLE.replace("\"drift\"", "\"dirft\"");
        assert!(RunConfig::from_json(&bad).is_err());
    }

    #[test]
    fn tabulated_tables_need_one_source() {
        let cfg = RunConfig::from_json(EXAMPLE).unwrap();
        let t = Table::default();
        assert!(cfg.rows(&t, 2, "t").is_err());
    }

    #[test]
    fn reads_table_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("g.csv"), "x,g1,g2\n0,0,0\n1,1,2\n").unwrap();
        let text = EXAMPLE.replace(
            r#"{"kind": "power", "exponent": 0.6666666666666666, "direction": [1, 1]}"#,
            r#"{"kind": "tabulated", "file": "g.csv"}"#,
        );
        let path = dir.path().join("c.json");
        fs::write(&path, text).unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.volatility().unwrap().eval(0.5), vec![0.5, 1.0]);
    }
}
