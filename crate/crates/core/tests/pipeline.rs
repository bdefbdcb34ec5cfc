//! End-to-end use of the public API on small fixtures.

use nalgebra::DMatrix;
use stable_cir::laplace::c_alpha;
use stable_cir::levy_spec::{stable_spec, SphericalMeasure, UnitDirection, VolatilityFunction};
use stable_cir::pricing::{bond_price, compare_term_structures, riccati_solve, CompareSettings, RiccatiConfig};
use stable_cir::reduction::{reduce, ReduceOptions};
use stable_cir::simulate::{OriginalOptions, SmallJumps};
use stable_cir::{Error, QuadratureConfig, Verdict};

fn example1() -> (stable_cir::levy_spec::LevySpec, VolatilityFunction) {
    let lambda = SphericalMeasure::atoms(vec![(UnitDirection::axis(2, 0), 0.5), (UnitDirection::axis(2, 1), 0.5)]).unwrap();
    (stable_spec(1.5, lambda).unwrap(), VolatilityFunction::power(2.0 / 3.0, vec![1.0, 1.0]))
}

#[test]
fn reduce_then_price() {
    let cfg = QuadratureConfig::default();
    let (spec, g) = example1();
    let r = reduce(&spec, &g, -0.5, 0.1, &ReduceOptions::default(), &cfg).unwrap();
    assert!(r.report.passed(), "{}", r.report);
    assert!((r.fit.c_tilde - c_alpha(1.5).unwrap()).abs() < 1e-6);
    let ts = riccati_solve(r.model, 5.0, 500, &RiccatiConfig::default(), &cfg).unwrap();
    let p = bond_price(&ts, 1.0, 1.0).unwrap();
    assert!((p - 0.625840).abs() < 1e-5, "{p}");
}

#[test]
fn wiener_part_with_stable_jumps_is_reported() {
    let cfg = QuadratureConfig::default();
    let (spec, g) = example1();
    let spec = spec.with_wiener(DMatrix::identity(2, 2)).unwrap();
    let r = reduce(&spec, &g, -0.5, 0.1, &ReduceOptions::default(), &cfg).unwrap();
    assert_eq!(r.report.item("wiener_affinity").unwrap().verdict, Verdict::Fail);
    assert!(!r.report.passed());
}

#[test]
fn non_spanning_measure_with_nonzero_g0_is_rejected() {
    let cfg = QuadratureConfig::default();
    let lambda = SphericalMeasure::atoms(vec![(UnitDirection::axis(2, 0), 1.0)]).unwrap();
    let spec = stable_spec(1.5, lambda).unwrap();
    let g = VolatilityFunction::from_fn(2, |x| vec![1.0 + x, 0.0]);
    let err = reduce(&spec, &g, -0.5, 0.1, &ReduceOptions::default(), &cfg).unwrap_err();
    match err {
        Error::ConditionsFailed { failed } => assert!(failed.contains(&"theorem_assumptions".to_string()), "{failed:?}"),
        e => panic!("unexpected {e}"),
    }
}

#[test]
fn small_comparison_is_consistent() {
    let cfg = QuadratureConfig::default();
    let (spec, g) = example1();
    let reduced = reduce(&spec, &g, -0.5, 0.1, &ReduceOptions::default(), &cfg).unwrap().model;
    let settings = CompareSettings {
        dt: 1e-2,
        n_paths: 4000,
        seed: 3,
        original: OriginalOptions {
            eps: 0.05,
            small_jumps: SmallJumps::Gaussian,
            ..OriginalOptions::default()
        },
        scheme_tol: 5e-3,
    };
    let cmp = compare_term_structures(&g, &spec, -0.5, 0.1, &reduced, 1.0, &[0.5, 1.0], &settings, &cfg).unwrap();
    assert_eq!(cmp.rows.len(), 2);
    assert!(cmp.report.passed(), "{}", cmp.report);
}
