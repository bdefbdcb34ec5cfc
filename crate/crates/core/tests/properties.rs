use proptest::prelude::*;
use stable_cir::conditions::{default_balance_grid, default_eps_grid, q_ratios, radial_balance};
use stable_cir::laplace::{c_alpha, kernel_h, laplace_radial};
use stable_cir::levy_spec::{
    stable_spec, LevySpec, RadialFamily, RadialMeasure, SphericalMeasure, UnitDirection, VolatilityFunction,
};
use stable_cir::pricing::{bond_price, riccati_solve, RiccatiConfig};
use stable_cir::reduction::{reduce, ReduceOptions, ReducedModel};
use stable_cir::simulate::{simulate_reduced, TimeGrid};
use stable_cir::QuadratureConfig;

fn two_atoms(w1: f64, w2: f64) -> SphericalMeasure {
    SphericalMeasure::atoms(vec![(UnitDirection::axis(2, 0), w1), (UnitDirection::axis(2, 1), w2)]).unwrap()
}

fn log_uniform(lo: f64, hi: f64) -> impl Strategy<Value = f64> {
    (lo.log10()..hi.log10()).prop_map(|e| 10f64.powf(e))
}

proptest! {
    #[test]
    fn kernel_scaling_bounds(z in 0.0..50.0f64, t in log_uniform(1e-3, 1e3)) {
        let h = kernel_h(z);
        let ht = kernel_h(t * z);
        prop_assert!(t.powi(2).min(1.0) * h <= ht * (1.0 + 1e-12));
        prop_assert!(ht <= t.powi(2).max(1.0) * h * (1.0 + 1e-12));
    }

    #[test]
    fn kernel_is_increasing_and_convex(z in 0.0..40.0f64, dz in 1e-3..5.0f64) {
        let (a, b, c) = (kernel_h(z), kernel_h(z + dz), kernel_h(z + 2.0 * dz));
        prop_assert!(a < b);
        prop_assert!(b - a <= (c - b) * (1.0 + 1e-12));
        prop_assert!(a >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn stable_exponent_is_homogeneous(alpha in 1.05..1.95f64, b in log_uniform(1e-2, 1e2), t in log_uniform(1e-2, 1e2)) {
        let cfg = QuadratureConfig::default();
        let rho = RadialMeasure::stable(alpha);
        let j = laplace_radial(&rho, b, &cfg).unwrap();
        let jt = laplace_radial(&rho, t * b, &cfg).unwrap();
        prop_assert!((jt / (t.powf(alpha) * j) - 1.0).abs() < 1e-7);
        prop_assert!((j / (c_alpha(alpha).unwrap() * b.powf(alpha)) - 1.0).abs() < 1e-7);
    }

    #[test]
    fn laplace_exponent_monotone_convex(r0 in 0.05..1.0f64, r1 in 1.5..5.0f64, w in 0.1..3.0f64, b in log_uniform(1e-2, 10.0)) {
        let cfg = QuadratureConfig::default();
        let rho = RadialMeasure::tabulated(vec![(r0, w), (1.0, 0.5 * w), (r1, 0.0)]).unwrap();
        let db = 0.1 * b;
        let j: Vec<f64> = (0..3).map(|k| laplace_radial(&rho, b + k as f64 * db, &cfg).unwrap()).collect();
        prop_assert!(j[0] < j[1] && j[1] < j[2]);
        prop_assert!(j[1] - j[0] <= (j[2] - j[1]) * (1.0 + 1e-8));
    }

    #[test]
    fn q_ratios_of_a_measure_with_itself_are_one(p in 2.1..2.9f64, s in 0.1..10.0f64) {
        let cfg = QuadratureConfig::default();
        let rho = RadialMeasure::power(p, s);
        let q = q_ratios(&rho, &rho, &default_eps_grid(), &cfg).unwrap();
        prop_assert!((q.q0 - 1.0).abs() < 1e-12);
        prop_assert!((q.q_inf - 1.0).abs() < 1e-12);
    }

    #[test]
    fn proportional_family_balance_is_the_ratio(k in 1.0..20.0f64, alpha in 1.1..1.9f64) {
        let cfg = QuadratureConfig::default();
        let base = RadialMeasure::stable(alpha);
        let spec = LevySpec::jump_only(two_atoms(1.0, 1.0), RadialFamily::PerAtom(vec![base.clone(), base.scaled(k)])).unwrap();
        let bal = radial_balance(&spec, &default_balance_grid(), None, &cfg).unwrap();
        prop_assert!((bal.k_hat / k - 1.0).abs() < 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    /// Rescaling λ by s multiplies `C^α` by s and leaves α unchanged.
    #[test]
    fn reduction_scales_with_spherical_mass(s in 0.1..10.0f64, alpha in 1.2..1.8f64) {
        let cfg = QuadratureConfig::default();
        let opts = ReduceOptions::default();
        let g = VolatilityFunction::power(1.0 / alpha, vec![1.0, 1.0]);
        let base = reduce(&stable_spec(alpha, two_atoms(0.5, 0.5)).unwrap(), &g, -0.3, 0.2, &opts, &cfg).unwrap();
        let scaled = reduce(&stable_spec(alpha, two_atoms(0.5 * s, 0.5 * s)).unwrap(), &g, -0.3, 0.2, &opts, &cfg).unwrap();
        prop_assert!((scaled.model.alpha - base.model.alpha).abs() < 1e-8);
        let ratio = (scaled.model.c / base.model.c).powf(base.model.alpha);
        prop_assert!((ratio / s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn reduced_paths_stay_nonnegative(a in -2.0..0.5f64, b in 0.0..0.5f64, c in 0.1..2.0f64, alpha in 1.1..1.9f64, seed in 0u64..1000) {
        let model = ReducedModel::new(a, b, c, alpha).unwrap();
        let ens = simulate_reduced(&model, 0.2, TimeGrid::new(1.0, 200).unwrap(), 64, seed).unwrap();
        prop_assert!(ens.min_value() >= 0.0);
    }

    #[test]
    fn bond_prices_are_discount_factors(a in -1.0..0.5f64, b in 0.0..0.5f64, c in 0.1..2.0f64, alpha in 1.1..1.9f64, x in 0.0..3.0f64) {
        let cfg = QuadratureConfig::default();
        let model = ReducedModel::new(a, b, c, alpha).unwrap();
        let ts = riccati_solve(model, 3.0, 60, &RiccatiConfig::default(), &cfg).unwrap();
        let mut last = 1.0;
        for k in 1..=6 {
            let p = bond_price(&ts, x, 0.5 * k as f64).unwrap();
            prop_assert!(p > 0.0 && p <= 1.0);
            prop_assert!(p <= last * (1.0 + 1e-12));
            last = p;
        }
        prop_assert!(ts.b.windows(2).all(|w| w[1] >= w[0] - 1e-12));
    }
}
