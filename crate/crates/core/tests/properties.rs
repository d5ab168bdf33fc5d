use proptest::prelude::*;

use heavytail_spectra::experiment::{ecdf, run_trial, EnsembleSpec};
use heavytail_spectra::limit_law::{bound_cdf_lower, bound_cdf_upper, bound_constants};
use heavytail_spectra::linear_filter::{CoefficientSequence, FilterSpec};
use heavytail_spectra::rv_noise::TailModel;
use heavytail_spectra::spectral::{build_h, hdh_matrix, spectral_norm, SymMatrix};

fn window() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-2.0..2.0f64, 1..4)
        .prop_filter("nonzero", |v| v.iter().any(|x| x.abs() > 1e-3))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn scaling_c_scales_spike_norm_exactly(alpha in 0.6..1.9f64, s in 0.25..4.0f64, seed: u64, c in window()) {
        let model = TailModel::pareto_symmetric(alpha, 1.0).unwrap();
        let theta = CoefficientSequence::spike(1.0).unwrap();
        let base = FilterSpec::new(CoefficientSequence::new(c.clone(), 0).unwrap(), theta.clone(), 0.5).unwrap();
        let scaled_c: Vec<f64> = c.iter().map(|v| v * s).collect();
        let scaled = FilterSpec::new(CoefficientSequence::new(scaled_c, 0).unwrap(), theta, 0.5).unwrap();
        let a = run_trial(&EnsembleSpec { model, filter: base, p: 6, n: 20, seed }, 1).unwrap();
        let b = run_trial(&EnsembleSpec { model, filter: scaled, p: 6, n: 20, seed }, 1).unwrap();
        prop_assert!((b.scaled_norm / a.scaled_norm - s * s).abs() <= 1e-8 * s * s);
    }

    #[test]
    fn bound_cdfs_are_ordered(theta in window(), c in window(), alpha in 0.2..3.9f64, x in 1e-3..1e3f64) {
        let spec = FilterSpec::new(
            CoefficientSequence::new(c, 0).unwrap(),
            CoefficientSequence::new(theta, -1).unwrap(),
            0.5,
        ).unwrap();
        let b = bound_constants(&spec, alpha);
        let (lo, hi) = (bound_cdf_lower(x, &b), bound_cdf_upper(x, &b));
        prop_assert!((0.0..=1.0).contains(&lo) && lo <= hi && hi <= 1.0);
    }

    #[test]
    fn ecdf_is_monotone(values in prop::collection::vec(-10.0..10.0f64, 1..50), x in -12.0..12.0f64, dx in 0.0..5.0f64) {
        let a = ecdf(&values, x).unwrap();
        prop_assert!(a <= ecdf(&values, x + dx).unwrap());
        prop_assert_eq!(ecdf(&values, -11.0).unwrap(), 0.0);
        prop_assert_eq!(ecdf(&values, 10.0).unwrap(), 1.0);
    }

    #[test]
    fn hdh_norm_below_row_sum_norm(theta in window(), d in prop::collection::vec(0.0..5.0f64, 24), p in 1usize..8) {
        let h = build_h(&CoefficientSequence::new(theta, 0).unwrap(), p).unwrap();
        let m: SymMatrix = hdh_matrix(&h, &d[..3 * p]).unwrap();
        prop_assert!(spectral_norm(&m, 1e-10).unwrap() <= m.inf_norm() * (1.0 + 1e-9) + 1e-12);
    }
}
