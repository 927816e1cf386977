//! Property tests tying the analytic forms, the engine backends, and the
//! estimator together on randomized inputs.

use fpsearch::analytic::{
    expected_counts, expected_ratio_arcsin, expected_ratio_closed, expected_ratio_discrete,
    expected_ratio_quadrature, success_probability, StopAngle, TargetFraction,
};
use fpsearch::engine::{CloneChannel, DensityMatrix2, Register, TwoDimState};
use fpsearch::estimator::{corrected_ratio_real, CorrectedRatio};
use proptest::prelude::*;

fn fraction_strategy() -> impl Strategy<Value = TargetFraction<f64>> {
    (1e-6f64..=1.0).prop_map(|p| TargetFraction::new(p).unwrap())
}

proptest! {
    #[test]
    fn success_probability_is_a_probability(
        fraction in fraction_strategy(),
        r in 0u64..500,
    ) {
        let g = success_probability(&fraction, r);
        prop_assert!((0.0..=1.0).contains(&g));
        prop_assert_eq!(success_probability(&fraction, 0), fraction.p());
    }

    #[test]
    fn expected_counts_conserve_samples(
        fraction in fraction_strategy(),
        rn in 0u64..200,
        eta in 0.01f64..=(1.0 / 3.0),
    ) {
        let (c0, c1) = expected_counts(&fraction, rn, eta);
        prop_assert!((c0 + c1 - (rn + 1) as f64).abs() <= 1e-9);
        prop_assert!(c0 >= 0.0 && c1 >= 0.0);
    }

    #[test]
    fn correcting_expected_counts_recovers_the_discrete_ratio(
        fraction in (1e-6f64..=0.999).prop_map(|p| TargetFraction::new(p).unwrap()),
        rn in 0u64..200,
        eta in 0.01f64..=(1.0 / 3.0),
    ) {
        let (c0, c1) = expected_counts(&fraction, rn, eta);
        let corrected = corrected_ratio_real(c0, c1, eta);
        let direct = expected_ratio_discrete(&fraction, rn);
        match corrected {
            CorrectedRatio::Finite(v) => {
                prop_assert!((v - direct).abs() <= 1e-12 * direct.abs().max(1.0),
                    "corrected {} vs direct {}", v, direct);
            }
            CorrectedRatio::PositiveInfinite => prop_assert!(direct.is_infinite()),
            CorrectedRatio::Indeterminate => prop_assert!(false, "expected counts are never contradictory"),
        }
    }

    #[test]
    fn closed_form_routes_agree(
        theta_frac in 0.01f64..=0.99,
        x_frac in 0.0f64..=1.0,
    ) {
        // theta in (0, pi/3], X in [theta, pi/2].
        let theta = theta_frac * std::f64::consts::FRAC_PI_3;
        let p = theta.sin().powi(2);
        let fraction = TargetFraction::new(p).unwrap();
        let x = theta + x_frac * (std::f64::consts::FRAC_PI_2 - theta);
        let stop = StopAngle::from_radians(&fraction, x).unwrap();
        let closed = expected_ratio_closed(&fraction, &stop);
        let arcsin = expected_ratio_arcsin(p, stop.probability());
        if x - theta >= 1e-9 {
            prop_assert!((closed - arcsin).abs() <= 1e-10,
                "closed {} vs arcsin {}", closed, arcsin);
        }
        prop_assert!(closed >= 0.0);
    }

    #[test]
    fn corrected_ratio_yields_exactly_one_class(
        c0 in 0u64..5000,
        c1 in 0u64..5000,
        eta in 0.01f64..=(1.0 / 3.0),
    ) {
        prop_assume!(c0 + c1 > 0);
        let r = corrected_ratio_real(c0 as f64, c1 as f64, eta);
        let classes = [
            matches!(r, CorrectedRatio::Finite(_)),
            matches!(r, CorrectedRatio::PositiveInfinite),
            matches!(r, CorrectedRatio::Indeterminate),
        ];
        prop_assert_eq!(classes.iter().filter(|&&c| c).count(), 1);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadrature_validates_closed_form_at_random_points(
        theta_frac in 0.02f64..=0.95,
        g_frac in 0.05f64..=1.0,
    ) {
        let theta = theta_frac * std::f64::consts::FRAC_PI_3;
        let p = theta.sin().powi(2);
        let fraction = TargetFraction::new(p).unwrap();
        let g = p + g_frac * (1.0 - p);
        let stop = StopAngle::from_probability(&fraction, g).unwrap();
        let closed = expected_ratio_closed(&fraction, &stop);
        let quad = expected_ratio_quadrature(&fraction, g).unwrap();
        prop_assert!((closed - quad).abs() <= 1e-6, "closed {} quad {}", closed, quad);
    }

    #[test]
    fn statevector_follows_the_rotation_formula(
        n in 2u32..=8,
        seed in 0u64..1000,
        steps in 0usize..=20,
    ) {
        let size = 1u64 << n;
        let m = 1 + seed % (size / 2);
        let targets: Vec<u64> = (0..m).collect();
        let mut reg = Register::<f64>::uniform(n, &targets).unwrap();
        let fraction = TargetFraction::<f64>::from_counts(m, size).unwrap();
        for r in 0..=steps as u64 {
            let expected = success_probability(&fraction, r);
            prop_assert!((reg.success_probability() - expected).abs() <= 1e-9);
            reg.grover_step();
        }
        prop_assert!((reg.norm_sqr() - 1.0).abs() <= 1e-10);
    }

    #[test]
    fn undephased_density_matches_the_angle_model(
        theta_frac in 0.001f64..=0.999,
        steps in 0usize..=50,
    ) {
        let theta0 = theta_frac * std::f64::consts::FRAC_PI_2;
        let mut rho = DensityMatrix2::pure(theta0);
        let mut flat = TwoDimState::from_angle(theta0);
        for _ in 0..steps {
            rho.grover_step(theta0);
            flat.grover_step(theta0);
        }
        prop_assert!((rho.target_weight() - flat.success_probability()).abs() <= 1e-12);
        prop_assert!((rho.trace() - 1.0).abs() <= 1e-12);
        prop_assert!(rho.is_positive_semidefinite(1e-12));
        prop_assert!(rho.is_hermitian(1e-12));
    }

    #[test]
    fn channel_diagonal_matches_outcome_probabilities(
        sin2 in 0.0f64..=1.0,
        eta in 0.01f64..=(1.0 / 3.0),
    ) {
        let ch = CloneChannel::new(eta).unwrap();
        let rho = ch.output_density(sin2);
        prop_assert_eq!(rho.entry(1, 1).re, ch.outcome_one_probability(sin2));
        prop_assert_eq!(rho.entry(0, 0).re, ch.outcome_zero_probability(sin2));
        prop_assert!((rho.trace() - 1.0).abs() <= 1e-15);
        prop_assert!(rho.is_positive_semidefinite(1e-12));
    }
}
