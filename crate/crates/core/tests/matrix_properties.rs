use proptest::prelude::*;
use qsuff_core::matrix::{
    eigh, imaginary_power, mat_fun, partial_trace, real, resolvent_quadrature_check, support_projection, trace, CMat,
    IntegralForm, SUPPORT_CUTOFF,
};
use qsuff_core::random::{self, rng_from_seed};
use rand::Rng;

fn psd(n: usize, rank: usize, seed: u64) -> CMat {
    random::density_of_rank(n, rank.min(n), &mut rng_from_seed(seed))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn identity_function_reproduces_matrix(n in 1usize..=6, seed in any::<u64>()) {
        let d = psd(n, n, seed);
        let back = mat_fun(&d, real, false, 0.0).unwrap();
        prop_assert!((back - &d).norm() <= 1e-9);
    }

    #[test]
    fn imaginary_powers_form_a_group(n in 1usize..=5, rank in 1usize..=5, seed in any::<u64>(), t in -2.0f64..2.0, s in -2.0f64..2.0) {
        let d = psd(n, rank, seed);
        let lhs = imaginary_power(&d, t).unwrap() * imaginary_power(&d, s).unwrap();
        let rhs = imaginary_power(&d, t + s).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10);
    }

    #[test]
    fn partial_trace_keeps_trace_and_positivity(da in 1usize..=3, db in 1usize..=3, dc in 1usize..=3, seed in any::<u64>(), keep in 0usize..7) {
        let d = psd(da * db * dc, da * db * dc, seed);
        let keep: Vec<usize> = (0..3).filter(|k| keep & (1 << k) != 0).collect();
        let reduced = partial_trace(&d, &[da, db, dc], &keep).unwrap();
        prop_assert!((trace(&reduced).re - 1.0).abs() <= 1e-12);
        let min = eigh(&reduced).eigenvalues.last().copied().unwrap();
        prop_assert!(min >= -1e-12);
    }

    #[test]
    fn support_projection_idempotent_and_commuting(n in 1usize..=6, rank in 1usize..=6, seed in any::<u64>()) {
        let d = psd(n, rank, seed);
        let p = support_projection(&d).unwrap();
        prop_assert!((&p * &p - &p).norm() <= 1e-12);
        prop_assert!((&p * &d - &d * &p).norm() <= 1e-12);
        let expected_rank = eigh(&d).rank(SUPPORT_CUTOFF);
        prop_assert!((trace(&p).re - expected_rank as f64).abs() <= 1e-10);
    }

    #[test]
    fn quadrature_matches_spectral_calculus(n in 1usize..=5, seed in any::<u64>()) {
        // spectrum spread log-uniformly over [1e-3, 1e3]
        let mut rng = rng_from_seed(seed);
        let u = random::unitary(n, &mut rng);
        let values: Vec<f64> = (0..n).map(|_| 10f64.powf(rng.random_range(-3.0..=3.0))).collect();
        let d = &u * qsuff_core::matrix::diag(&values) * u.adjoint();
        for form in [IntegralForm::Sqrt, IntegralForm::Log] {
            let err = resolvent_quadrature_check(&d, form).unwrap();
            prop_assert!(err <= 1e-6, "{form:?}: {err:.3e}");
        }
    }
}
