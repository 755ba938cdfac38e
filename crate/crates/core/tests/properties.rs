use cloning_core::analytic::{alpha_critical, fidelity_bh, fidelity_global, fidelity_locc, SchmidtAlpha};
use cloning_core::linalg::{
    hermitian_eigvals, partial_trace, partial_transpose, permute_subsystems, random_density,
    ComplexMatrix, SubsystemLayout,
};
use cloning_core::protocol::build_kraus;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn density(seed: u64, dim: usize) -> ComplexMatrix {
    random_density(&mut ChaCha8Rng::seed_from_u64(seed), dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn partial_trace_of_product(s1 in any::<u64>(), s2 in any::<u64>()) {
        let (a, b) = (density(s1, 2), density(s2, 4));
        let layout = SubsystemLayout::qubits(&["x", "y", "z"]).unwrap();
        let r = partial_trace(&a.kron(&b), &layout, &["y", "z"]).unwrap();
        prop_assert!(r.frobenius_distance(&a).unwrap() < 1e-12);
    }

    #[test]
    fn partial_transpose_keeps_norm_and_trace(seed in any::<u64>()) {
        let rho = density(seed, 8);
        let layout = SubsystemLayout::qubits(&["x", "y", "z"]).unwrap();
        let pt = partial_transpose(&rho, &layout, &["y"]).unwrap();
        prop_assert!((pt.frobenius_norm() - rho.frobenius_norm()).abs() < 1e-12);
        prop_assert!((pt.trace() - rho.trace()).norm() < 1e-12);
    }

    #[test]
    fn permutation_keeps_spectrum(seed in any::<u64>()) {
        let rho = density(seed, 8);
        let layout = SubsystemLayout::qubits(&["x", "y", "z"]).unwrap();
        let p = permute_subsystems(&rho, &layout, &["z", "x", "y"]).unwrap();
        let (e1, e2) = (hermitian_eigvals(&rho).unwrap(), hermitian_eigvals(&p).unwrap());
        for (x, y) in e1.iter().zip(&e2) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn fidelity_ordering(x in 0.0..=std::f64::consts::FRAC_1_SQRT_2) {
        let a = SchmidtAlpha::new(x).unwrap();
        prop_assert!(fidelity_global(a) >= fidelity_locc(a) - 1e-12);
        prop_assert!(fidelity_locc(a) >= fidelity_bh(a) - 1e-12);
        if x <= alpha_critical() {
            prop_assert_eq!(fidelity_locc(a), fidelity_bh(a));
        }
    }

    #[test]
    fn kraus_channel_is_trace_preserving(x in 0.0..=std::f64::consts::FRAC_1_SQRT_2, seed in any::<u64>()) {
        let ch = build_kraus(SchmidtAlpha::new(x).unwrap()).unwrap().channel();
        let out = ch.apply(&density(seed, 4)).unwrap();
        prop_assert!((out.trace().re - 1.0).abs() < 1e-12);
    }
}
