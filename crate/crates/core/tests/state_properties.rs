//! Property and oracle checks for the two-photon state algebra.

use std::sync::Arc;

use ndarray::Array2;
use num_complex::Complex64;
use proptest::prelude::*;

use biphoton_core::circuit::{compile_unitary, CircuitGraph, SplitterConvention};
use biphoton_core::modes::{Mode, ModeRegistry};
use biphoton_core::oracle::{random_state, random_unitary, CreationPolynomial};
use biphoton_core::state::TwoPhotonState;

fn registry(n: usize) -> Arc<ModeRegistry> {
    ModeRegistry::new(
        (0..n)
            .map(|i| Mode::on_chip(format!("m{i}"), 193.1))
            .collect(),
    )
    .unwrap()
}

#[test]
fn symmetry_is_exact_under_transformations() {
    for seed in 0..20 {
        let reg = registry(6);
        let state = random_state(Arc::clone(&reg), seed);
        let u = random_unitary(6, seed + 1000);
        let out = state.apply_unitary(&u).unwrap();
        let a = out.amplitudes();
        for j in 0..6 {
            for k in 0..6 {
                assert_eq!(a[(j, k)], a[(k, j)], "A must equal its transpose exactly");
            }
        }
    }
}

#[test]
fn norm_preserved_over_200_haar_unitaries() {
    for m in 2..=8 {
        for rep in 0..200 / 7 + 1 {
            let seed = (m * 1000 + rep) as u64;
            let reg = registry(m);
            let state = random_state(Arc::clone(&reg), seed);
            let u = random_unitary(m, seed ^ 0xD00D);
            let out = state.apply_unitary(&u).unwrap();
            assert!(
                (out.norm() - 1.0).abs() <= 1e-12,
                "m={m} rep={rep}: norm drift {}",
                (out.norm() - 1.0).abs()
            );
        }
    }
}

proptest! {
    #[test]
    fn probability_completeness(seed in 0u64..500, m in 2usize..8) {
        let reg = registry(m);
        let state = random_state(reg, seed);
        let mut total = 0.0;
        for j in 0..m {
            total += state.prob_bunched(j).unwrap();
            for k in (j + 1)..m {
                total += state.prob_coincidence(j, k).unwrap();
            }
        }
        prop_assert!((total - 1.0).abs() <= 1e-12, "total probability {total}");
    }

    #[test]
    fn fidelity_is_symmetric_and_bounded(seed_a in 0u64..200, seed_b in 0u64..200) {
        let reg = registry(4);
        let a = random_state(Arc::clone(&reg), seed_a);
        let b = random_state(reg, seed_b);
        let fab = a.fidelity(&b).unwrap();
        let fba = b.fidelity(&a).unwrap();
        prop_assert!((fab - fba).abs() < 1e-12);
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&fab));
    }
}

#[test]
fn compiled_circuits_match_symbolic_operator_expansion() {
    // The matrix route composes all stages into one unitary; the oracle
    // substitutes component by component into the creation polynomial.
    for trial in 0..100u64 {
        let n_components = 1 + (trial % 6) as usize;
        let graph = biphoton_core::oracle::random_circuit(
            registry(4),
            trial * 7 + 1,
            n_components,
            SplitterConvention::Symmetric,
        );
        let state = random_state(Arc::clone(graph.registry()), trial ^ 0xABCD);

        let composed = compile_unitary(&graph).unwrap();
        let via_matrix = state.apply_unitary(&composed).unwrap();

        let mut poly = CreationPolynomial::from_state(&state);
        for stage in graph.stages() {
            for component in stage {
                let single = CircuitGraph::new(
                    Arc::clone(graph.registry()),
                    vec![vec![component.clone()]],
                    graph.convention(),
                )
                .unwrap();
                poly = poly.substitute(&compile_unitary(&single).unwrap());
            }
        }
        let dev = poly.max_amplitude_deviation(&via_matrix);
        assert!(dev <= 1e-12, "trial {trial}: amplitude deviation {dev}");
    }
}

#[test]
fn restrict_keeps_amplitudes_and_rejects_leakage() {
    let reg = registry(4);
    let sub = registry(2);
    let state = TwoPhotonState::one_in_each(Arc::clone(&reg), "m0", "m1").unwrap();
    let restricted = state.restrict(&[0, 1], Arc::clone(&sub)).unwrap();
    assert!((restricted.prob_coincidence(0, 1).unwrap() - 1.0).abs() < 1e-12);

    let leaking = TwoPhotonState::one_in_each(reg, "m0", "m2").unwrap();
    assert!(leaking.restrict(&[0, 1], sub).is_err());
}

#[test]
fn unitarity_tolerance_boundary() {
    // A matrix just past the tolerance is rejected, the identity passes.
    let reg = registry(3);
    let state = random_state(Arc::clone(&reg), 3);
    let mut nearly = Array2::from_diag_elem(3, Complex64::new(1.0, 0.0));
    nearly[(0, 0)] = Complex64::new(1.0 + 1e-7, 0.0);
    assert!(state.apply_unitary(&nearly).is_err());
}
