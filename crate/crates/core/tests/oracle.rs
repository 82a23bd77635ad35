//! Exact diagonalization as ground truth, checked against closed forms and
//! against the swept Hamiltonian.

use lsbd_core::chain::{Interval, LocalOperator};
use lsbd_core::lie_schwinger::{assemble_full, sweep, BlockDiagState, SeriesControls};
use lsbd_core::linalg::{self, CMat};
use lsbd_core::model::{diag, nearest_neighbor, pauli_x, random_model, two_site_demo, ChainModel, RandomModelSpec};
use lsbd_core::oracle::{compare, degeneracy, ed_hamiltonian, ed_spectrum};
use lsbd_core::Error;

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn free_chain_spectrum_is_digit_sums() {
    let xx = linalg::kron(&pauli_x(), &pauli_x());
    let model = nearest_neighbor(3, diag(&[0.0, 1.0]), &xx, 0.0).unwrap();
    let spec = ed_spectrum(&model).unwrap();
    assert_eq!(spec.len(), 8);
    let expect = [0.0, 1.0, 1.0, 1.0, 2.0, 2.0, 2.0, 3.0];
    assert!(spec.iter().zip(expect).all(|(a, b)| close(*a, b, 1e-12)));
}

#[test]
fn two_site_closed_form() {
    let s = 1.01f64.sqrt();
    let spec = ed_spectrum(&two_site_demo(0.1)).unwrap();
    let expect = [1.0 - s, 0.9, 1.1, 1.0 + s];
    assert!(spec.iter().zip(expect).all(|(a, b)| close(*a, b, 1e-12)));
}

#[test]
fn eigenvalue_count_is_full_dimension() {
    let spec = RandomModelSpec {
        m: 3,
        ..RandomModelSpec::nearest_neighbor(4, 0.01, 2)
    };
    let model = random_model(&spec).unwrap();
    assert_eq!(ed_spectrum(&model).unwrap().len(), 81);
}

#[test]
fn compare_at_zero_coupling() {
    let model = random_model(&RandomModelSpec::nearest_neighbor(4, 0.0, 5)).unwrap();
    let state = sweep(&model, &SeriesControls::default()).unwrap();
    let cmp = compare(&state, &model).unwrap();
    assert_eq!(cmp.spectrum_distance, 0.0);
    assert!(close(cmp.gap_ed, 1.0, 1e-12) || cmp.gap_ed > 1.0);
    assert_eq!(cmp.ground_degeneracy, 1);
    assert_eq!(degeneracy(&model, 1e-9).unwrap(), 1);
}

#[test]
fn compare_two_site_demo() {
    let model = two_site_demo(0.1);
    let state = sweep(&model, &SeriesControls::default()).unwrap();
    let cmp = compare(&state, &model).unwrap();
    assert!(close(cmp.gap_ed, 1.01f64.sqrt() - 0.1, 1e-12));
    assert!(cmp.blockwise_match);
    assert!(cmp.spectrum_distance < 1e-12);
}

#[test]
fn random_models_keep_their_spectrum() {
    for seed in 0..20 {
        let model = random_model(&RandomModelSpec::nearest_neighbor(5, 1e-3, seed)).unwrap();
        let state = sweep(&model, &SeriesControls::default()).unwrap();
        let cmp = compare(&state, &model).unwrap();
        assert!(cmp.spectrum_distance <= 1e-9, "seed {seed}: {}", cmp.spectrum_distance);
        assert_eq!(cmp.ground_degeneracy, 1);
    }
}

#[test]
fn initial_state_assembles_to_the_model() {
    let model = random_model(&RandomModelSpec::nearest_neighbor(4, 0.05, 11)).unwrap();
    let state = BlockDiagState::initial(&model);
    let diff = assemble_full(&state, &model).unwrap() - ed_hamiltonian(&model).unwrap();
    assert!(linalg::max_abs(&diff) < 1e-14);
}

#[test]
fn spectrum_is_independent_of_interaction_order() {
    let model = random_model(&RandomModelSpec {
        kbar: 2,
        ..RandomModelSpec::nearest_neighbor(4, 0.02, 8)
    })
    .unwrap();
    let mut reversed: Vec<LocalOperator> = model.interactions().to_vec();
    reversed.reverse();
    let other = model.with_interactions(reversed).unwrap();
    let a = ed_spectrum(&model).unwrap();
    let b = ed_spectrum(&other).unwrap();
    assert!(a.iter().zip(&b).all(|(x, y)| close(*x, *y, 1e-12)));
}

#[test]
fn longer_range_terms_land_on_their_sites() {
    // a single σz on site 2 of a 3-site chain, written as a 2-site term on I_{1;2}
    let z1 = linalg::kron(&lsbd_core::model::pauli_z(), &CMat::identity(2, 2));
    let v = LocalOperator::hermitian(Interval::new(1, 2), 2, z1).unwrap();
    let model = ChainModel::new(3, diag(&[0.0, 1.0]), vec![v], 0.25, 1).unwrap();
    let h = ed_hamiltonian(&model).unwrap();
    // |010⟩ = index 2: on-site energy 1, σz on site 2 gives −1
    assert!(close(h[(2, 2)].re, 1.0 - 0.25, 1e-15));
    assert!(close(h[(0, 0)].re, 0.25, 1e-15));
}

#[test]
fn oracle_guard() {
    let spec = RandomModelSpec {
        m: 3,
        ..RandomModelSpec::nearest_neighbor(8, 0.0, 0)
    };
    let model = random_model(&spec).unwrap();
    assert!(matches!(ed_spectrum(&model), Err(Error::TooLarge { .. })));
}
