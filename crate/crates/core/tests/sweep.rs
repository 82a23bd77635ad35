//! Structural invariants of the sweep on random models.

use std::sync::Arc;

use lsbd_core::chain::{build_projectors, conjugate_exact, step_count, Interval, LocalOperator, StepIndex};
use lsbd_core::lie_schwinger::{alpha_step, assemble_full, build_g, series_s, sweep, sweep_with, BlockDiagState, SeriesControls};
use lsbd_core::linalg::{self, CMat};
use lsbd_core::model::{random_model, two_site_demo, ChainModel, RandomModelSpec};
use lsbd_core::Error;
use proptest::prelude::*;

fn model(n: usize, kbar: usize, t: f64, seed: u64) -> ChainModel {
    random_model(&RandomModelSpec {
        kbar,
        ..RandomModelSpec::nearest_neighbor(n, t, seed)
    })
    .unwrap()
}

fn full_op(state: &BlockDiagState, m: &ChainModel) -> LocalOperator {
    LocalOperator::hermitian(Interval::whole(m.n()), m.site_dim(), assemble_full(state, m).unwrap()).unwrap()
}

/// `e^S K e^{−S}` on the whole chain with the step's generator.
fn conjugated(before: &BlockDiagState, after: &BlockDiagState, m: &ChainModel) -> CMat {
    let k = full_op(before, m);
    match after.last_generator() {
        None => k.into_matrix(),
        Some(s) => {
            let s = s.embed(Interval::whole(m.n())).unwrap();
            conjugate_exact(&k, &s).unwrap().into_matrix()
        }
    }
}

#[test]
fn diagonalized_potential_of_demo() {
    let model = two_site_demo(0.1);
    let state = sweep(&model, &SeriesControls::default()).unwrap();
    let v = state.potential(&Interval::new(1, 1)).unwrap();
    let expect = (1.0 - 1.01f64.sqrt()) / 0.1;
    assert!((v.matrix()[(0, 0)].re - expect).abs() < 1e-12);
    // ‖V_new‖ ≤ 2‖V‖
    assert!(v.norm().unwrap() <= 2.0);
}

#[test]
fn local_gap_examples() {
    let model = two_site_demo(0.1);
    let state = BlockDiagState::initial(&model);
    let sup = Interval::new(1, 1);
    let g = build_g(&state, &model, sup).unwrap();
    let pair = build_projectors(sup, model.omega()).unwrap();
    let gap = lsbd_core::lie_schwinger::local_gap(&g, &pair, &SeriesControls::default()).unwrap();
    assert!((gap - 1.0).abs() < 1e-14);
}

#[test]
fn gap_too_small_is_reported() {
    let model = two_site_demo(0.1);
    let ctl = SeriesControls {
        gap_min: 1.5,
        ..SeriesControls::default()
    };
    let f = sweep(&model, &ctl).unwrap_err();
    assert_eq!(f.error.kind(), "gap-too-small");
    assert_eq!(f.error.step(), Some(StepIndex::new(1, 1)));
    assert_eq!(f.failed.gap, Some(1.0));
}

#[test]
fn non_convergence_names_the_step() {
    let f = sweep(&two_site_demo(0.5), &SeriesControls::default()).unwrap_err();
    assert!(matches!(f.error.clone(), Error::Step { source, .. } if matches!(*source, Error::SeriesNotConverged { order: 20, .. })));
    assert_eq!((f.failed.k, f.failed.q), (1, 1));
    assert!(f.failed.last_term.unwrap() > 1e-14);
    assert!(f.state.diagnostics().is_empty());
}

#[test]
fn completed_sweep_refuses_another_step() {
    let model = two_site_demo(0.1);
    let ctl = SeriesControls::default();
    let state = sweep(&model, &ctl).unwrap();
    let err = alpha_step(&state, &model, &ctl).unwrap_err();
    assert_eq!(err.error, Error::SweepComplete);
}

#[test]
fn series_generator_is_bounded_by_four_v() {
    let model = model(4, 1, 0.01, 3);
    let state = sweep(&model, &SeriesControls::default()).unwrap();
    for d in state.diagnostics() {
        for (v, s) in d.v_norms.iter().zip(&d.s_norms) {
            assert!(*s <= 4.0 * v + 1e-15);
        }
    }
}

#[test]
fn already_diagonal_input_is_left_alone() {
    let model = two_site_demo(0.1);
    let state = BlockDiagState::initial(&model);
    let sup = Interval::new(1, 1);
    let g = build_g(&state, &model, sup).unwrap();
    let pair = build_projectors(sup, model.omega()).unwrap();
    let v = LocalOperator::hermitian(sup, 2, lsbd_core::model::diag(&[0.5, 0.1, -0.3, 0.2])).unwrap();
    let out = series_s(&g, &pair, &v, 0.1, &SeriesControls::default()).unwrap();
    assert_eq!(linalg::max_abs(out.generator.matrix()), 0.0);
}

#[test]
fn every_step_runs_once_in_order() {
    for n in 2..=6 {
        let model = model(n, 1, 1e-3, n as u64);
        let state = sweep(&model, &SeriesControls::default()).unwrap();
        let steps: Vec<StepIndex> = state.diagnostics().iter().map(|d| d.step()).collect();
        assert_eq!(steps.len(), step_count(n).unwrap());
        assert!(steps.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(*steps.last().unwrap(), StepIndex::terminal(n));
    }
}

#[test]
fn growth_terms_create_missing_intervals() {
    let model = model(4, 1, 0.01, 9);
    let state = sweep(&model, &SeriesControls::default()).unwrap();
    // the input has only bonds; longer intervals appear through growth terms
    assert!(state.potentials().keys().any(|sup| sup.k >= 2));
}

fn check_invariants(n: usize, kbar: usize, t: f64, seed: u64) {
    let model = model(n, kbar, t, seed);
    let ctl = SeriesControls::default();
    let mut frozen: Vec<(Interval, Arc<LocalOperator>)> = Vec::new();
    let mut steps = 0;
    let result = sweep_with(&model, &ctl, |before, after| {
        steps += 1;
        let step = after.step();
        let sup = step.interval();
        // the step interval is now block-diagonal
        if let Some(v) = after.potential(&sup) {
            let pair = build_projectors(sup, model.omega()).unwrap();
            assert!(pair.off_diagonal_norm(v.matrix()) <= ctl.tol_od);
        }
        // piecewise assembly equals direct conjugation of the previous Hamiltonian
        let direct = conjugated(before, after, &model);
        let pieces = assemble_full(after, &model).unwrap();
        assert!(linalg::max_abs(&(direct - &pieces)) <= 1e-9, "step {step}");
        // spectrum preservation
        let a = linalg::eigvalsh(&assemble_full(before, &model).unwrap());
        let b = linalg::eigvalsh(&pieces);
        assert!(a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= 1e-9));
        // potentials untouched by this step keep their identity
        for (j, op) in before.potentials() {
            let untouched = *j != sup && !j.contains(&sup);
            if untouched {
                assert!(Arc::ptr_eq(op, &after.potentials()[j]), "{j} copied at {step}");
            }
        }
        // shorter completed blocks never change again
        for (j, op) in &frozen {
            assert!(Arc::ptr_eq(op, &after.potentials()[j]), "{j} changed at {step}");
        }
        frozen = after
            .potentials()
            .iter()
            .filter(|(j, _)| j.k >= 1 && j.k < step.k && j.step() < step)
            .map(|(j, op)| (*j, op.clone()))
            .collect();
    });
    let state = result.unwrap_or_else(|f| panic!("{}", f.error));
    assert_eq!(steps, step_count(n).unwrap());
    assert!(state.is_complete());
}

#[test]
fn invariants_nearest_neighbor() {
    for (n, seed) in [(3, 1), (4, 2), (5, 3)] {
        check_invariants(n, 1, 0.01, seed);
    }
}

#[test]
fn invariants_negative_coupling_and_longer_range() {
    check_invariants(4, 2, -0.005, 4);
    check_invariants(3, 2, 0.003, 5);
}

#[test]
fn larger_site_dimension() {
    let spec = RandomModelSpec {
        m: 3,
        ..RandomModelSpec::nearest_neighbor(3, 0.01, 6)
    };
    let model = random_model(&spec).unwrap();
    let state = sweep(&model, &SeriesControls::default()).unwrap();
    let cmp = lsbd_core::oracle::compare(&state, &model).unwrap();
    assert!(cmp.spectrum_distance <= 1e-9);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn prop_invariants(n in 2usize..=4, t in -0.02f64..0.02, seed in 0u64..1000) {
        check_invariants(n, 1, t, seed);
    }

    #[test]
    fn prop_zero_coupling_is_identity(n in 2usize..=5, seed in 0u64..1000) {
        let model = model(n, 1, 0.0, seed);
        let start = BlockDiagState::initial(&model);
        let end = sweep(&model, &SeriesControls::default()).unwrap();
        for (sup, v) in start.potentials() {
            prop_assert_eq!(v.matrix(), end.potentials()[sup].matrix());
        }
        prop_assert_eq!(end.potentials().len(), start.potentials().len());
    }
}
