mod common;

use std::f64::consts::PI;

use common::{c, dense_hamiltonian, dense_prepare, dense_prepare_trig, real_j};
use num_complex::Complex64 as C;
use pertvqe::ansatz::{build_qca, AnsatzUnit, ProductAnsatz};
use pertvqe::hierarchy::estimate_thetas;
use pertvqe::pauli::{BasisState, PauliString};
use pertvqe::perturbation::{exact_ground, Coupling, HamiltonianModel};
use pertvqe::simulator::{self, StateVector};
use proptest::prelude::*;

fn p(s: &str) -> PauliString {
    s.parse().unwrap()
}

fn mixed_model() -> HamiltonianModel {
    let cp = |j: f64, s: &str| Coupling { j, pauli: p(s) };
    HamiltonianModel::new(vec![1.0, 0.6, 1.2], vec![cp(0.3, "XZY"), cp(-0.5, "IYX"), cp(0.2, "ZXI")]).unwrap()
}

fn angles(n: usize, seed: f64) -> Vec<f64> {
    (0..n).map(|i| ((i as f64 + 1.0) * seed).sin() * 2.0).collect()
}

#[test]
fn prepare_matches_dense_exponentials() {
    let mut a = build_qca(3).unwrap();
    a.push(p("i^2*ZYX"), 0.5).unwrap();
    let theta = angles(a.num_params(), 0.77);
    let ours = simulator::prepare(&a, &theta).unwrap();
    let ct: Vec<C> = theta.iter().map(|&t| c(t)).collect();
    let via_expm = dense_prepare(&a, &ct);
    let via_trig = dense_prepare_trig(&a, &ct);
    for i in 0..8 {
        assert!((ours.amplitudes()[i] - via_expm[i]).norm() < 1e-12);
        assert!((via_trig[i] - via_expm[i]).norm() < 1e-12);
    }
}

#[test]
fn energy_matches_dense_expectation() {
    for model in [HamiltonianModel::tfim(3, 1.0, 0.7).unwrap(), mixed_model()] {
        let a = build_qca(3).unwrap();
        let theta = angles(a.num_params(), 1.3);
        let psi = dense_prepare(&a, &theta.iter().map(|&t| c(t)).collect::<Vec<_>>());
        let h = dense_hamiltonian(&model, &real_j(&model));
        let want = (psi.adjoint() * &h * &psi)[(0, 0)];
        let got = simulator::ansatz_energy(&a, &theta, &model).unwrap();
        assert!((got - want.re).abs() < 1e-12 && want.im.abs() < 1e-12);
    }
}

#[test]
fn gradients_match_finite_differences() {
    let model = mixed_model();
    let mut a = build_qca(3).unwrap();
    a.push(p("XYZ"), 0.5).unwrap();
    let theta = angles(a.num_params(), 0.41);
    let shift = simulator::gradient(&a, &theta, &model).unwrap();
    let (_, adjoint) = simulator::energy_and_gradient(&a, &theta, &model).unwrap();
    let step = 1e-5;
    for i in 0..theta.len() {
        let mut tp = theta.clone();
        let mut tm = theta.clone();
        tp[i] += step;
        tm[i] -= step;
        let fd = (simulator::ansatz_energy(&a, &tp, &model).unwrap() - simulator::ansatz_energy(&a, &tm, &model).unwrap())
            / (2.0 * step);
        assert!((shift[i] - fd).abs() < 1e-6, "param {i}: shift {} fd {fd}", shift[i]);
        assert!((adjoint[i] - shift[i]).abs() < 1e-10);
    }
}

#[test]
fn single_qubit_shift_rule() {
    let model = HamiltonianModel::new(vec![1.5], vec![Coupling { j: 0.0, pauli: p("X") }]).unwrap();
    let a = ProductAnsatz::from_generators(BasisState::zero(1), &[p("Y")]).unwrap();
    for t in [0.0, 0.3, 1.0, 2.5] {
        let e = simulator::ansatz_energy(&a, &[t], &model).unwrap();
        assert!((e + 1.5 * (2.0 * t).cos()).abs() < 1e-14);
        let g = simulator::gradient(&a, &[t], &model).unwrap();
        assert!((g[0] - 3.0 * (2.0 * t).sin()).abs() < 1e-12);
    }
}

#[test]
fn pt_trick_energy() {
    let j = 0.8;
    let model = HamiltonianModel::tfim(8, 0.0, j).unwrap();
    let gens: Vec<PauliString> = (0..7)
        .map(|i| PauliString::from_factors(8, &[(i, pertvqe::pauli::Pauli::X), (i + 1, pertvqe::pauli::Pauli::Y)]).unwrap())
        .collect();
    let a = ProductAnsatz::from_generators(BasisState::zero(8), &gens).unwrap();
    let e = simulator::ansatz_energy(&a, &[PI / 4.0; 7], &model).unwrap();
    assert!((e + 7.0 * j).abs() < 1e-10, "{e}");
    let rev: Vec<PauliString> = gens.into_iter().rev().collect();
    let r = ProductAnsatz::from_generators(BasisState::zero(8), &rev).unwrap();
    let er = simulator::ansatz_energy(&r, &[PI / 4.0; 7], &model).unwrap();
    assert!(er > e + 1.0, "descending order should not reach the chain ground state: {er}");
}

fn fidelity_at_estimate(j: f64) -> f64 {
    let model = HamiltonianModel::tfim(4, 1.0, j).unwrap();
    let parent = build_qca(4).unwrap();
    let est = estimate_thetas(&model, &parent, 4).unwrap();
    let psi = simulator::prepare(&parent, &est.parent_parameters(&parent)).unwrap();
    let (_, ground) = exact_ground(&model).unwrap();
    psi.fidelity(&StateVector::from_amplitudes(ground).unwrap())
}

#[test]
fn estimated_state_converges_at_weak_coupling() {
    let f: Vec<f64> = [0.2, 0.1, 0.05].iter().map(|&j| 1.0 - fidelity_at_estimate(j)).collect();
    assert!(f[0] > f[1] && f[1] > f[2], "{f:?}");
    assert!(f[1] <= 1e-3, "{f:?}");
}

proptest! {
    #[test]
    fn rotations_preserve_norm(t in prop::collection::vec(-4.0f64..4.0, 6), scale in 0.1f64..2.0) {
        let units = vec![
            AnsatzUnit::new(p("XYZ"), 0),
            AnsatzUnit { pauli: p("YYI"), scale, param: 1 },
            AnsatzUnit::new(p("IZX"), 2),
            AnsatzUnit::new(p("XXX"), 3),
            AnsatzUnit::new(p("ZIY"), 4),
            AnsatzUnit::new(p("i^2*YII"), 5),
        ];
        let a = ProductAnsatz::new(BasisState::from_bits(3, 5), units, 6).unwrap();
        let s = simulator::prepare(&a, &t).unwrap();
        prop_assert!((s.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn expectation_matches_dense(label in "[IXYZ]{3}", t in prop::collection::vec(-3.0f64..3.0, 14)) {
        let a = build_qca(3).unwrap();
        let s = simulator::prepare(&a, &t).unwrap();
        let ps = p(&label);
        let v = nalgebra::DVector::from_vec(s.amplitudes().to_vec());
        let want = (v.adjoint() * common::label_matrix(&label) * &v)[(0, 0)].re;
        prop_assert!((s.expectation(&ps) - want).abs() < 1e-12);
    }
}
