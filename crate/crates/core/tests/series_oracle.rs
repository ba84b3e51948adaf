//! Series coefficients against Cauchy-integral Taylor coefficients of the exact
//! (analytically continued) ground state.

mod common;

use common::{bw_state, dense_vk, TorusTaylor};
use nalgebra::DVector;
use num_complex::Complex64 as C;
use pertvqe::checks::residual_slope;
use pertvqe::pauli::{MultiIndex, PauliString};
use pertvqe::perturbation::{multi_indices_up_to, series_residual, Coupling, HamiltonianModel, PerturbationSeries};

fn oracle(model: &HamiltonianModel, normalized: bool) -> TorusTaylor {
    TorusTaylor::new(model.n_couplings(), 16, 0.25, |j| {
        let psi = bw_state(model, j);
        if !normalized {
            return psi;
        }
        let conj_j: Vec<C> = j.iter().map(|z| z.conj()).collect();
        let mirror = bw_state(model, &conj_j);
        let norm: C = psi.iter().zip(mirror.iter()).map(|(a, b)| a * b.conj()).sum();
        let inv = norm.sqrt().inv();
        DVector::from_iterator(psi.len(), psi.iter().map(|z| z * inv))
    })
}

fn compare(model: &HamiltonianModel, max_order: u32, normalized: bool, tol: f64) {
    let taylor = oracle(model, normalized);
    let mut series = PerturbationSeries::new(model);
    let mut checked = 0;
    for k in multi_indices_up_to(model.n_couplings(), max_order) {
        let (s, amp) = dense_vk(model, k.counts());
        let want = taylor.coeff(k.counts(), s) / amp;
        assert!(want.im.abs() < tol, "k = {:?}: imaginary part {}", k.counts(), want.im);
        let got = if normalized {
            series.normalized_c(&k).unwrap()
        } else {
            series.tilde_c(&k).unwrap()
        };
        assert!(
            (got - want.re).abs() < tol,
            "k = {:?}: series {got}, oracle {}",
            k.counts(),
            want.re
        );
        checked += 1;
    }
    assert!(checked > 0);
}

fn random_model() -> HamiltonianModel {
    let c = |j: f64, s: &str| Coupling {
        j,
        pauli: s.parse::<PauliString>().unwrap(),
    };
    HamiltonianModel::new(vec![1.0, 0.7, 1.3], vec![c(0.4, "XZY"), c(-0.2, "IYX"), c(0.3, "YIX")]).unwrap()
}

#[test]
fn tfim4_intermediate_normalized() {
    compare(&HamiltonianModel::tfim(4, 1.0, 1.0).unwrap(), 5, false, 1e-10);
}

#[test]
fn tfim4_normalized() {
    compare(&HamiltonianModel::tfim(4, 1.0, 1.0).unwrap(), 5, true, 1e-10);
}

#[test]
fn mixed_model_both_normalizations() {
    let m = random_model();
    compare(&m, 4, false, 1e-10);
    compare(&m, 4, true, 1e-10);
}

#[test]
fn coefficient_is_off_target_free() {
    // Monomial k only populates the basis state V^{·k}|0⟩ reaches.
    let m = HamiltonianModel::tfim(3, 1.0, 1.0).unwrap();
    let taylor = oracle(&m, false);
    let k = [1u32, 1];
    let (s, _) = dense_vk(&m, &k);
    for comp in 0..8 {
        if comp != s {
            assert!(taylor.coeff(&k, comp).norm() < 1e-11);
        }
    }
}

#[test]
fn residual_slopes_follow_truncation_order() {
    let m = HamiltonianModel::tfim(4, 1.0, 1.0).unwrap();
    let s4 = residual_slope(&m, 4, 0.02, 0.1, 7).unwrap();
    assert!(s4 >= 9.0, "{s4}");
    let s1 = residual_slope(&m, 1, 0.02, 0.1, 7).unwrap();
    assert!((s1 - 4.0).abs() < 0.5, "{s1}");
    assert!(series_residual(&m, 4, 0.05).unwrap() < series_residual(&m, 2, 0.05).unwrap());
}

#[test]
fn zero_index_is_one() {
    let m = random_model();
    let mut s = PerturbationSeries::new(&m);
    assert_eq!(s.tilde_c(&MultiIndex::zero(3)).unwrap(), 1.0);
}
