//! Dense reference implementations shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C;
use pertvqe::ansatz::ProductAnsatz;
use pertvqe::pauli::{Pauli, PauliString};
use pertvqe::perturbation::HamiltonianModel;

pub const I: C = C::new(0.0, 1.0);

pub fn c(re: f64) -> C {
    C::new(re, 0.0)
}

fn single(p: Pauli) -> DMatrix<C> {
    let z = c(0.0);
    let o = c(1.0);
    match p {
        Pauli::I => DMatrix::from_row_slice(2, 2, &[o, z, z, o]),
        Pauli::X => DMatrix::from_row_slice(2, 2, &[z, o, o, z]),
        Pauli::Y => DMatrix::from_row_slice(2, 2, &[z, -I, I, z]),
        Pauli::Z => DMatrix::from_row_slice(2, 2, &[o, z, z, -o]),
    }
}

/// Dense matrix of a Pauli string; basis index bit `q` is qubit `q`.
pub fn pauli_matrix(p: &PauliString) -> DMatrix<C> {
    let n = p.n_qubits();
    let mut m = DMatrix::from_element(1, 1, c(1.0));
    for q in (0..n).rev() {
        m = m.kronecker(&single(p.factor(q)));
    }
    m * I.powu(p.phase_exp() as u32)
}

/// Dense matrix from a label such as `"XYZ"` (character `q` acts on qubit `q`).
pub fn label_matrix(label: &str) -> DMatrix<C> {
    let mut m = DMatrix::from_element(1, 1, c(1.0));
    for ch in label.chars().rev() {
        let p = match ch {
            'I' => Pauli::I,
            'X' => Pauli::X,
            'Y' => Pauli::Y,
            'Z' => Pauli::Z,
            _ => panic!("bad label {label}"),
        };
        m = m.kronecker(&single(p));
    }
    m
}

pub fn h0_diag(h: &[f64]) -> Vec<f64> {
    let n = h.len();
    (0..1usize << n)
        .map(|b| (0..n).map(|q| if b >> q & 1 == 1 { h[q] } else { -h[q] }).sum())
        .collect()
}

pub fn dense_hamiltonian(model: &HamiltonianModel, j: &[C]) -> DMatrix<C> {
    let d = 1usize << model.n_qubits();
    let mut m = DMatrix::from_element(d, d, c(0.0));
    for (i, e) in h0_diag(model.h()).into_iter().enumerate() {
        m[(i, i)] = c(e);
    }
    for (cp, jv) in model.couplings().iter().zip(j) {
        m += pauli_matrix(&cp.pauli) * *jv;
    }
    m
}

pub fn real_j(model: &HamiltonianModel) -> Vec<C> {
    model.j_values().into_iter().map(c).collect()
}

/// `e^{A}` by scaling and squaring with a long Taylor series.
pub fn expm(a: &DMatrix<C>) -> DMatrix<C> {
    let norm = a.iter().map(|z| z.norm()).sum::<f64>();
    let s = (norm.max(1.0)).log2().ceil() as i32 + 2;
    let scaled = a / c(2f64.powi(s));
    let d = a.nrows();
    let mut term = DMatrix::<C>::identity(d, d);
    let mut sum = term.clone();
    for k in 1..30 {
        term = &term * &scaled / c(k as f64);
        sum += &term;
    }
    for _ in 0..s {
        sum = &sum * &sum;
    }
    sum
}

/// Ansatz state by dense matrix exponentials (complex angles allowed).
pub fn dense_prepare(a: &ProductAnsatz, theta: &[C]) -> DVector<C> {
    let d = 1usize << a.n_qubits();
    let mut v = DVector::from_element(d, c(0.0));
    v[a.start_state().bits() as usize] = c(1.0);
    for u in a.units() {
        let g = pauli_matrix(&u.pauli) * (I * u.scale * theta[u.param]);
        v = expm(&g) * v;
    }
    v
}

/// Same state via `e^{iφP} = cos φ + i sin φ P` (valid for `P² = 1`, any complex `φ`).
pub fn dense_prepare_trig(a: &ProductAnsatz, theta: &[C]) -> DVector<C> {
    let d = 1usize << a.n_qubits();
    let mut v = DVector::from_element(d, c(0.0));
    v[a.start_state().bits() as usize] = c(1.0);
    let mats: Vec<DMatrix<C>> = a.units().iter().map(|u| pauli_matrix(&u.pauli)).collect();
    for (u, m) in a.units().iter().zip(&mats) {
        let phi = theta[u.param] * u.scale;
        v = &v * phi.cos() + (m * &v) * (I * phi.sin());
    }
    v
}

/// Ground state with `⟨0|ψ⟩ = 1`, analytically continued to complex couplings,
/// by Brillouin-Wigner iteration `ψ = |0⟩ − (Q(H−E)Q)⁻¹ Q H|0⟩`.
pub fn bw_state(model: &HamiltonianModel, j: &[C]) -> DVector<C> {
    let h = dense_hamiltonian(model, j);
    let d = h.nrows();
    let mut e = h[(0, 0)];
    let mut psi = DVector::from_element(d, c(0.0));
    psi[0] = c(1.0);
    for _ in 0..200 {
        let qh0 = h.column(0).rows(1, d - 1).into_owned();
        let mut block = h.view((1, 1), (d - 1, d - 1)).into_owned();
        for i in 0..d - 1 {
            block[(i, i)] -= e;
        }
        let x = block.lu().solve(&qh0).expect("nonsingular block");
        let mut next = DVector::from_element(d, c(0.0));
        next[0] = c(1.0);
        for i in 0..d - 1 {
            next[i + 1] = -x[i];
        }
        let e_next = (h.row(0) * &next)[(0, 0)];
        let done = (e_next - e).norm() < 1e-15 * (1.0 + e.norm());
        psi = next;
        e = e_next;
        if done {
            break;
        }
    }
    psi
}

/// Taylor coefficients of a vector-valued analytic function of `dims` variables,
/// from samples on the torus `|z_i| = radius` (`points` per axis).
pub struct TorusTaylor {
    dims: usize,
    points: usize,
    radius: f64,
    samples: Vec<DVector<C>>,
}

impl TorusTaylor {
    pub fn new(dims: usize, points: usize, radius: f64, mut f: impl FnMut(&[C]) -> DVector<C>) -> Self {
        let total = points.pow(dims as u32);
        let mut samples = Vec::with_capacity(total);
        let mut z = vec![c(0.0); dims];
        for flat in 0..total {
            let mut r = flat;
            for zi in z.iter_mut() {
                let j = r % points;
                r /= points;
                *zi = C::from_polar(radius, std::f64::consts::TAU * j as f64 / points as f64);
            }
            samples.push(f(&z));
        }
        TorusTaylor {
            dims,
            points,
            radius,
            samples,
        }
    }

    /// Coefficient of `z^k` in component `comp`.
    pub fn coeff(&self, k: &[u32], comp: usize) -> C {
        assert_eq!(k.len(), self.dims);
        let mut acc = c(0.0);
        for (flat, v) in self.samples.iter().enumerate() {
            let mut r = flat;
            let mut phase = 0.0;
            for &ki in k {
                let j = r % self.points;
                r /= self.points;
                phase -= std::f64::consts::TAU * (j as f64) * ki as f64 / self.points as f64;
            }
            acc += v[comp] * C::from_polar(1.0, phase);
        }
        let order: u32 = k.iter().sum();
        acc / (self.samples.len() as f64 * self.radius.powi(order as i32))
    }
}

/// `V^{·k}|0⟩` by dense products (coupling 1 first); returns `(index, amplitude)`.
pub fn dense_vk(model: &HamiltonianModel, k: &[u32]) -> (usize, C) {
    let d = 1usize << model.n_qubits();
    let mut v = DVector::from_element(d, c(0.0));
    v[0] = c(1.0);
    for (cp, &m) in model.couplings().iter().zip(k) {
        let p = pauli_matrix(&cp.pauli);
        for _ in 0..m {
            v = &p * v;
        }
    }
    let idx = v.iter().position(|z| z.norm() > 0.5).expect("basis state");
    (idx, v[idx])
}
