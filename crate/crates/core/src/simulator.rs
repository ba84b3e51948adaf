//! Dense statevector simulation of product ansatzes.

use std::f64::consts::FRAC_PI_4;

use num_complex::Complex64;

use crate::ansatz::ProductAnsatz;
use crate::error::{Error, Result};
use crate::pauli::{BasisState, PauliString};
use crate::perturbation::{HamiltonianModel, I_POW};

pub const MAX_SIM_QUBITS: usize = 14;

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    pub fn basis(s: BasisState) -> Result<Self> {
        let n = s.n_qubits();
        if n == 0 || n > MAX_SIM_QUBITS {
            return Err(Error::TooLarge {
                n,
                cap: MAX_SIM_QUBITS,
            });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n];
        amps[s.index()] = Complex64::new(1.0, 0.0);
        Ok(StateVector { n, amps })
    }

    /// Wraps raw amplitudes; the caller is responsible for normalisation.
    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::InvalidArgument(format!(
                "amplitude count {dim} is not a power of two"
            )));
        }
        let n = dim.trailing_zeros() as usize;
        if n > MAX_SIM_QUBITS {
            return Err(Error::TooLarge {
                n,
                cap: MAX_SIM_QUBITS,
            });
        }
        Ok(StateVector { n, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn inner(&self, other: &StateVector) -> Complex64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn fidelity(&self, other: &StateVector) -> f64 {
        self.inner(other).norm_sqr()
    }

    fn check(&self, p: &PauliString) -> Result<()> {
        if p.n_qubits() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: p.n_qubits(),
            });
        }
        Ok(())
    }

    /// `P|ψ⟩`.
    pub fn apply_pauli(&self, p: &PauliString) -> Result<StateVector> {
        self.check(p)?;
        let mut out = vec![Complex64::new(0.0, 0.0); self.amps.len()];
        pauli_into(p, &self.amps, &mut out);
        Ok(StateVector { n: self.n, amps: out })
    }

    /// `e^{i c θ P}|ψ⟩` in place.
    pub fn apply_rotation(&mut self, p: &PauliString, scale: f64, theta: f64) -> Result<()> {
        self.check(p)?;
        if !p.is_hermitian() {
            return Err(Error::InvalidArgument(format!("generator {p} is not Hermitian")));
        }
        rotate(p, scale * theta, &mut self.amps);
        Ok(())
    }

    /// `⟨ψ|P|ψ⟩` (real for Hermitian `P`).
    pub fn expectation(&self, p: &PauliString) -> f64 {
        expectation(p, &self.amps)
    }
}

fn pauli_into(p: &PauliString, psi: &[Complex64], out: &mut [Complex64]) {
    let x = p.x_mask() as usize;
    for (b, &a) in psi.iter().enumerate() {
        out[b ^ x] = a * I_POW[p.phase_on(b as u64) as usize];
    }
}

fn rotate(p: &PauliString, phi: f64, amps: &mut [Complex64]) {
    if phi == 0.0 {
        return;
    }
    let (s, c) = phi.sin_cos();
    let is = Complex64::new(0.0, s);
    let x = p.x_mask() as usize;
    if x == 0 {
        for (b, a) in amps.iter_mut().enumerate() {
            let ph = I_POW[p.phase_on(b as u64) as usize];
            *a *= c + is * ph;
        }
        return;
    }
    for b in 0..amps.len() {
        let t = b ^ x;
        if t < b {
            continue;
        }
        let (ab, at) = (amps[b], amps[t]);
        let pb = I_POW[p.phase_on(b as u64) as usize];
        let pt = I_POW[p.phase_on(t as u64) as usize];
        amps[t] = at * c + is * pb * ab;
        amps[b] = ab * c + is * pt * at;
    }
}

fn expectation(p: &PauliString, psi: &[Complex64]) -> f64 {
    let x = p.x_mask() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, &a) in psi.iter().enumerate() {
        acc += psi[b ^ x].conj() * I_POW[p.phase_on(b as u64) as usize] * a;
    }
    acc.re
}

/// `⟨l| i P |r⟩`.
fn bracket_i(p: &PauliString, l: &[Complex64], r: &[Complex64]) -> Complex64 {
    let x = p.x_mask() as usize;
    let mut acc = Complex64::new(0.0, 0.0);
    for (b, &a) in r.iter().enumerate() {
        acc += l[b ^ x].conj() * I_POW[(p.phase_on(b as u64) as usize + 1) % 4] * a;
    }
    acc
}

fn check_params(a: &ProductAnsatz, theta: &[f64]) -> Result<()> {
    if theta.len() != a.num_params() {
        return Err(Error::DimensionMismatch {
            expected: a.num_params(),
            found: theta.len(),
        });
    }
    Ok(())
}

/// Applies every unit in circuit order; unit `shift.0` gets an extra angle `shift.1`.
fn prepare_shifted(a: &ProductAnsatz, theta: &[f64], shift: Option<(usize, f64)>) -> Result<StateVector> {
    check_params(a, theta)?;
    let mut psi = StateVector::basis(a.start_state())?;
    for (i, u) in a.units().iter().enumerate() {
        let mut t = theta[u.param];
        if let Some((j, d)) = shift {
            if i == j {
                t += d;
            }
        }
        rotate(&u.pauli, u.scale * t, &mut psi.amps);
    }
    Ok(psi)
}

/// `U(θ)|start⟩`.
pub fn prepare(a: &ProductAnsatz, theta: &[f64]) -> Result<StateVector> {
    prepare_shifted(a, theta, None)
}

fn check_model(state: &StateVector, model: &HamiltonianModel) -> Result<()> {
    if model.n_qubits() != state.n {
        return Err(Error::DimensionMismatch {
            expected: state.n,
            found: model.n_qubits(),
        });
    }
    Ok(())
}

/// `⟨ψ|H|ψ⟩` from per-term Pauli expectations.
pub fn energy(state: &StateVector, model: &HamiltonianModel) -> Result<f64> {
    check_model(state, model)?;
    let mut e = 0.0;
    for (b, a) in state.amps.iter().enumerate() {
        e += a.norm_sqr() * model.diagonal(b as u64);
    }
    for c in model.couplings() {
        e += c.j * expectation(&c.pauli, &state.amps);
    }
    Ok(e)
}

pub fn ansatz_energy(a: &ProductAnsatz, theta: &[f64], model: &HamiltonianModel) -> Result<f64> {
    energy(&prepare(a, theta)?, model)
}

/// Parameter-shift gradient, unit by unit.
///
/// For `e^{icθT}` the energy is a sinusoid of period `π/c` in each unit's angle, so
/// `∂E = c·[E(+π/4c) − E(−π/4c)]` is exact; with `c = 1` this is the plain ±π/4 rule.
pub fn gradient(a: &ProductAnsatz, theta: &[f64], model: &HamiltonianModel) -> Result<Vec<f64>> {
    check_params(a, theta)?;
    let mut g = vec![0.0; a.num_params()];
    for (i, u) in a.units().iter().enumerate() {
        if u.scale == 0.0 {
            continue;
        }
        let d = FRAC_PI_4 / u.scale;
        let plus = energy(&prepare_shifted(a, theta, Some((i, d)))?, model)?;
        let minus = energy(&prepare_shifted(a, theta, Some((i, -d)))?, model)?;
        g[u.param] += u.scale * (plus - minus);
    }
    Ok(g)
}

/// Energy and exact gradient in two sweeps over the circuit (reverse mode).
pub fn energy_and_gradient(
    a: &ProductAnsatz,
    theta: &[f64],
    model: &HamiltonianModel,
) -> Result<(f64, Vec<f64>)> {
    let psi = prepare(a, theta)?;
    check_model(&psi, model)?;
    let mut phi = psi.amps;
    let mut lam = vec![Complex64::new(0.0, 0.0); phi.len()];
    model.apply(&phi, &mut lam);
    let e: f64 = phi.iter().zip(&lam).map(|(p, l)| (p.conj() * l).re).sum();
    let mut g = vec![0.0; a.num_params()];
    for u in a.units().iter().rev() {
        let t = u.scale * theta[u.param];
        g[u.param] += 2.0 * u.scale * bracket_i(&u.pauli, &lam, &phi).re;
        rotate(&u.pauli, -t, &mut phi);
        rotate(&u.pauli, -t, &mut lam);
    }
    Ok((e, g))
}

/// `∂|ψ⟩/∂θ_n` for every parameter.
pub fn tangents(a: &ProductAnsatz, theta: &[f64]) -> Result<Vec<StateVector>> {
    check_params(a, theta)?;
    let start = StateVector::basis(a.start_state())?;
    let dim = start.amps.len();
    let mut out = vec![
        StateVector {
            n: start.n,
            amps: vec![Complex64::new(0.0, 0.0); dim]
        };
        a.num_params()
    ];
    for (i, u) in a.units().iter().enumerate() {
        let mut psi = start.clone();
        for v in &a.units()[..=i] {
            rotate(&v.pauli, v.scale * theta[v.param], &mut psi.amps);
        }
        let mut d = vec![Complex64::new(0.0, 0.0); dim];
        pauli_into(&u.pauli, &psi.amps, &mut d);
        let f = Complex64::new(0.0, u.scale);
        d.iter_mut().for_each(|z| *z *= f);
        for v in &a.units()[i + 1..] {
            rotate(&v.pauli, v.scale * theta[v.param], &mut d);
        }
        for (o, z) in out[u.param].amps.iter_mut().zip(&d) {
            *o += z;
        }
    }
    Ok(out)
}

/// `⟨t|ψ(θ)⟩` and `⟨t|∂_nψ(θ)⟩` for every parameter (reverse mode).
pub fn overlap_gradient(
    a: &ProductAnsatz,
    theta: &[f64],
    target: &StateVector,
) -> Result<(Complex64, Vec<Complex64>)> {
    let psi = prepare(a, theta)?;
    let ov = target.inner(&psi);
    let mut phi = psi.amps;
    let mut lam = target.amps.clone();
    let mut g = vec![Complex64::new(0.0, 0.0); a.num_params()];
    for u in a.units().iter().rev() {
        let t = u.scale * theta[u.param];
        g[u.param] += bracket_i(&u.pauli, &lam, &phi) * u.scale;
        rotate(&u.pauli, -t, &mut phi);
        rotate(&u.pauli, -t, &mut lam);
    }
    Ok((ov, g))
}
