//! Multivariate Rayleigh-Schrödinger series of the ground state around `|0…0⟩`.
//!
//! The model is `H = -Σ_n h_n Z_n + Σ_β J_β V_β`. Coefficients `C̃_k` expand the
//! intermediate-normalised ground state as `Σ_k J^{·k} C̃_k V^{·k}|0⟩`.

use std::collections::{BTreeMap, HashMap};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{unperturbed_energy, BasisState, MultiIndex, Pauli, PauliString};

/// Dense diagonalisation cap (qubits).
pub const EXACT_MAX_QUBITS: usize = 12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coupling {
    pub j: f64,
    pub pauli: PauliString,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawModel")]
pub struct HamiltonianModel {
    h: Vec<f64>,
    couplings: Vec<Coupling>,
}

#[derive(Deserialize)]
struct RawModel {
    h: Vec<f64>,
    couplings: Vec<Coupling>,
}

impl TryFrom<RawModel> for HamiltonianModel {
    type Error = Error;

    fn try_from(r: RawModel) -> Result<Self> {
        HamiltonianModel::new(r.h, r.couplings)
    }
}

impl HamiltonianModel {
    pub fn new(h: Vec<f64>, couplings: Vec<Coupling>) -> Result<Self> {
        let n = h.len();
        if n == 0 || n > crate::pauli::MAX_QUBITS {
            return Err(Error::RegisterSize {
                n,
                max: crate::pauli::MAX_QUBITS,
            });
        }
        if h.iter().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("field vector"));
        }
        for c in &couplings {
            if c.pauli.n_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: c.pauli.n_qubits(),
                });
            }
            if !c.pauli.is_hermitian() {
                return Err(Error::Model(format!("coupling {} is not Hermitian", c.pauli)));
            }
            if c.pauli.is_identity() {
                return Err(Error::Model("identity coupling".into()));
            }
            if !c.j.is_finite() {
                return Err(Error::NonFinite("coupling strength"));
            }
        }
        Ok(HamiltonianModel { h, couplings })
    }

    /// Open transverse-field Ising chain `-h Σ Z_i + J Σ X_i X_{i+1}`.
    pub fn tfim(n: usize, h: f64, j: f64) -> Result<Self> {
        let mut couplings = Vec::new();
        for i in 0..n.saturating_sub(1) {
            couplings.push(Coupling {
                j,
                pauli: PauliString::from_factors(n, &[(i, Pauli::X), (i + 1, Pauli::X)])?,
            });
        }
        HamiltonianModel::new(vec![h; n], couplings)
    }

    pub fn n_qubits(&self) -> usize {
        self.h.len()
    }

    pub fn h(&self) -> &[f64] {
        &self.h
    }

    pub fn couplings(&self) -> &[Coupling] {
        &self.couplings
    }

    pub fn n_couplings(&self) -> usize {
        self.couplings.len()
    }

    pub fn ops(&self) -> Vec<PauliString> {
        self.couplings.iter().map(|c| c.pauli).collect()
    }

    pub fn j_values(&self) -> Vec<f64> {
        self.couplings.iter().map(|c| c.j).collect()
    }

    /// Same operators, every `J_β` multiplied by `scale`.
    /// Two non-interacting systems side by side; `other` occupies the upper qubits.
    pub fn direct_sum(&self, other: &HamiltonianModel) -> Result<Self> {
        let n = self.n_qubits();
        let total = n + other.n_qubits();
        let mut h = self.h.clone();
        h.extend_from_slice(&other.h);
        let mut couplings = Vec::with_capacity(self.couplings.len() + other.couplings.len());
        for c in &self.couplings {
            let p = PauliString::from_masks(total, c.pauli.x_mask(), c.pauli.z_mask(), c.pauli.phase_exp())?;
            couplings.push(Coupling { j: c.j, pauli: p });
        }
        for c in &other.couplings {
            let p = PauliString::from_masks(
                total,
                c.pauli.x_mask() << n,
                c.pauli.z_mask() << n,
                c.pauli.phase_exp(),
            )?;
            couplings.push(Coupling { j: c.j, pauli: p });
        }
        HamiltonianModel::new(h, couplings)
    }

    pub fn scaled(&self, scale: f64) -> Self {
        HamiltonianModel {
            h: self.h.clone(),
            couplings: self
                .couplings
                .iter()
                .map(|c| Coupling {
                    j: c.j * scale,
                    pauli: c.pauli,
                })
                .collect(),
        }
    }

    pub fn with_couplings(&self, j: &[f64]) -> Result<Self> {
        if j.len() != self.couplings.len() {
            return Err(Error::DimensionMismatch {
                expected: self.couplings.len(),
                found: j.len(),
            });
        }
        Ok(HamiltonianModel {
            h: self.h.clone(),
            couplings: self
                .couplings
                .iter()
                .zip(j)
                .map(|(c, &jb)| Coupling { j: jb, pauli: c.pauli })
                .collect(),
        })
    }

    /// `⟨b|H_0|b⟩` for a raw basis index.
    pub(crate) fn diagonal(&self, b: u64) -> f64 {
        self.h
            .iter()
            .enumerate()
            .map(|(q, &hn)| if (b >> q) & 1 == 1 { hn } else { -hn })
            .sum()
    }

    /// `out = H ψ` on a dense amplitude vector.
    pub fn apply(&self, psi: &[Complex64], out: &mut [Complex64]) {
        for (b, o) in out.iter_mut().enumerate() {
            *o = psi[b] * self.diagonal(b as u64);
        }
        for c in &self.couplings {
            let x = c.pauli.x_mask();
            for (b, &amp) in psi.iter().enumerate() {
                let ph = c.pauli.phase_on(b as u64);
                out[b ^ x as usize] += amp * c.j * I_POW[ph as usize];
            }
        }
    }

    /// Dense matrix of `H`; capped at [`EXACT_MAX_QUBITS`].
    pub fn dense(&self) -> Result<DMatrix<Complex64>> {
        let n = self.n_qubits();
        if n > EXACT_MAX_QUBITS {
            return Err(Error::TooLarge {
                n,
                cap: EXACT_MAX_QUBITS,
            });
        }
        let dim = 1usize << n;
        let mut m = DMatrix::<Complex64>::zeros(dim, dim);
        for b in 0..dim {
            m[(b, b)] += Complex64::new(self.diagonal(b as u64), 0.0);
            for c in &self.couplings {
                let (t, ph) = c.pauli.apply_to_basis(BasisState::from_bits(n, b as u64));
                m[(t.index(), b)] += I_POW[ph as usize] * c.j;
            }
        }
        Ok(m)
    }
}

/// `i^0 … i^3`.
pub(crate) const I_POW: [Complex64; 4] = [
    Complex64::new(1.0, 0.0),
    Complex64::new(0.0, 1.0),
    Complex64::new(-1.0, 0.0),
    Complex64::new(0.0, -1.0),
];

/// Lowest eigenpair by dense diagonalisation. The largest-magnitude amplitude is made real positive.
pub fn exact_ground(model: &HamiltonianModel) -> Result<(f64, Vec<Complex64>)> {
    let m = model.dense()?;
    let real = m.iter().all(|z| z.im == 0.0);
    let (e0, mut v): (f64, Vec<Complex64>) = if real {
        let mr = m.map(|z| z.re);
        let eig = mr.symmetric_eigen();
        let i = argmin(eig.eigenvalues.as_slice());
        (
            eig.eigenvalues[i],
            eig.eigenvectors.column(i).iter().map(|&x| Complex64::new(x, 0.0)).collect(),
        )
    } else {
        let eig = m.symmetric_eigen();
        let i = argmin(eig.eigenvalues.as_slice());
        (eig.eigenvalues[i], eig.eigenvectors.column(i).iter().copied().collect())
    };
    let norm = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut big = 0;
    for (i, z) in v.iter().enumerate() {
        if z.norm() > v[big].norm() * (1.0 + 1e-12) {
            big = i;
        }
    }
    let fix = v[big].conj() / (v[big].norm() * norm);
    for z in v.iter_mut() {
        *z *= fix;
    }
    Ok((e0, v))
}

fn argmin(xs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in xs.iter().enumerate() {
        if x < xs[best] {
            best = i;
        }
    }
    best
}

/// All multi-indices of length `nc` with `1 ≤ |k| ≤ max_order`, by order then lexicographically.
pub fn multi_indices_up_to(nc: usize, max_order: u32) -> Vec<MultiIndex> {
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
        if pos == cur.len() {
            out.push(MultiIndex::new(cur.clone()));
            return;
        }
        for c in 0..=left {
            cur[pos] = c;
            rec(pos + 1, left - c, cur, out);
        }
        cur[pos] = 0;
    }
    let mut out = Vec::new();
    if nc == 0 {
        return out;
    }
    rec(0, max_order, &mut vec![0; nc], &mut out);
    out.retain(|k| !k.is_zero());
    out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| b.cmp(a)));
    out
}

/// Memoised perturbation series of one model.
#[derive(Debug, Clone)]
pub struct PerturbationSeries {
    model: HamiltonianModel,
    ops: Vec<PauliString>,
    e_ref: f64,
    powers: HashMap<MultiIndex, PauliString>,
    tilde: HashMap<MultiIndex, f64>,
}

impl PerturbationSeries {
    pub fn new(model: &HamiltonianModel) -> Self {
        let zero = BasisState::zero(model.n_qubits());
        PerturbationSeries {
            e_ref: unperturbed_energy(zero, model.h()).expect("lengths agree by construction"),
            ops: model.ops(),
            model: model.clone(),
            powers: HashMap::new(),
            tilde: HashMap::new(),
        }
    }

    pub fn model(&self) -> &HamiltonianModel {
        &self.model
    }

    fn check(&self, k: &MultiIndex) -> Result<()> {
        if k.len() != self.ops.len() {
            return Err(Error::DimensionMismatch {
                expected: self.ops.len(),
                found: k.len(),
            });
        }
        Ok(())
    }

    /// Cached `V^{·k}`.
    pub fn power(&mut self, k: &MultiIndex) -> Result<PauliString> {
        if let Some(p) = self.powers.get(k) {
            return Ok(*p);
        }
        self.check(k)?;
        let p = crate::pauli::vector_power(&self.ops, k)?;
        self.powers.insert(k.clone(), p);
        Ok(p)
    }

    /// `(s(k), Γ(k) mod 4)`.
    pub fn state_and_phase(&mut self, k: &MultiIndex) -> Result<(BasisState, u8)> {
        let p = self.power(k)?;
        Ok(p.apply_to_basis(BasisState::zero(self.model.n_qubits())))
    }

    /// `S_{a,b}`.
    pub fn relative_sign(&mut self, a: &MultiIndex, b: &MultiIndex) -> Result<f64> {
        let pa = self.power(a)?;
        let pb = self.power(b)?;
        let pab = self.power(&a.add(b))?;
        let lhs = pa.mul_unchecked(&pb);
        match (lhs.phase_exp() + 4 - pab.phase_exp()) % 4 {
            0 => Ok(1.0),
            2 => Ok(-1.0),
            _ => Err(Error::Model("non-Hermitian coupling product".into())),
        }
    }

    fn gap(&self, s: BasisState) -> Result<f64> {
        let es = unperturbed_energy(s, self.model.h())?;
        let d = self.e_ref - es;
        let scale = self.model.h().iter().map(|x| x.abs()).fold(1e-300, f64::max);
        if d.abs() <= 1e-12 * scale {
            return Err(Error::Degenerate(s));
        }
        Ok(d)
    }

    /// `C̃_k`.
    pub fn tilde_c(&mut self, k: &MultiIndex) -> Result<f64> {
        if let Some(&c) = self.tilde.get(k) {
            return Ok(c);
        }
        self.check(k)?;
        let (s, _) = self.state_and_phase(k)?;
        let value = if s.is_zero() {
            if k.is_zero() {
                1.0
            } else {
                0.0
            }
        } else {
            let denom = self.gap(s)?;
            let nc = k.len();
            let mut acc = 0.0;
            for beta in k.activated() {
                let db = MultiIndex::unit(nc, beta);
                let rest = k.checked_sub(&db).expect("k_beta > 0");
                acc += self.tilde_c(&rest)? * self.relative_sign(&db, &rest)?;
                for kp in k.sub_indices() {
                    if kp == *k || kp.get(beta) == 0 {
                        continue;
                    }
                    if !self.state_and_phase(&kp)?.0.is_zero() {
                        continue;
                    }
                    let kp_minus = kp.checked_sub(&db).expect("kp_beta > 0");
                    let a = self.tilde_c(&kp_minus)?;
                    if a == 0.0 {
                        continue;
                    }
                    let diff = k.checked_sub(&kp).expect("kp <= k");
                    let b = self.tilde_c(&diff)?;
                    if b == 0.0 {
                        continue;
                    }
                    acc -= a * b * self.relative_sign(&db, &kp_minus)? * self.relative_sign(&diff, &kp)?;
                }
            }
            acc / denom
        };
        self.tilde.insert(k.clone(), value);
        Ok(value)
    }

    /// `⟨0|(V^{·b})† V^{·a}|0⟩` as `(value, i-power)`; `None` when orthogonal.
    fn overlap_phase(&mut self, a: &MultiIndex, b: &MultiIndex) -> Result<Option<u8>> {
        let (sa, ga) = self.state_and_phase(a)?;
        let (sb, gb) = self.state_and_phase(b)?;
        Ok((sa == sb).then_some((ga + 4 - gb) % 4))
    }

    /// Normalised coefficient `C_k` of `|E_0⟩ = Σ_k J^{·k} C_k V^{·k}|0⟩`.
    pub fn normalized_c(&mut self, k: &MultiIndex) -> Result<f64> {
        self.check(k)?;
        let bx = BoxSeries::new(k);
        // Norm series Z = ⟨Ψ̃|Ψ̃⟩ restricted to the box below k.
        let mut z = vec![0.0; bx.size];
        for (ib, kb) in bx.indices.iter().enumerate() {
            let mut re = 0.0;
            let mut im = 0.0;
            for a in kb.sub_indices() {
                let b = kb.checked_sub(&a).expect("a <= kb");
                let Some(ph) = self.overlap_phase(&a, &b)? else { continue };
                let v = self.tilde_c(&a)? * self.tilde_c(&b)?;
                accumulate(ph, v, &mut re, &mut im);
            }
            check_real(re, im, "norm series")?;
            z[ib] = re;
        }
        let n = bx.inverse_sqrt(&z);
        let (_, gk) = self.state_and_phase(k)?;
        let (mut re, mut im) = (0.0, 0.0);
        for b in k.sub_indices() {
            let nb = n[bx.position(&b)];
            if nb == 0.0 {
                continue;
            }
            let a = k.checked_sub(&b).expect("b <= k");
            let ca = self.tilde_c(&a)?;
            if ca == 0.0 {
                continue;
            }
            let (_, ga) = self.state_and_phase(&a)?;
            accumulate((ga + 4 - gk) % 4, nb * ca, &mut re, &mut im);
        }
        check_real(re, im, "normalised coefficient")?;
        Ok(re)
    }

    /// Every `C̃_k` with `1 ≤ |k| ≤ max_order` plus `C̃_0`.
    pub fn table(&mut self, max_order: u32) -> Result<CoefficientTable> {
        let mut coefficients = BTreeMap::new();
        coefficients.insert(MultiIndex::zero(self.ops.len()).to_string(), 1.0);
        for k in multi_indices_up_to(self.ops.len(), max_order) {
            let c = self.tilde_c(&k)?;
            coefficients.insert(k.to_string(), c);
        }
        Ok(CoefficientTable {
            h: self.model.h().to_vec(),
            couplings: self.model.couplings().to_vec(),
            max_order,
            coefficients,
        })
    }
}

fn accumulate(ph: u8, v: f64, re: &mut f64, im: &mut f64) {
    match ph {
        0 => *re += v,
        1 => *im += v,
        2 => *re -= v,
        _ => *im -= v,
    }
}

fn check_real(re: f64, im: f64, what: &'static str) -> Result<()> {
    if im.abs() > 1e-9 * re.abs().max(1.0) {
        return Err(Error::Model(format!("{what} acquired an imaginary part {im:e}")));
    }
    Ok(())
}

/// Dense truncated power series on the box `{k' ≤ k}`.
struct BoxSeries {
    bound: MultiIndex,
    strides: Vec<usize>,
    size: usize,
    indices: Vec<MultiIndex>,
}

impl BoxSeries {
    fn new(k: &MultiIndex) -> Self {
        let mut strides = Vec::with_capacity(k.len());
        let mut size = 1;
        for &c in k.counts() {
            strides.push(size);
            size *= c as usize + 1;
        }
        let indices: Vec<MultiIndex> = k.sub_indices().collect();
        debug_assert_eq!(indices.len(), size);
        BoxSeries {
            bound: k.clone(),
            strides,
            size,
            indices,
        }
    }

    fn position(&self, k: &MultiIndex) -> usize {
        k.counts()
            .iter()
            .zip(&self.strides)
            .map(|(&c, &s)| c as usize * s)
            .sum()
    }

    fn mul(&self, a: &[f64], b: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.size];
        for (ia, ka) in self.indices.iter().enumerate() {
            if a[ia] == 0.0 {
                continue;
            }
            let room = self.bound.checked_sub(ka).expect("inside box");
            for kb in room.sub_indices() {
                let ib = self.position(&kb);
                if b[ib] != 0.0 {
                    out[self.position(&ka.add(&kb))] += a[ia] * b[ib];
                }
            }
        }
        out
    }

    /// `(1 + ε)^{-1/2}` where `z = 1 + ε` has constant term 1.
    fn inverse_sqrt(&self, z: &[f64]) -> Vec<f64> {
        let mut eps = z.to_vec();
        eps[0] -= 1.0;
        let mut out = vec![0.0; self.size];
        out[0] = 1.0;
        let mut term = out.clone();
        let mut coef = 1.0;
        for n in 1..=self.bound.order() {
            coef *= (-0.5 - (n as f64 - 1.0)) / n as f64;
            term = self.mul(&term, &eps);
            if term.iter().all(|&t| t == 0.0) {
                break;
            }
            for (o, t) in out.iter_mut().zip(&term) {
                *o += coef * t;
            }
        }
        out
    }
}

/// Serialisable dump of `C̃_k` values keyed by comma-separated `k`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CoefficientTable {
    pub h: Vec<f64>,
    pub couplings: Vec<Coupling>,
    pub max_order: u32,
    pub coefficients: BTreeMap<String, f64>,
}

/// `C̃_k` for a single multi-index.
pub fn tilde_c(model: &HamiltonianModel, k: &MultiIndex) -> Result<f64> {
    PerturbationSeries::new(model).tilde_c(k)
}

/// `C_k` for a single multi-index.
pub fn normalized_c(model: &HamiltonianModel, k: &MultiIndex) -> Result<f64> {
    PerturbationSeries::new(model).normalized_c(k)
}

/// Truncated series `Σ_{|k|≤K} J^{·k} C̃_k V^{·k}|0⟩` as a dense (unnormalised) vector.
pub fn series_state(model: &HamiltonianModel, max_order: u32) -> Result<Vec<Complex64>> {
    let n = model.n_qubits();
    if n > EXACT_MAX_QUBITS {
        return Err(Error::TooLarge {
            n,
            cap: EXACT_MAX_QUBITS,
        });
    }
    let mut psi = vec![Complex64::new(0.0, 0.0); 1 << n];
    psi[0] = Complex64::new(1.0, 0.0);
    let j = model.j_values();
    let mut series = PerturbationSeries::new(model);
    for k in multi_indices_up_to(model.n_couplings(), max_order) {
        let c = series.tilde_c(&k)?;
        if c == 0.0 {
            continue;
        }
        let (s, g) = series.state_and_phase(&k)?;
        psi[s.index()] += I_POW[g as usize] * (c * k.monomial(&j));
    }
    Ok(psi)
}

/// `1 - |⟨E_0|ψ_K⟩|` for the truncated, normalised series at couplings `scale · J`.
///
/// Evaluated as half the squared distance after phase alignment, which is the
/// same quantity but keeps precision when the overlap is within rounding of 1.
pub fn series_residual(model: &HamiltonianModel, max_order: u32, scale: f64) -> Result<f64> {
    let m = model.scaled(scale);
    let mut psi = series_state(&m, max_order)?;
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    psi.iter_mut().for_each(|z| *z /= norm);
    let (_, exact) = exact_ground(&m)?;
    let ov: Complex64 = psi.iter().zip(&exact).map(|(a, b)| a.conj() * b).sum();
    let align = if ov.norm() > 0.0 { ov / ov.norm() } else { Complex64::new(1.0, 0.0) };
    let dist2: f64 = psi
        .iter()
        .zip(&exact)
        .map(|(a, b)| (b - a * align).norm_sqr())
        .sum();
    Ok(0.5 * dist2)
}
