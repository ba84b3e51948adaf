//! Product ansatzes `U(θ) = Π_i e^{i c_i θ_{n_i} T_i}` and their constructors.

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pauli::{BasisState, Pauli, PauliString};
use crate::perturbation::I_POW;
use crate::simulator;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnsatzUnit {
    pub pauli: PauliString,
    pub scale: f64,
    pub param: usize,
}

impl AnsatzUnit {
    pub fn new(pauli: PauliString, param: usize) -> Self {
        AnsatzUnit {
            pauli,
            scale: 1.0,
            param,
        }
    }
}

/// Units are applied in sequence order: `units[0]` acts first on the start state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "AnsatzFile", into = "AnsatzFile")]
pub struct ProductAnsatz {
    n_qubits: usize,
    start_state: BasisState,
    units: Vec<AnsatzUnit>,
    num_params: usize,
}

#[derive(Serialize, Deserialize)]
struct AnsatzFile {
    n_qubits: usize,
    start_state: BasisState,
    units: Vec<AnsatzUnit>,
}

impl TryFrom<AnsatzFile> for ProductAnsatz {
    type Error = Error;

    fn try_from(f: AnsatzFile) -> Result<Self> {
        if f.start_state.n_qubits() != f.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: f.n_qubits,
                found: f.start_state.n_qubits(),
            });
        }
        let np = f.units.iter().map(|u| u.param + 1).max().unwrap_or(0);
        ProductAnsatz::new(f.start_state, f.units, np)
    }
}

impl From<ProductAnsatz> for AnsatzFile {
    fn from(a: ProductAnsatz) -> Self {
        AnsatzFile {
            n_qubits: a.n_qubits,
            start_state: a.start_state,
            units: a.units,
        }
    }
}

impl ProductAnsatz {
    pub fn new(start_state: BasisState, units: Vec<AnsatzUnit>, num_params: usize) -> Result<Self> {
        let n = start_state.n_qubits();
        for u in &units {
            if u.pauli.n_qubits() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    found: u.pauli.n_qubits(),
                });
            }
            if !u.pauli.is_hermitian() {
                return Err(Error::Ansatz(format!("generator {} is not Hermitian", u.pauli)));
            }
            if !u.scale.is_finite() {
                return Err(Error::NonFinite("unit scale"));
            }
            if u.param >= num_params {
                return Err(Error::OutOfRange {
                    what: "parameter",
                    index: u.param,
                    len: num_params,
                });
            }
        }
        Ok(ProductAnsatz {
            n_qubits: n,
            start_state,
            units,
            num_params,
        })
    }

    /// One fresh parameter per generator, in the given order.
    pub fn from_generators(start_state: BasisState, gens: &[PauliString]) -> Result<Self> {
        let units = gens
            .iter()
            .enumerate()
            .map(|(i, &p)| AnsatzUnit::new(p, i))
            .collect();
        ProductAnsatz::new(start_state, units, gens.len())
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn start_state(&self) -> BasisState {
        self.start_state
    }

    pub fn units(&self) -> &[AnsatzUnit] {
        &self.units
    }

    pub fn num_params(&self) -> usize {
        self.num_params
    }

    pub fn num_units(&self) -> usize {
        self.units.len()
    }

    /// Parameter indices never decrease along the circuit.
    pub fn is_ordered(&self) -> bool {
        self.units.windows(2).all(|w| w[0].param <= w[1].param)
    }

    pub fn generators(&self) -> Vec<PauliString> {
        self.units.iter().map(|u| u.pauli).collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }

    /// Appends a unit with a fresh parameter; returns its index.
    pub fn push(&mut self, pauli: PauliString, scale: f64) -> Result<usize> {
        if pauli.n_qubits() != self.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.n_qubits,
                found: pauli.n_qubits(),
            });
        }
        let param = self.num_params;
        self.units.push(AnsatzUnit { pauli, scale, param });
        self.num_params += 1;
        Ok(param)
    }
}

/// Layer `n` of a stabilizer ansatz.
#[derive(Debug, Clone)]
pub struct StabilizerLevel {
    /// Independent commuting generators of `S^{(n)}`, acting on qubits below `n`.
    pub stabilizers: Vec<PauliString>,
    pub start_bit: bool,
    pub rotations: [Pauli; 2],
}

#[derive(Debug, Clone)]
pub struct StabilizerAnsatzSpec {
    pub levels: Vec<StabilizerLevel>,
}

impl StabilizerAnsatzSpec {
    /// `R_0 = X`, `R_1 = Y`, `S^{(n)} = ⟨X_i : i < n⟩`, start `|0…0⟩`.
    pub fn qca(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::RegisterSize {
                n,
                max: crate::pauli::MAX_QUBITS,
            });
        }
        let mut levels = Vec::with_capacity(n);
        for q in 0..n {
            let stabilizers = (0..q)
                .map(|i| PauliString::from_factors(n, &[(i, Pauli::X)]))
                .collect::<Result<Vec<_>>>()?;
            levels.push(StabilizerLevel {
                stabilizers,
                start_bit: false,
                rotations: [Pauli::X, Pauli::Y],
            });
        }
        Ok(StabilizerAnsatzSpec { levels })
    }
}

fn gf2_rank(rows: &[(u64, u64)]) -> usize {
    let mut rows: Vec<u128> = rows
        .iter()
        .map(|&(x, z)| (x as u128) | ((z as u128) << 64))
        .collect();
    let mut rank = 0;
    for bit in 0..128 {
        let Some(p) = (rank..rows.len()).find(|&r| (rows[r] >> bit) & 1 == 1) else {
            continue;
        };
        rows.swap(rank, p);
        for r in 0..rows.len() {
            if r != rank && (rows[r] >> bit) & 1 == 1 {
                rows[r] ^= rows[rank];
            }
        }
        rank += 1;
    }
    rank
}

/// Builds the stabilizer ansatz: level `n` contributes `R_j S` for every `S ∈ S^{(n)}`.
pub fn build_stabilizer(spec: &StabilizerAnsatzSpec) -> Result<ProductAnsatz> {
    let n = spec.levels.len();
    if n == 0 {
        return Err(Error::RegisterSize {
            n,
            max: crate::pauli::MAX_QUBITS,
        });
    }
    let mut start = 0u64;
    let mut gens = Vec::new();
    for (q, level) in spec.levels.iter().enumerate() {
        let [r0, r1] = level.rotations;
        let flips = |r: Pauli| matches!(r, Pauli::X | Pauli::Y);
        if !flips(r0) || !flips(r1) || r0 == r1 {
            return Err(Error::Ansatz(format!(
                "level {q}: rotations must be distinct off-diagonal Paulis"
            )));
        }
        let below = (1u64 << q) - 1;
        for (i, s) in level.stabilizers.iter().enumerate() {
            if s.n_qubits() != n || s.support() & !below != 0 {
                return Err(Error::Ansatz(format!(
                    "level {q}: stabilizer {s} must act only on earlier qubits"
                )));
            }
            if level.stabilizers[..i].iter().any(|t| !t.commutes_with(s)) {
                return Err(Error::Ansatz(format!("level {q}: stabilizers do not commute")));
            }
        }
        let masks: Vec<(u64, u64)> = level
            .stabilizers
            .iter()
            .map(|s| (s.x_mask(), s.z_mask()))
            .collect();
        if gf2_rank(&masks) != masks.len() {
            return Err(Error::Ansatz(format!("level {q}: stabilizers are not independent")));
        }
        if level.start_bit {
            start |= 1 << q;
        }
        let m = level.stabilizers.len();
        for r in [r0, r1] {
            let rot = PauliString::from_factors(n, &[(q, r)])?;
            for subset in 0u64..(1 << m) {
                let mut g = rot;
                for (i, s) in level.stabilizers.iter().enumerate() {
                    if (subset >> i) & 1 == 1 {
                        g = s.multiply(&g)?;
                    }
                }
                gens.push(g);
            }
        }
    }
    ProductAnsatz::from_generators(BasisState::from_bits(n, start), &gens)
}

/// The quantum combinatorial ansatz on `n` qubits: `2(2^n − 1)` units.
pub fn build_qca(n: usize) -> Result<ProductAnsatz> {
    build_stabilizer(&StabilizerAnsatzSpec::qca(n)?)
}

fn drop_param(units: &mut Vec<AnsatzUnit>, n: usize) {
    units.retain(|u| u.param != n);
    for u in units.iter_mut() {
        if u.param > n {
            u.param -= 1;
        }
    }
}

pub fn remove_parameter(a: &ProductAnsatz, n: usize) -> Result<ProductAnsatz> {
    if n >= a.num_params {
        return Err(Error::OutOfRange {
            what: "parameter",
            index: n,
            len: a.num_params,
        });
    }
    let mut units = a.units.clone();
    drop_param(&mut units, n);
    ProductAnsatz::new(a.start_state, units, a.num_params - 1)
}

/// Enforces `θ_i = c θ_j` by rescaling the units of `i` and handing them to `j`.
pub fn fix_parameter(a: &ProductAnsatz, i: usize, j: usize, c: f64) -> Result<ProductAnsatz> {
    if i == j {
        return Err(Error::InvalidArgument(format!(
            "parameter {i} cannot be fixed to itself"
        )));
    }
    for idx in [i, j] {
        if idx >= a.num_params {
            return Err(Error::OutOfRange {
                what: "parameter",
                index: idx,
                len: a.num_params,
            });
        }
    }
    if !c.is_finite() {
        return Err(Error::NonFinite("fixing ratio"));
    }
    let mut units = a.units.clone();
    for u in units.iter_mut().filter(|u| u.param == i) {
        u.param = j;
        u.scale *= c;
    }
    for u in units.iter_mut() {
        if u.param > i {
            u.param -= 1;
        }
    }
    ProductAnsatz::new(a.start_state, units, a.num_params - 1)
}

/// `e^{iθT}` commutes with complex conjugation iff `iT` is a real matrix.
pub fn respects_conjugation(t: &PauliString) -> bool {
    (t.phase_exp() as u32 + t.y_count() + 1).is_multiple_of(2)
}

/// Removes every parameter that drives a unit breaking complex-conjugation symmetry.
pub fn enforce_conjugation(a: &ProductAnsatz) -> Result<ProductAnsatz> {
    let mut out = a.clone();
    for n in (0..a.num_params).rev() {
        if a.units.iter().any(|u| u.param == n && !respects_conjugation(&u.pauli)) {
            out = remove_parameter(&out, n)?;
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SymmetryMode {
    Remove,
    Fix,
}

/// Hermitian symmetry `Σ_j s_j P_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct PauliSum {
    pub terms: Vec<(f64, PauliString)>,
}

impl From<PauliString> for PauliSum {
    fn from(p: PauliString) -> Self {
        PauliSum {
            terms: vec![(1.0, p)],
        }
    }
}

type PauliVec = BTreeMap<(u64, u64), Complex64>;

fn add_term(v: &mut PauliVec, coef: f64, p: &PauliString) {
    *v.entry((p.x_mask(), p.z_mask())).or_default() += I_POW[p.phase_exp() as usize] * coef;
}

/// `[S, T]` expanded in the Pauli basis.
fn commutator(sym: &PauliSum, t: &PauliString, scale: f64) -> PauliVec {
    let mut v = PauliVec::new();
    for (s, p) in &sym.terms {
        if !p.commutes_with(t) {
            add_term(&mut v, 2.0 * s * scale, &p.mul_unchecked(t));
        }
    }
    v.retain(|_, z| z.norm() > 1e-14);
    v
}

fn param_commutator(a: &ProductAnsatz, sym: &PauliSum, n: usize) -> PauliVec {
    let mut v = PauliVec::new();
    for u in a.units.iter().filter(|u| u.param == n) {
        for (k, z) in commutator(sym, &u.pauli, u.scale) {
            *v.entry(k).or_default() += z;
        }
    }
    v.retain(|_, z| z.norm() > 1e-12);
    v
}

/// Null-space basis in reduced row echelon form (one vector per free column).
fn null_space(m: &DMatrix<f64>, tol: f64) -> Vec<Vec<f64>> {
    let (rows, cols) = m.shape();
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == rows {
            break;
        }
        let (p, best) = (r..rows)
            .map(|i| (i, a[(i, c)].abs()))
            .fold((r, 0.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        if best <= tol {
            continue;
        }
        a.swap_rows(r, p);
        let piv = a[(r, c)];
        for j in 0..cols {
            a[(r, j)] /= piv;
        }
        for i in 0..rows {
            if i != r {
                let f = a[(i, c)];
                if f != 0.0 {
                    for j in 0..cols {
                        a[(i, j)] -= f * a[(r, j)];
                    }
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let mut out = Vec::new();
    for free in (0..cols).filter(|c| !pivots.contains(c)) {
        let mut v = vec![0.0; cols];
        v[free] = 1.0;
        for (row, &pc) in pivots.iter().enumerate() {
            v[pc] = -a[(row, free)];
        }
        out.push(v);
    }
    out
}

/// Makes every per-parameter unit product commute with the symmetry.
pub fn enforce_symmetry(
    a: &ProductAnsatz,
    sym: impl Into<PauliSum>,
    mode: SymmetryMode,
) -> Result<ProductAnsatz> {
    let sym = sym.into();
    for (_, p) in &sym.terms {
        if p.n_qubits() != a.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: a.n_qubits,
                found: p.n_qubits(),
            });
        }
    }
    let mut image = PauliVec::new();
    for (s, p) in &sym.terms {
        let (t, ph) = p.apply_to_basis(a.start_state);
        *image.entry((t.bits(), 0)).or_default() += I_POW[ph as usize] * *s;
    }
    if image
        .iter()
        .any(|(&(b, _), z)| b != a.start_state.bits() && z.norm() > 1e-12)
    {
        return Err(Error::Infeasible("start state is not an eigenstate of the symmetry".into()));
    }
    let offending: Vec<usize> = (0..a.num_params)
        .filter(|&n| !param_commutator(a, &sym, n).is_empty())
        .collect();
    if offending.is_empty() {
        return Ok(a.clone());
    }
    match mode {
        SymmetryMode::Remove => {
            let mut out = a.clone();
            for &n in offending.iter().rev() {
                out = remove_parameter(&out, n)?;
            }
            Ok(out)
        }
        SymmetryMode::Fix => fix_symmetry(a, &sym, &offending),
    }
}

fn fix_symmetry(a: &ProductAnsatz, sym: &PauliSum, offending: &[usize]) -> Result<ProductAnsatz> {
    let vecs: Vec<PauliVec> = offending.iter().map(|&n| param_commutator(a, sym, n)).collect();
    let mut keys: Vec<(u64, u64)> = vecs.iter().flat_map(|v| v.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();
    let mut m = DMatrix::<f64>::zeros(2 * keys.len(), offending.len());
    for (c, v) in vecs.iter().enumerate() {
        for (r, k) in keys.iter().enumerate() {
            let z = v.get(k).copied().unwrap_or_default();
            m[(2 * r, c)] = z.re;
            m[(2 * r + 1, c)] = z.im;
        }
    }
    let null = null_space(&m, 1e-10);
    if null.is_empty() {
        return Err(Error::Infeasible("no non-trivial combination of offending parameters commutes".into()));
    }
    let mut owner = vec![None; offending.len()];
    for (g, v) in null.iter().enumerate() {
        for (c, &x) in v.iter().enumerate() {
            if x.abs() > 1e-12 {
                if owner[c].is_some() {
                    return Err(Error::Infeasible("ties overlap; symmetry needs a non-product rearrangement".into()));
                }
                owner[c] = Some(g);
            }
        }
    }
    if let Some(c) = owner.iter().position(Option::is_none) {
        return Err(Error::Infeasible(format!(
            "parameter {} cannot be tied into a symmetric combination",
            offending[c]
        )));
    }
    let mut units = a.units.clone();
    // Each tie becomes one block of adjacent units under a single reference parameter.
    let mut merged: Vec<(usize, usize, f64)> = Vec::new();
    for (g, v) in null.iter().enumerate() {
        let members: Vec<usize> = (0..offending.len()).filter(|&c| owner[c] == Some(g)).collect();
        let reference = members
            .iter()
            .copied()
            .find(|&c| (v[c] - 1.0).abs() < 1e-12)
            .unwrap_or(members[0]);
        let r = offending[reference];
        let block: Vec<usize> = units
            .iter()
            .enumerate()
            .filter(|(_, u)| members.iter().any(|&c| offending[c] == u.param))
            .map(|(i, _)| i)
            .collect();
        for (x, &i) in block.iter().enumerate() {
            for &j in &block[x + 1..] {
                if !units[i].pauli.commutes_with(&units[j].pauli) {
                    return Err(Error::Infeasible("tied generators do not commute".into()));
                }
            }
        }
        let first = block[0];
        let mut moved = Vec::new();
        for &i in block.iter().rev() {
            if i == first {
                continue;
            }
            for between in first + 1..i {
                if !block.contains(&between) && !units[i].pauli.commutes_with(&units[between].pauli) {
                    return Err(Error::Infeasible(
                        "tied generators cannot be brought together".into(),
                    ));
                }
            }
            moved.push(units.remove(i));
        }
        moved.reverse();
        for (off, u) in moved.into_iter().enumerate() {
            units.insert(first + 1 + off, u);
        }
        for &c in &members {
            if c != reference {
                merged.push((offending[c], r, v[c] / v[reference]));
            }
        }
    }
    let mut out = ProductAnsatz::new(a.start_state, units, a.num_params)?;
    // Fix from the highest index down so earlier indices stay valid.
    merged.sort_by_key(|x| std::cmp::Reverse(x.0));
    for k in 0..merged.len() {
        let (i, j, c) = merged[k];
        out = fix_parameter(&out, i, j, c)?;
        for later in merged[k + 1..].iter_mut() {
            if later.1 > i {
                later.1 -= 1;
            }
        }
    }
    Ok(out)
}

/// Geometry of the variational manifold at a point.
#[derive(Debug, Clone)]
pub struct ManifoldMetrics {
    pub gram: DMatrix<f64>,
    pub det: f64,
    pub rank_deficient: bool,
    pub area: Option<f64>,
}

/// `Re⟨∂_m ψ|∂_n ψ⟩` after projecting the tangents off the phase direction.
pub fn gram_matrix(a: &ProductAnsatz, theta: &[f64]) -> Result<DMatrix<f64>> {
    let psi = simulator::prepare(a, theta)?;
    let mut tans = simulator::tangents(a, theta)?;
    let projected: Vec<Vec<Complex64>> = tans
        .iter_mut()
        .map(|t| {
            let ov = psi.inner(t);
            t.amplitudes()
                .iter()
                .zip(psi.amplitudes())
                .map(|(x, p)| x - p * ov)
                .collect()
        })
        .collect();
    let np = a.num_params;
    Ok(DMatrix::from_fn(np, np, |m, n| {
        projected[m]
            .iter()
            .zip(&projected[n])
            .map(|(x, y)| (x.conj() * y).re)
            .sum()
    }))
}

fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    // Newton iteration on Legendre polynomials.
    let mut nodes = vec![0.0; order];
    let mut weights = vec![0.0; order];
    for i in 0..order {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (order as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=order {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = order as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                let dp = {
                    let (mut q0, mut q1) = (1.0, x);
                    for k in 2..=order {
                        let q2 = ((2 * k - 1) as f64 * x * q1 - (k - 1) as f64 * q0) / k as f64;
                        q0 = q1;
                        q1 = q2;
                    }
                    order as f64 * (x * q1 - q0) / (x * x - 1.0)
                };
                weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
                break;
            }
        }
        nodes[i] = x;
    }
    (nodes, weights)
}

/// Quadrature rule: `panels` equal sub-intervals per axis, `order` Gauss points each.
#[derive(Debug, Clone, Copy)]
pub struct Quadrature {
    pub panels: usize,
    pub order: usize,
}

impl Default for Quadrature {
    fn default() -> Self {
        Quadrature {
            panels: 16,
            order: 5,
        }
    }
}

/// `∫ √det G dθ / multiplicity` over a box domain.
pub fn manifold_area(
    a: &ProductAnsatz,
    domain: &[(f64, f64)],
    multiplicity: u32,
    rule: Quadrature,
) -> Result<f64> {
    if domain.len() != a.num_params {
        return Err(Error::DimensionMismatch {
            expected: a.num_params,
            found: domain.len(),
        });
    }
    if multiplicity == 0 || rule.panels == 0 || rule.order == 0 {
        return Err(Error::InvalidArgument("empty quadrature or zero multiplicity".into()));
    }
    let (gx, gw) = gauss_legendre(rule.order);
    let axes: Vec<Vec<(f64, f64)>> = domain
        .iter()
        .map(|&(lo, hi)| {
            let h = (hi - lo) / rule.panels as f64;
            (0..rule.panels)
                .flat_map(|p| {
                    let mid = lo + h * (p as f64 + 0.5);
                    gx.iter()
                        .zip(&gw)
                        .map(move |(x, w)| (mid + 0.5 * h * x, 0.5 * h * w))
                })
                .collect()
        })
        .collect();
    let np = a.num_params;
    if np == 0 {
        return Ok(1.0 / multiplicity as f64);
    }
    let mut idx = vec![0usize; np];
    let mut total = 0.0;
    let mut theta = vec![0.0; np];
    loop {
        let mut w = 1.0;
        for d in 0..np {
            theta[d] = axes[d][idx[d]].0;
            w *= axes[d][idx[d]].1;
        }
        let det = gram_matrix(a, &theta)?.determinant();
        total += w * det.max(0.0).sqrt();
        let mut d = 0;
        loop {
            if d == np {
                return Ok(total / multiplicity as f64);
            }
            idx[d] += 1;
            if idx[d] < axes[d].len() {
                break;
            }
            idx[d] = 0;
            d += 1;
        }
    }
}

pub fn manifold_metrics(
    a: &ProductAnsatz,
    theta: &[f64],
    domain: Option<&[(f64, f64)]>,
    multiplicity: u32,
) -> Result<ManifoldMetrics> {
    let gram = gram_matrix(a, theta)?;
    let det = gram.determinant();
    let rank = gram.clone().svd(false, false).rank(1e-9);
    let area = match domain {
        Some(d) => Some(manifold_area(a, d, multiplicity, Quadrature::default())?),
        None => None,
    };
    Ok(ManifoldMetrics {
        rank_deficient: rank < a.num_params,
        gram,
        det,
        area,
    })
}
