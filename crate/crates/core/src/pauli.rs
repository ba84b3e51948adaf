//! Pauli strings in symplectic form and products of coupling operators.
//!
//! A [`PauliString`] is `i^phase · σ(x_0,z_0) ⊗ … ⊗ σ(x_{n-1},z_{n-1})` where
//! `σ(1,0)=X`, `σ(0,1)=Z`, `σ(1,1)=Y`. Character `q` of the text form is qubit `q`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest register a mask can describe.
pub const MAX_QUBITS: usize = 64;

fn mask(n: usize) -> u64 {
    if n >= 64 {
        u64::MAX
    } else {
        (1u64 << n) - 1
    }
}

fn popcount(v: u64) -> u32 {
    v.count_ones()
}

fn check_register(n: usize) -> Result<()> {
    if n == 0 || n > MAX_QUBITS {
        return Err(Error::RegisterSize { n, max: MAX_QUBITS });
    }
    Ok(())
}

/// Computational basis label. Bit `q` of `bits` is qubit `q`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct BasisState {
    n: usize,
    bits: u64,
}

impl BasisState {
    pub fn zero(n: usize) -> Self {
        BasisState { n, bits: 0 }
    }

    pub fn from_bits(n: usize, bits: u64) -> Self {
        BasisState {
            n,
            bits: bits & mask(n),
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn bits(&self) -> u64 {
        self.bits
    }

    pub fn is_zero(&self) -> bool {
        self.bits == 0
    }

    pub fn bit(&self, q: usize) -> bool {
        (self.bits >> q) & 1 == 1
    }

    /// Number of excited qubits.
    pub fn weight(&self) -> u32 {
        popcount(self.bits)
    }

    pub fn flip(&self, x: u64) -> Self {
        BasisState {
            n: self.n,
            bits: self.bits ^ x,
        }
    }

    /// Index into a dense amplitude vector.
    pub fn index(&self) -> usize {
        self.bits as usize
    }
}

impl fmt::Display for BasisState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for q in 0..self.n {
            f.write_str(if self.bit(q) { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for BasisState {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = |reason: &str| Error::InvalidArgument(format!("basis state {s:?}: {reason}"));
        let n = s.chars().count();
        if n == 0 || n > MAX_QUBITS {
            return Err(bad("length out of range"));
        }
        let mut bits = 0u64;
        for (q, c) in s.chars().enumerate() {
            match c {
                '0' => {}
                '1' => bits |= 1 << q,
                _ => return Err(bad("expected only 0 and 1")),
            }
        }
        Ok(BasisState { n, bits })
    }
}

impl Serialize for BasisState {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for BasisState {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Single-qubit Pauli factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn bits(self) -> (bool, bool) {
        match self {
            Pauli::I => (false, false),
            Pauli::X => (true, false),
            Pauli::Y => (true, true),
            Pauli::Z => (false, true),
        }
    }

    fn from_bits(x: bool, z: bool) -> Self {
        match (x, z) {
            (false, false) => Pauli::I,
            (true, false) => Pauli::X,
            (true, true) => Pauli::Y,
            (false, true) => Pauli::Z,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `i^phase` times a tensor product of single-qubit Paulis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PauliString {
    n: usize,
    x: u64,
    z: u64,
    phase: u8,
}

impl PauliString {
    pub fn identity(n: usize) -> Result<Self> {
        check_register(n)?;
        Ok(PauliString {
            n,
            x: 0,
            z: 0,
            phase: 0,
        })
    }

    /// Builds from raw masks; bits beyond `n` are dropped.
    pub fn from_masks(n: usize, x: u64, z: u64, phase: u8) -> Result<Self> {
        check_register(n)?;
        Ok(PauliString {
            n,
            x: x & mask(n),
            z: z & mask(n),
            phase: phase % 4,
        })
    }

    /// Product of single-qubit factors at the given (0-based) positions.
    pub fn from_factors(n: usize, factors: &[(usize, Pauli)]) -> Result<Self> {
        let mut p = Self::identity(n)?;
        for &(q, f) in factors {
            if q >= n {
                return Err(Error::OutOfRange {
                    what: "qubit",
                    index: q,
                    len: n,
                });
            }
            let single = p.with_factor(q, f);
            p = p.multiply(&single)?;
        }
        Ok(p)
    }

    fn with_factor(&self, q: usize, f: Pauli) -> Self {
        let (x, z) = f.bits();
        PauliString {
            n: self.n,
            x: (x as u64) << q,
            z: (z as u64) << q,
            phase: 0,
        }
    }

    pub fn n_qubits(&self) -> usize {
        self.n
    }

    pub fn x_mask(&self) -> u64 {
        self.x
    }

    pub fn z_mask(&self) -> u64 {
        self.z
    }

    pub fn phase_exp(&self) -> u8 {
        self.phase
    }

    pub fn factor(&self, q: usize) -> Pauli {
        Pauli::from_bits((self.x >> q) & 1 == 1, (self.z >> q) & 1 == 1)
    }

    /// Qubits acted on non-trivially.
    pub fn support(&self) -> u64 {
        self.x | self.z
    }

    pub fn weight(&self) -> u32 {
        popcount(self.support())
    }

    pub fn y_count(&self) -> u32 {
        popcount(self.x & self.z)
    }

    pub fn is_identity(&self) -> bool {
        self.x == 0 && self.z == 0
    }

    pub fn is_hermitian(&self) -> bool {
        self.phase.is_multiple_of(2)
    }

    /// Same operator with the phase reset to `i^0`.
    pub fn bare(&self) -> Self {
        PauliString { phase: 0, ..*self }
    }

    pub fn with_phase(&self, phase: u8) -> Self {
        PauliString {
            phase: phase % 4,
            ..*self
        }
    }

    pub fn negate(&self) -> Self {
        self.with_phase(self.phase + 2)
    }

    pub fn adjoint(&self) -> Self {
        self.with_phase(4 - self.phase)
    }

    fn check_same(&self, other: &PauliString) -> Result<()> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                found: other.n,
            });
        }
        Ok(())
    }

    /// Exact matrix product `self · other`.
    pub fn multiply(&self, other: &PauliString) -> Result<PauliString> {
        self.check_same(other)?;
        Ok(self.mul_unchecked(other))
    }

    pub(crate) fn mul_unchecked(&self, other: &PauliString) -> PauliString {
        // σ(x,z) = i^{x·z} X^x Z^z and Z^a X^b = (-1)^{a·b} X^b Z^a.
        let x = self.x ^ other.x;
        let z = self.z ^ other.z;
        let ph = self.phase as u32
            + other.phase as u32
            + popcount(self.x & self.z)
            + popcount(other.x & other.z)
            + 2 * popcount(self.z & other.x)
            + 3 * popcount(x & z);
        PauliString {
            n: self.n,
            x,
            z,
            phase: (ph % 4) as u8,
        }
    }

    pub fn commutes_with(&self, other: &PauliString) -> bool {
        (popcount(self.x & other.z) + popcount(self.z & other.x)).is_multiple_of(2)
    }

    /// `P|b⟩ = i^q |b ⊕ x⟩`; returns `(b ⊕ x, q)`.
    pub fn apply_to_basis(&self, b: BasisState) -> (BasisState, u8) {
        let q = self.phase as u32 + popcount(self.x & self.z) + 2 * popcount(self.z & b.bits);
        (b.flip(self.x), (q % 4) as u8)
    }

    /// Phase picked up on basis index `b` (as a raw integer), used by hot loops.
    #[inline]
    pub(crate) fn phase_on(&self, b: u64) -> u8 {
        ((self.phase as u32 + popcount(self.x & self.z) + 2 * popcount(self.z & b)) % 4) as u8
    }
}

impl fmt::Display for PauliString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.phase != 0 {
            write!(f, "i^{}*", self.phase)?;
        }
        for q in 0..self.n {
            write!(f, "{}", self.factor(q).as_char())?;
        }
        Ok(())
    }
}

impl FromStr for PauliString {
    type Err = Error;

    fn from_str(input: &str) -> Result<Self> {
        let bad = |reason: &str| Error::ParsePauli {
            input: input.to_string(),
            reason: reason.to_string(),
        };
        let (phase, body) = match input.strip_prefix("i^") {
            Some(rest) => {
                let (num, body) = rest.split_once('*').ok_or_else(|| bad("missing '*' after phase"))?;
                let p: u8 = num.parse().map_err(|_| bad("phase exponent is not 0..3"))?;
                if p > 3 {
                    return Err(bad("phase exponent is not 0..3"));
                }
                (p, body)
            }
            None => (0, input),
        };
        let n = body.chars().count();
        if n == 0 {
            return Err(bad("empty operator"));
        }
        if n > MAX_QUBITS {
            return Err(bad("too many qubits"));
        }
        let (mut x, mut z) = (0u64, 0u64);
        for (q, c) in body.chars().enumerate() {
            let (xb, zb) = match c {
                'I' => (false, false),
                'X' => (true, false),
                'Y' => (true, true),
                'Z' => (false, true),
                _ => return Err(bad("unexpected character")),
            };
            x |= (xb as u64) << q;
            z |= (zb as u64) << q;
        }
        Ok(PauliString { n, x, z, phase })
    }
}

impl Serialize for PauliString {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for PauliString {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(de)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Counts `k_β` of each coupling application.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MultiIndex(Vec<u32>);

impl MultiIndex {
    pub fn new(counts: Vec<u32>) -> Self {
        MultiIndex(counts)
    }

    pub fn zero(len: usize) -> Self {
        MultiIndex(vec![0; len])
    }

    /// The unit multi-index δ_β.
    pub fn unit(len: usize, beta: usize) -> Self {
        let mut v = vec![0; len];
        v[beta] = 1;
        MultiIndex(v)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn counts(&self) -> &[u32] {
        &self.0
    }

    pub fn get(&self, beta: usize) -> u32 {
        self.0[beta]
    }

    /// Perturbative order |k|.
    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// Couplings with `k_β > 0`.
    pub fn activated(&self) -> Vec<usize> {
        (0..self.0.len()).filter(|&b| self.0[b] > 0).collect()
    }

    pub fn add(&self, other: &MultiIndex) -> MultiIndex {
        MultiIndex(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    pub fn checked_sub(&self, other: &MultiIndex) -> Option<MultiIndex> {
        self.0
            .iter()
            .zip(&other.0)
            .map(|(a, b)| a.checked_sub(*b))
            .collect::<Option<Vec<_>>>()
            .map(MultiIndex)
    }

    /// Component-wise `self ≤ other`.
    pub fn le(&self, other: &MultiIndex) -> bool {
        self.0.iter().zip(&other.0).all(|(a, b)| a <= b)
    }

    pub fn increment(&self, beta: usize) -> MultiIndex {
        let mut v = self.0.clone();
        v[beta] += 1;
        MultiIndex(v)
    }

    /// Every `k' ≤ self` (including zero and self), in odometer order.
    pub fn sub_indices(&self) -> SubIndices<'_> {
        SubIndices {
            bound: self,
            cur: Some(vec![0; self.0.len()]),
        }
    }

    /// `J^{·k} = Π_β J_β^{k_β}`.
    pub fn monomial(&self, j: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(j)
            .map(|(&c, &jb)| jb.powi(c as i32))
            .product()
    }
}

impl fmt::Display for MultiIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, c) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            write!(f, "{c}")?;
        }
        Ok(())
    }
}

impl FromStr for MultiIndex {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.split(',')
            .map(|t| t.trim().parse::<u32>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(MultiIndex)
            .map_err(|_| Error::InvalidArgument(format!("bad multi-index {s:?}")))
    }
}

impl Serialize for MultiIndex {
    fn serialize<S: Serializer>(&self, ser: S) -> std::result::Result<S::Ok, S::Error> {
        self.0.serialize(ser)
    }
}

impl<'de> Deserialize<'de> for MultiIndex {
    fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
        Vec::<u32>::deserialize(de).map(MultiIndex)
    }
}

pub struct SubIndices<'a> {
    bound: &'a MultiIndex,
    cur: Option<Vec<u32>>,
}

impl Iterator for SubIndices<'_> {
    type Item = MultiIndex;

    fn next(&mut self) -> Option<MultiIndex> {
        let out = self.cur.clone()?;
        let mut next = out.clone();
        let mut i = 0;
        loop {
            if i == next.len() {
                self.cur = None;
                break;
            }
            if next[i] < self.bound.0[i] {
                next[i] += 1;
                self.cur = Some(next);
                break;
            }
            next[i] = 0;
            i += 1;
        }
        Some(MultiIndex(out))
    }
}

fn check_len(v: &[PauliString], k: &MultiIndex) -> Result<()> {
    if v.len() != k.len() {
        return Err(Error::DimensionMismatch {
            expected: v.len(),
            found: k.len(),
        });
    }
    Ok(())
}

/// `V^{·k}`: `V_1^{k_1}` acts first, then `V_2^{k_2}`, and so on.
pub fn vector_power(v: &[PauliString], k: &MultiIndex) -> Result<PauliString> {
    check_len(v, k)?;
    let n = v.first().map(|p| p.n).ok_or_else(|| {
        Error::Model("empty coupling list".into())
    })?;
    let mut acc = PauliString::identity(n)?;
    for (beta, p) in v.iter().enumerate() {
        p.check_same(&acc)?;
        for _ in 0..k.get(beta) {
            acc = p.mul_unchecked(&acc);
        }
    }
    Ok(acc)
}

/// `P · Q`.
pub fn multiply(p: &PauliString, q: &PauliString) -> Result<PauliString> {
    p.multiply(q)
}

/// `S_{k,k'}` with `V^{·k} V^{·k'} = S V^{·(k+k')}`.
pub fn relative_sign(k: &MultiIndex, kp: &MultiIndex, v: &[PauliString]) -> Result<i8> {
    check_len(v, kp)?;
    let lhs = vector_power(v, k)?.mul_unchecked(&vector_power(v, kp)?);
    let rhs = vector_power(v, &k.add(kp))?;
    debug_assert_eq!((lhs.x, lhs.z), (rhs.x, rhs.z));
    match (lhs.phase + 4 - rhs.phase) % 4 {
        0 => Ok(1),
        2 => Ok(-1),
        _ => Err(Error::Model(
            "coupling operators are not Hermitian Pauli strings".into(),
        )),
    }
}

/// `V^{·k}|s0⟩ = i^Γ |s⟩`; returns `(s, Γ mod 4)`.
pub fn state_and_phase(
    k: &MultiIndex,
    v: &[PauliString],
    s0: BasisState,
) -> Result<(BasisState, u8)> {
    let p = vector_power(v, k)?;
    if p.n != s0.n {
        return Err(Error::DimensionMismatch {
            expected: p.n,
            found: s0.n,
        });
    }
    Ok(p.apply_to_basis(s0))
}

/// `E_s = -Σ_n (-1)^{s_n} h_n`.
pub fn unperturbed_energy(s: BasisState, h: &[f64]) -> Result<f64> {
    if h.len() != s.n {
        return Err(Error::DimensionMismatch {
            expected: s.n,
            found: h.len(),
        });
    }
    Ok(h
        .iter()
        .enumerate()
        .map(|(q, &hn)| if s.bit(q) { hn } else { -hn })
        .sum())
}

/// Union of the supports of every activated coupling, as a qubit mask.
pub fn support(k: &MultiIndex, v: &[PauliString]) -> Result<u64> {
    check_len(v, k)?;
    Ok(k
        .activated()
        .into_iter()
        .fold(0u64, |acc, b| acc | v[b].support()))
}

/// Qubit indices of a mask in ascending order.
pub fn mask_qubits(m: u64) -> Vec<usize> {
    (0..64).filter(|q| (m >> q) & 1 == 1).collect()
}
