//! Generator slots, θ̃ estimation with back-action subtraction, and priority lists.
//!
//! Sign convention: a slot `(s, a)` has `T|0⟩ = ±i^a|s⟩` (`a` is the Hermitian
//! parity). Its generator is oriented so that `iT|0⟩ = +i^p|s⟩` with `p = (a+1) mod 2`,
//! the red parity of the diagrams it absorbs; every θ̃ refers to that orientation.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ansatz::{AnsatzUnit, ProductAnsatz};
use crate::diagrams::{self, DiagramClass};
use crate::error::{Error, Result, SlotKey};
use crate::pauli::{BasisState, MultiIndex, PauliString};
use crate::perturbation::{HamiltonianModel, PerturbationSeries};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeneratorSlot {
    pub s: BasisState,
    pub a: u8,
    /// Oriented generator (see module docs).
    pub pauli: PauliString,
    /// Serving unit in the parent ansatz.
    pub unit: usize,
    pub param: usize,
    /// Parent parameter value equivalent to `θ̃ = 1` on the oriented generator.
    pub param_factor: f64,
}

impl GeneratorSlot {
    pub fn key(&self) -> SlotKey {
        SlotKey { s: self.s, a: self.a }
    }
}

#[derive(Debug, Clone, Default)]
pub struct GeneratingReport {
    pub slots: BTreeMap<SlotKey, GeneratorSlot>,
    pub missing: Vec<SlotKey>,
}

impl GeneratingReport {
    pub fn is_generating(&self) -> bool {
        self.missing.is_empty()
    }
}

/// Slot a unit serves, if any: `(key, oriented generator, param_factor)`.
fn unit_slot(u: &AnsatzUnit, start: BasisState) -> Option<(SlotKey, PauliString, f64)> {
    if u.scale.abs() != 1.0 || u.pauli.x_mask() == 0 {
        return None;
    }
    let p = if u.scale < 0.0 { u.pauli.negate() } else { u.pauli };
    let (t, q) = p.apply_to_basis(start);
    let a = q % 2;
    let p_red = (a + 1) % 2;
    // iσP|0⟩ = σ i^{q+1}|t⟩ must equal +i^{p_red}|t⟩.
    let flip = (q + 1) % 4 != p_red;
    let oriented = if flip { p.negate() } else { p };
    let factor = if flip { -1.0 } else { 1.0 } * u.scale.signum();
    Some((SlotKey { s: t, a }, oriented, factor))
}

/// Finds, for every `s ≠ start`, the first unit serving `(s, 0)` and `(s, 1)`.
pub fn check_generating(a: &ProductAnsatz) -> GeneratingReport {
    let mut report = GeneratingReport::default();
    for (i, u) in a.units().iter().enumerate() {
        if let Some((key, pauli, param_factor)) = unit_slot(u, a.start_state()) {
            report.slots.entry(key).or_insert(GeneratorSlot {
                s: key.s,
                a: key.a,
                pauli,
                unit: i,
                param: u.param,
                param_factor,
            });
        }
    }
    let n = a.n_qubits();
    if n < 20 {
        for bits in 0u64..(1 << n) {
            let s = BasisState::from_bits(n, bits);
            if s == a.start_state() {
                continue;
            }
            for parity in 0..2 {
                let key = SlotKey { s, a: parity };
                if !report.slots.contains_key(&key) {
                    report.missing.push(key);
                }
            }
        }
    }
    report
}

/// True when every generator is compact: it touches only qubits it flips.
pub fn check_matched(a: &ProductAnsatz) -> bool {
    a.units()
        .iter()
        .all(|u| u.pauli.z_mask() & !u.pauli.x_mask() == 0 && u.pauli.x_mask() != 0)
}

#[derive(Debug, Clone)]
pub struct ThetaEstimate {
    pub slot: GeneratorSlot,
    pub leading_ks: Vec<MultiIndex>,
    /// `θ̃^{(k)}` for each leading `k`, numeric at the model couplings.
    pub contributions: Vec<f64>,
    pub theta_tilde: f64,
    pub j_weight: f64,
    pub order: u32,
}

#[derive(Debug, Clone)]
pub struct HierarchyEstimates {
    pub estimates: Vec<ThetaEstimate>,
    /// Fixing-equation value for every disconnected `k` built from leading pieces.
    pub disconnected: Vec<(MultiIndex, f64)>,
    pub max_order: u32,
}

impl HierarchyEstimates {
    pub fn get(&self, key: SlotKey) -> Option<&ThetaEstimate> {
        self.estimates.iter().find(|e| e.slot.key() == key)
    }

    pub fn by_generator(&self, pauli: &PauliString) -> Option<&ThetaEstimate> {
        self.estimates.iter().find(|e| e.slot.pauli.bare() == pauli.bare())
    }

    /// Parent-ansatz parameter vector with every slot set to its estimate.
    pub fn parent_parameters(&self, parent: &ProductAnsatz) -> Vec<f64> {
        let mut theta = vec![0.0; parent.num_params()];
        for e in &self.estimates {
            theta[e.slot.param] = e.theta_tilde * e.slot.param_factor;
        }
        theta
    }
}

struct Fixed {
    k: MultiIndex,
    theta: f64,
    slot: GeneratorSlot,
}

/// `⟨0|V^{·k†} T̂^{N(f)}|0⟩` with `T̂ = iT`, applied in parent circuit order.
fn bracket(fixed: &[Fixed], counts: &[(usize, u32)], target: BasisState, gamma: u8, n: usize) -> Result<f64> {
    let mut per_unit: BTreeMap<usize, (u32, PauliString)> = BTreeMap::new();
    for &(idx, c) in counts {
        let f = &fixed[idx];
        per_unit.entry(f.slot.unit).or_insert((0, f.slot.pauli)).0 += c;
    }
    let mut state = BasisState::zero(n);
    let mut phase = 0u32;
    for (_, (m, p)) in per_unit {
        // T̂² = −1.
        phase += 2 * (m / 2);
        if m % 2 == 1 {
            let (t, q) = p.apply_to_basis(state);
            state = t;
            phase += q as u32 + 1;
        }
    }
    if state != target {
        return Ok(0.0);
    }
    match (phase + 4 - gamma as u32) % 4 {
        0 => Ok(1.0),
        2 => Ok(-1.0),
        _ => Err(Error::Model("back-action bracket is not real".into())),
    }
}

/// Back-action `Σ_f Θ̃(f) ⟨0|V^{·k†}T̂^{N(f)}|0⟩` over multisets of at least two fixed terms.
fn back_action(fixed: &[Fixed], k: &MultiIndex, target: BasisState, gamma: u8, n: usize) -> Result<f64> {
    fn rec(
        fixed: &[Fixed],
        start: usize,
        left: &MultiIndex,
        chosen: &mut Vec<(usize, u32)>,
        total: u32,
        out: &mut Vec<(Vec<(usize, u32)>, u32)>,
    ) {
        if left.is_zero() {
            out.push((chosen.clone(), total));
            return;
        }
        for i in start..fixed.len() {
            if !fixed[i].k.le(left) {
                continue;
            }
            // Take `m ≥ 1` copies of entry i, then move past it.
            let mut rest = left.clone();
            let mut m = 0;
            while fixed[i].k.le(&rest) {
                rest = rest.checked_sub(&fixed[i].k).expect("checked le");
                m += 1;
                chosen.push((i, m));
                rec(fixed, i + 1, &rest, chosen, total + m, out);
                chosen.pop();
            }
        }
    }
    let mut multisets = Vec::new();
    rec(fixed, 0, k, &mut Vec::new(), 0, &mut multisets);
    let mut acc = 0.0;
    for (f, size) in multisets {
        if size < 2 {
            continue;
        }
        let mut big_theta = 1.0;
        for &(i, m) in &f {
            big_theta *= fixed[i].theta.powi(m as i32) / factorial(m);
        }
        if big_theta == 0.0 {
            continue;
        }
        acc += big_theta * bracket(fixed, &f, target, gamma, n)?;
    }
    Ok(acc)
}

fn factorial(m: u32) -> f64 {
    (1..=m).map(f64::from).product()
}

/// θ̃ for every leading slot, fixed order by order against the parent ansatz.
pub fn estimate_thetas(
    model: &HamiltonianModel,
    parent: &ProductAnsatz,
    max_order: u32,
) -> Result<HierarchyEstimates> {
    let n = model.n_qubits();
    if parent.n_qubits() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            found: parent.n_qubits(),
        });
    }
    if !parent.start_state().is_zero() {
        return Err(Error::Ansatz("hierarchy estimation needs the all-zero start state".into()));
    }
    if max_order == 0 {
        return Err(Error::InvalidArgument("max order must be at least 1".into()));
    }
    if !check_matched(parent) {
        return Err(Error::NotMatched("parent ansatz has non-compact generators".into()));
    }
    let report = check_generating(parent);
    let groups = diagrams::enumerate_leading(model, max_order)?;
    let ops = model.ops();
    let j = model.j_values();
    let mut series = PerturbationSeries::new(model);

    let mut work: Vec<(MultiIndex, Option<DiagramClass>)> = Vec::new();
    for (class, ks) in &groups {
        if !report.slots.contains_key(&class.slot()) {
            return Err(Error::MissingSlot(class.slot()));
        }
        for k in ks {
            work.push((k.clone(), Some(*class)));
        }
    }
    let leading: Vec<MultiIndex> = work.iter().map(|w| w.0.clone()).collect();
    for k in disconnected_from_leading(&ops, &leading, max_order)? {
        work.push((k, None));
    }
    work.sort_by(|a, b| a.0.order().cmp(&b.0.order()).then_with(|| b.0.cmp(&a.0)));

    let mut fixed: Vec<Fixed> = Vec::new();
    let mut disconnected = Vec::new();
    let mut theta_of: BTreeMap<MultiIndex, f64> = BTreeMap::new();
    for (k, class) in work {
        let (s, gamma) = series.state_and_phase(&k)?;
        if s.is_zero() {
            continue;
        }
        let tot = k.monomial(&j) * series.tilde_c(&k)? - back_action(&fixed, &k, s, gamma, n)?;
        let p = gamma % 2;
        let sign = if (p + 4 - gamma) % 4 == 0 { 1.0 } else { -1.0 };
        let theta = tot * sign;
        if !theta.is_finite() {
            return Err(Error::NonFinite("θ̃ estimate"));
        }
        match class {
            Some(c) => {
                theta_of.insert(k.clone(), theta);
                fixed.push(Fixed {
                    k,
                    theta,
                    slot: report.slots[&c.slot()],
                });
            }
            None => disconnected.push((k, theta)),
        }
    }

    let mut estimates = Vec::new();
    for (class, ks) in &groups {
        let slot = report.slots[&class.slot()];
        let contributions: Vec<f64> = ks.iter().map(|k| theta_of[k]).collect();
        estimates.push(ThetaEstimate {
            slot,
            leading_ks: ks.clone(),
            theta_tilde: contributions.iter().sum(),
            contributions,
            j_weight: ks.iter().map(|k| k.monomial(&j)).sum(),
            order: ks[0].order(),
        });
    }
    Ok(HierarchyEstimates {
        estimates,
        disconnected,
        max_order,
    })
}

/// Sums of two or more leading pieces with pairwise disjoint supports.
fn disconnected_from_leading(
    ops: &[PauliString],
    leading: &[MultiIndex],
    max_order: u32,
) -> Result<Vec<MultiIndex>> {
    let supports: Vec<u64> = leading
        .iter()
        .map(|k| crate::pauli::support(k, ops))
        .collect::<Result<_>>()?;
    let mut out = Vec::new();
    #[allow(clippy::too_many_arguments)]
    fn rec(
        leading: &[MultiIndex],
        supports: &[u64],
        start: usize,
        acc: &MultiIndex,
        used: u64,
        pieces: usize,
        max_order: u32,
        out: &mut Vec<MultiIndex>,
    ) {
        if pieces >= 2 {
            out.push(acc.clone());
        }
        for i in start..leading.len() {
            if supports[i] & used != 0 || acc.order() + leading[i].order() > max_order {
                continue;
            }
            rec(
                leading,
                supports,
                i + 1,
                &acc.add(&leading[i]),
                used | supports[i],
                pieces + 1,
                max_order,
                out,
            );
        }
    }
    if let Some(first) = leading.first() {
        rec(
            leading,
            &supports,
            0,
            &MultiIndex::zero(first.len()),
            0,
            0,
            max_order,
            &mut out,
        );
    }
    out.sort();
    out.dedup();
    Ok(out)
}

/// `J_{s,a} = Σ_k J^{·k}` over each class's leading multi-indices.
pub fn j_shortcut_weights(
    model: &HamiltonianModel,
    leading: &BTreeMap<DiagramClass, Vec<MultiIndex>>,
) -> BTreeMap<SlotKey, f64> {
    let j = model.j_values();
    leading
        .iter()
        .map(|(c, ks)| (c.slot(), ks.iter().map(|k| k.monomial(&j)).sum()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HierarchyMode {
    Pert,
    Rev,
    #[serde(rename = "2loc")]
    TwoLocal,
    Loc,
}

impl HierarchyMode {
    pub fn name(self) -> &'static str {
        match self {
            HierarchyMode::Pert => "pert",
            HierarchyMode::Rev => "rev",
            HierarchyMode::TwoLocal => "2loc",
            HierarchyMode::Loc => "loc",
        }
    }

    pub fn loops(self) -> bool {
        matches!(self, HierarchyMode::TwoLocal | HierarchyMode::Loc)
    }
}

impl std::str::FromStr for HierarchyMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pert" => Ok(HierarchyMode::Pert),
            "rev" => Ok(HierarchyMode::Rev),
            "2loc" => Ok(HierarchyMode::TwoLocal),
            "loc" => Ok(HierarchyMode::Loc),
            _ => Err(Error::InvalidArgument(format!(
                "unknown hierarchy mode {s:?} (expected pert, rev, 2loc or loc)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum UnitOrdering {
    /// Units in priority order.
    Hierarchy,
    /// Chosen units re-sorted by their position in the parent ansatz.
    Parent,
}

#[derive(Debug, Clone, Serialize)]
pub struct PriorityEntry {
    pub pauli: PauliString,
    pub s: BasisState,
    pub a: u8,
    pub theta_tilde: f64,
    pub j_weight: f64,
    pub leading_ks: Vec<MultiIndex>,
    pub rank: usize,
    #[serde(skip)]
    pub parent_unit: usize,
    #[serde(skip)]
    pub order: u32,
}

#[derive(Debug, Clone)]
pub struct PriorityList {
    pub mode: HierarchyMode,
    pub ordering: UnitOrdering,
    pub entries: Vec<PriorityEntry>,
}

fn same_magnitude(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()) || (a == 0.0 && b == 0.0)
}

/// Ranks estimates by `|θ̃|` (descending) and applies the mode's filter.
pub fn priority_from_estimates(
    est: &HierarchyEstimates,
    mode: HierarchyMode,
    ordering: UnitOrdering,
    tie_seed: Option<u64>,
) -> Result<PriorityList> {
    let mut items: Vec<&ThetaEstimate> = est.estimates.iter().collect();
    items.sort_by(|x, y| {
        y.theta_tilde
            .abs()
            .total_cmp(&x.theta_tilde.abs())
            .then_with(|| x.order.cmp(&y.order))
            .then_with(|| x.slot.unit.cmp(&y.slot.unit))
    });
    // Group near-equal magnitudes and order within groups by the tie policy.
    let mut ranked: Vec<&ThetaEstimate> = Vec::with_capacity(items.len());
    let mut rng = tie_seed.map(ChaCha8Rng::seed_from_u64);
    let mut i = 0;
    while i < items.len() {
        let head = items[i].theta_tilde.abs();
        let mut j = i + 1;
        while j < items.len() && same_magnitude(head, items[j].theta_tilde.abs()) {
            j += 1;
        }
        let mut group: Vec<&ThetaEstimate> = items[i..j].to_vec();
        group.sort_by_key(|e| (e.order, e.slot.unit));
        if let Some(r) = rng.as_mut() {
            group.shuffle(r);
        }
        ranked.extend(group);
        i = j;
    }
    if mode == HierarchyMode::Rev {
        ranked.reverse();
    }
    let keep = |e: &ThetaEstimate| match mode {
        HierarchyMode::Pert | HierarchyMode::Rev => true,
        HierarchyMode::TwoLocal => e.slot.pauli.weight() <= 2,
        HierarchyMode::Loc => {
            let sup = e.slot.pauli.support();
            sup.count_ones() == 2 && (sup >> sup.trailing_zeros()) == 0b11
        }
    };
    let entries: Vec<PriorityEntry> = ranked
        .into_iter()
        .filter(|e| keep(e))
        .enumerate()
        .map(|(rank, e)| PriorityEntry {
            pauli: e.slot.pauli,
            s: e.slot.s,
            a: e.slot.a,
            theta_tilde: e.theta_tilde,
            j_weight: e.j_weight,
            leading_ks: e.leading_ks.clone(),
            rank,
            parent_unit: e.slot.unit,
            order: e.order,
        })
        .collect();
    if entries.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "hierarchy mode {} selects no generators",
            mode.name()
        )));
    }
    Ok(PriorityList {
        mode,
        ordering,
        entries,
    })
}

pub fn build_priority_list(
    model: &HamiltonianModel,
    parent: &ProductAnsatz,
    max_order: u32,
    mode: HierarchyMode,
    ordering: UnitOrdering,
    tie_seed: Option<u64>,
) -> Result<PriorityList> {
    let est = estimate_thetas(model, parent, max_order)?;
    priority_from_estimates(&est, mode, ordering, tie_seed)
}

impl PriorityList {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Short tag such as `pert` or `2loc*` (asterisk for parent ordering).
    pub fn tag(&self) -> String {
        match self.ordering {
            UnitOrdering::Hierarchy => self.mode.name().to_string(),
            UnitOrdering::Parent => format!("{}*", self.mode.name()),
        }
    }

    /// First `count` selections in priority order, looping when the mode allows.
    pub fn take(&self, count: usize) -> Result<Vec<(usize, &PriorityEntry)>> {
        if count > self.entries.len() && !self.mode.loops() {
            return Err(Error::Exhausted {
                available: self.entries.len(),
                requested: count,
            });
        }
        Ok((0..count)
            .map(|i| (i / self.entries.len(), &self.entries[i % self.entries.len()]))
            .collect())
    }

    /// Ansatz of the first `count` selections; parameter `i` belongs to selection `i`.
    pub fn ansatz(&self, n_qubits: usize, count: usize) -> Result<ProductAnsatz> {
        let picks = self.take(count)?;
        let mut units: Vec<(usize, usize, AnsatzUnit)> = picks
            .iter()
            .enumerate()
            .map(|(i, (pass, e))| (e.parent_unit, *pass, AnsatzUnit::new(e.pauli, i)))
            .collect();
        if self.ordering == UnitOrdering::Parent {
            units.sort_by_key(|&(pos, pass, u)| (pos, pass, u.param));
        }
        ProductAnsatz::new(
            BasisState::zero(n_qubits),
            units.into_iter().map(|t| t.2).collect(),
            count,
        )
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.entries)?)
    }
}
