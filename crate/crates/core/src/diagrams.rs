//! Perturbative diagrams: bipartite graphs between qubits and coupling applications.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Result, SlotKey};
use crate::pauli::{BasisState, MultiIndex, Pauli, PauliString};
use crate::perturbation::{HamiltonianModel, PerturbationSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum EdgeColor {
    /// X factor.
    Blue,
    /// Y factor.
    Red,
    /// Z factor.
    Black,
}

impl EdgeColor {
    pub fn name(self) -> &'static str {
        match self {
            EdgeColor::Blue => "blue",
            EdgeColor::Red => "red",
            EdgeColor::Black => "black",
        }
    }

    fn from_name(s: &str) -> Option<Self> {
        match s {
            "blue" => Some(EdgeColor::Blue),
            "red" => Some(EdgeColor::Red),
            "black" => Some(EdgeColor::Black),
            _ => None,
        }
    }
}

/// One application of a coupling operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Square {
    pub coupling: usize,
    pub repetition: u32,
}

impl Square {
    fn label(&self) -> String {
        format!("v{}_{}", self.coupling, self.repetition)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    pub square: usize,
    pub qubit: usize,
    pub color: EdgeColor,
}

#[derive(Debug, Clone)]
pub struct Diagram {
    pub k: MultiIndex,
    pub n_qubits: usize,
    pub squares: Vec<Square>,
    pub edges: Vec<Edge>,
    /// Black (1) iff an odd number of X/Y edges touch the qubit.
    pub qubit_colors: BasisState,
    pub connected: bool,
    pub red_parity: u8,
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut a: usize) -> usize {
        while self.parent[a] != a {
            self.parent[a] = self.parent[self.parent[a]];
            a = self.parent[a];
        }
        a
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra.max(rb)] = ra.min(rb);
        }
    }
}

/// Connected components of the activated couplings of `k`, as multi-indices.
pub fn components(ops: &[PauliString], k: &MultiIndex) -> Vec<MultiIndex> {
    let act = k.activated();
    let mut uf = UnionFind::new(act.len());
    for i in 0..act.len() {
        for j in i + 1..act.len() {
            if ops[act[i]].support() & ops[act[j]].support() != 0 {
                uf.union(i, j);
            }
        }
    }
    let mut groups: BTreeMap<usize, Vec<u32>> = BTreeMap::new();
    for (i, &b) in act.iter().enumerate() {
        let root = uf.find(i);
        groups.entry(root).or_insert_with(|| vec![0; k.len()])[b] = k.get(b);
    }
    groups.into_values().map(MultiIndex::new).collect()
}

pub fn build_diagram(model: &HamiltonianModel, k: &MultiIndex) -> Result<Diagram> {
    let ops = model.ops();
    let n = model.n_qubits();
    if k.len() != ops.len() {
        return Err(crate::Error::DimensionMismatch {
            expected: ops.len(),
            found: k.len(),
        });
    }
    let mut squares = Vec::new();
    let mut edges = Vec::new();
    let mut flips = 0u64;
    let mut reds = 0u32;
    for (beta, op) in ops.iter().enumerate() {
        for r in 0..k.get(beta) {
            let sq = squares.len();
            squares.push(Square {
                coupling: beta,
                repetition: r,
            });
            for q in 0..n {
                let color = match op.factor(q) {
                    Pauli::I => continue,
                    Pauli::X => EdgeColor::Blue,
                    Pauli::Y => EdgeColor::Red,
                    Pauli::Z => EdgeColor::Black,
                };
                if color != EdgeColor::Black {
                    flips ^= 1 << q;
                }
                if color == EdgeColor::Red {
                    reds += 1;
                }
                edges.push(Edge { square: sq, qubit: q, color });
            }
        }
    }
    let connected = components(&ops, k).len() <= 1;
    Ok(Diagram {
        k: k.clone(),
        n_qubits: n,
        squares,
        edges,
        qubit_colors: BasisState::from_bits(n, flips),
        connected,
        red_parity: (reds % 2) as u8,
    })
}

/// Splits `k` into two parts with disjoint supports when its diagram is disconnected.
pub fn is_disconnected_split(
    model: &HamiltonianModel,
    k: &MultiIndex,
) -> Option<(MultiIndex, MultiIndex)> {
    let comps = components(&model.ops(), k);
    if comps.len() < 2 {
        return None;
    }
    let first = comps[0].clone();
    let rest = k.checked_sub(&first).expect("component is below k");
    Some((first, rest))
}

/// Diagram target: excited qubits and red-edge parity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DiagramClass {
    pub s: BasisState,
    pub parity: u8,
}

impl DiagramClass {
    /// The generator slot a diagram of this class is fixed against.
    ///
    /// `e^{iθT}` contributes `iT|0⟩` at first order, so a parity-`p` diagram needs a
    /// generator with `T|0⟩ ∝ i^{p+1}|s⟩`.
    pub fn slot(&self) -> SlotKey {
        SlotKey {
            s: self.s,
            a: (self.parity + 1) % 2,
        }
    }
}

/// Connected subsets of the coupling overlap graph with at most `max_size` members.
fn connected_coupling_sets(ops: &[PauliString], max_size: usize) -> Vec<Vec<usize>> {
    let nc = ops.len();
    let adj: Vec<Vec<usize>> = (0..nc)
        .map(|a| {
            (0..nc)
                .filter(|&b| b != a && ops[a].support() & ops[b].support() != 0)
                .collect()
        })
        .collect();
    let mut out = Vec::new();
    // Exhaustive, duplicate-free extension (each set is grown from its minimum element).
    fn extend(
        adj: &[Vec<usize>],
        set: &mut Vec<usize>,
        ext: Vec<usize>,
        root: usize,
        max_size: usize,
        out: &mut Vec<Vec<usize>>,
    ) {
        let mut s = set.clone();
        s.sort_unstable();
        out.push(s);
        if set.len() == max_size {
            return;
        }
        let mut ext = ext;
        while let Some(w) = ext.pop() {
            let mut next = ext.clone();
            for &u in &adj[w] {
                if u > root
                    && !set.contains(&u)
                    && !next.contains(&u)
                    && !set.iter().any(|&v| adj[v].contains(&u))
                {
                    next.push(u);
                }
            }
            set.push(w);
            extend(adj, set, next, root, max_size, out);
            set.pop();
        }
    }
    for root in 0..nc {
        let ext: Vec<usize> = adj[root].iter().copied().filter(|&u| u > root).collect();
        extend(&adj, &mut vec![root], ext, root, max_size, &mut out);
    }
    out
}

/// Every connected `k` with `1 ≤ |k| ≤ max_order`.
pub fn connected_indices(model: &HamiltonianModel, max_order: u32) -> Vec<MultiIndex> {
    let ops = model.ops();
    let nc = ops.len();
    let mut out = Vec::new();
    for set in connected_coupling_sets(&ops, max_order as usize) {
        // Distribute the remaining order over the activated couplings.
        let spare = max_order - set.len() as u32;
        let mut counts = vec![0u32; nc];
        fn fill(
            set: &[usize],
            pos: usize,
            left: u32,
            counts: &mut Vec<u32>,
            out: &mut Vec<MultiIndex>,
        ) {
            if pos == set.len() {
                out.push(MultiIndex::new(counts.clone()));
                return;
            }
            for extra in 0..=left {
                counts[set[pos]] = 1 + extra;
                fill(set, pos + 1, left - extra, counts, out);
            }
            counts[set[pos]] = 0;
        }
        fill(&set, 0, spare, &mut counts, &mut out);
    }
    out.sort_by(|a, b| a.order().cmp(&b.order()).then_with(|| b.cmp(a)));
    out
}

/// Leading diagrams grouped by class; only minimal-order connected members are kept.
pub fn enumerate_leading(
    model: &HamiltonianModel,
    max_order: u32,
) -> Result<BTreeMap<DiagramClass, Vec<MultiIndex>>> {
    let mut series = PerturbationSeries::new(model);
    let mut groups: BTreeMap<DiagramClass, Vec<MultiIndex>> = BTreeMap::new();
    for k in connected_indices(model, max_order) {
        let (s, g) = series.state_and_phase(&k)?;
        if s.is_zero() {
            continue;
        }
        let class = DiagramClass { s, parity: g % 2 };
        let entry = groups.entry(class).or_default();
        match entry.first().map(|f| f.order()) {
            Some(o) if o < k.order() => {}
            Some(o) if o > k.order() => *entry = vec![k],
            _ => entry.push(k),
        }
    }
    Ok(groups)
}

#[derive(Debug, Clone, Serialize)]
pub struct LeadingGroup {
    pub s: BasisState,
    pub a: u8,
    pub red_parity: u8,
    pub k_list: Vec<MultiIndex>,
    pub order: u32,
}

pub fn leading_groups(groups: &BTreeMap<DiagramClass, Vec<MultiIndex>>) -> Vec<LeadingGroup> {
    let mut out: Vec<LeadingGroup> = groups
        .iter()
        .map(|(c, ks)| LeadingGroup {
            s: c.s,
            a: c.slot().a,
            red_parity: c.parity,
            k_list: ks.clone(),
            order: ks[0].order(),
        })
        .collect();
    out.sort_by(|a, b| a.order.cmp(&b.order).then_with(|| b.k_list.cmp(&a.k_list)));
    out
}

/// File-name friendly label, e.g. `1-0-2`.
pub fn k_label(k: &MultiIndex) -> String {
    k.counts()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join("-")
}

pub fn export_dot(d: &Diagram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph \"k_{}\" {{", k_label(&d.k));
    for q in 0..d.n_qubits {
        let (fill, font) = if d.qubit_colors.bit(q) {
            ("black", "white")
        } else {
            ("white", "black")
        };
        let _ = writeln!(
            out,
            "  q{q} [shape=circle, style=filled, fillcolor={fill}, fontcolor={font}, label=\"{}\"];",
            q + 1
        );
    }
    for sq in &d.squares {
        let _ = writeln!(
            out,
            "  {} [shape=square, label=\"V{}\"];",
            sq.label(),
            sq.coupling + 1
        );
    }
    for e in &d.edges {
        let _ = writeln!(
            out,
            "  {} -> q{} [color={}];",
            d.squares[e.square].label(),
            e.qubit,
            e.color.name()
        );
    }
    out.push_str("}\n");
    out
}

/// Edges `(square label, qubit, colour)` of a DOT text written by [`export_dot`].
pub fn parse_dot_edges(dot: &str) -> Vec<(String, usize, EdgeColor)> {
    let mut out = Vec::new();
    for line in dot.lines() {
        let Some((from, rest)) = line.trim().split_once(" -> ") else {
            continue;
        };
        let Some((to, attrs)) = rest.split_once(' ') else {
            continue;
        };
        let Some(q) = to.strip_prefix('q').and_then(|v| v.parse().ok()) else {
            continue;
        };
        let color = attrs
            .split_once("color=")
            .and_then(|(_, c)| EdgeColor::from_name(c.trim_end_matches("];")));
        if let Some(color) = color {
            out.push((from.to_string(), q, color));
        }
    }
    out
}
