//! Pairwise Markov random fields and the brute-force enumeration oracle.
//!
//! A [`PairwiseMRF`] factorizes a joint distribution over discrete node
//! variables into strictly positive node potentials `psi_k` and edge
//! potentials `psi_ij`:
//!
//! ```text
//! P(x) = (1/Z) prod_k psi_k(x_k) prod_(i,j) psi_ij(x_i, x_j)
//! ```
//!
//! Edges are stored once, in canonical orientation `i < j`, with the
//! potential matrix laid out row-major as `n_i x n_j`. Potentials live in the
//! linear domain; energies are evaluated in the log domain on demand.
//!
//! [`JointTable`] enumerates the full product state space. It is the ground
//! truth every approximate method in this crate is tested against, so it is
//! deliberately simple and capped at desk scale.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::BeliefState;
use crate::error::{Error, Result};

/// Default cap on the number of joint configurations the oracle enumerates.
pub const DEFAULT_STATE_CAP: u64 = 10_000_000;

/// Environment variable that overrides [`DEFAULT_STATE_CAP`] in the CLI.
pub const STATE_CAP_ENV: &str = "BELIEFNET_STATE_CAP";

const ENUMERATION_CHUNK: usize = 1 << 14;

/// Node record of the model document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSpec {
    pub id: usize,
    pub cardinality: usize,
    pub potential: Vec<f64>,
}

/// Edge record of the model document. `potential` is row-major, rows indexed
/// by the state of `i`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeSpec {
    pub i: usize,
    pub j: usize,
    pub potential: Vec<Vec<f64>>,
}

/// Unvalidated model description, exactly as it appears in a model file.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub nodes: Vec<NodeSpec>,
    #[serde(default)]
    pub edges: Vec<EdgeSpec>,
}

/// A single well-formedness violation.
#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    NodeIdOutOfOrder { position: usize, id: usize },
    CardinalityTooSmall { node: usize, cardinality: usize },
    NodePotentialShape { node: usize, expected: usize, got: usize },
    NonPositiveNodePotential { node: usize, state: usize },
    UnknownNode { edge: (usize, usize), node: usize },
    SelfLoop { node: usize },
    DuplicateEdge { edge: (usize, usize) },
    EdgePotentialShape { edge: (usize, usize), expected: (usize, usize) },
    NonPositiveEdgePotential { edge: (usize, usize), row: usize, col: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::NodeIdOutOfOrder { position, id } => {
                write!(f, "node at position {position} has id {id}; ids must be 0..N-1 in order")
            }
            Violation::CardinalityTooSmall { node, cardinality } => {
                write!(f, "node {node} has cardinality {cardinality}; at least 2 required")
            }
            Violation::NodePotentialShape { node, expected, got } => write!(
                f,
                "shape mismatch at node {node}: potential has {got} entries, cardinality is {expected}"
            ),
            Violation::NonPositiveNodePotential { node, state } => {
                write!(f, "nonpositive potential at node {node} (state {state})")
            }
            Violation::UnknownNode { edge, node } => {
                write!(f, "edge ({},{}) references unknown node {node}", edge.0, edge.1)
            }
            Violation::SelfLoop { node } => write!(f, "self-loop at node {node}"),
            Violation::DuplicateEdge { edge } => {
                write!(f, "duplicate edge ({},{})", edge.0, edge.1)
            }
            Violation::EdgePotentialShape { edge, expected } => write!(
                f,
                "shape mismatch at edge ({},{}): expected {}x{} potential",
                edge.0, edge.1, expected.0, expected.1
            ),
            Violation::NonPositiveEdgePotential { edge, row, col } => write!(
                f,
                "nonpositive potential at edge ({},{}) entry [{row}][{col}]",
                edge.0, edge.1
            ),
        }
    }
}

/// Result of [`validate`]: empty iff the model is well-formed.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn messages(&self) -> Vec<String> {
        self.violations.iter().map(ToString::to_string).collect()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.messages().join("; "))
    }
}

fn positive(v: f64) -> bool {
    v.is_finite() && v > 0.0
}

/// Checks a model description for nonpositive potentials, shape mismatches,
/// self-loops and duplicate edges. Edges `(i,j)` and `(j,i)` name the same
/// undirected edge.
pub fn validate(spec: &ModelSpec) -> ValidationReport {
    let mut violations = Vec::new();
    let n = spec.nodes.len();
    for (position, node) in spec.nodes.iter().enumerate() {
        if node.id != position {
            violations.push(Violation::NodeIdOutOfOrder { position, id: node.id });
        }
        if node.cardinality < 2 {
            violations.push(Violation::CardinalityTooSmall {
                node: position,
                cardinality: node.cardinality,
            });
        }
        if node.potential.len() != node.cardinality {
            violations.push(Violation::NodePotentialShape {
                node: position,
                expected: node.cardinality,
                got: node.potential.len(),
            });
        }
        for (state, &v) in node.potential.iter().enumerate() {
            if !positive(v) {
                violations.push(Violation::NonPositiveNodePotential { node: position, state });
            }
        }
    }

    let mut seen = std::collections::HashSet::new();
    for edge in &spec.edges {
        let label = (edge.i, edge.j);
        let mut endpoints_ok = true;
        for node in [edge.i, edge.j] {
            if node >= n {
                violations.push(Violation::UnknownNode { edge: label, node });
                endpoints_ok = false;
            }
        }
        if edge.i == edge.j {
            violations.push(Violation::SelfLoop { node: edge.i });
            continue;
        }
        let key = (edge.i.min(edge.j), edge.i.max(edge.j));
        if !seen.insert(key) {
            violations.push(Violation::DuplicateEdge { edge: key });
        }
        if !endpoints_ok {
            continue;
        }
        let rows = spec.nodes[edge.i].cardinality;
        let cols = spec.nodes[edge.j].cardinality;
        if edge.potential.len() != rows || edge.potential.iter().any(|r| r.len() != cols) {
            violations.push(Violation::EdgePotentialShape {
                edge: label,
                expected: (rows, cols),
            });
        }
        for (row, values) in edge.potential.iter().enumerate() {
            for (col, &v) in values.iter().enumerate() {
                if !positive(v) {
                    violations.push(Violation::NonPositiveEdgePotential { edge: key, row, col });
                }
            }
        }
    }
    ValidationReport { violations }
}

/// An undirected edge in canonical orientation `i < j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    /// Row-major `n_i x n_j` potential.
    pub potential: Vec<f64>,
    cols: usize,
}

impl Edge {
    #[inline]
    pub fn value(&self, xi: usize, xj: usize) -> f64 {
        self.potential[xi * self.cols + xj]
    }

    pub fn rows(&self) -> usize {
        self.potential.len() / self.cols
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// The other endpoint.
    pub fn other(&self, node: usize) -> usize {
        if node == self.i {
            self.j
        } else {
            self.i
        }
    }

    /// Potential value with the state of `node` given first.
    #[inline]
    pub fn value_from(&self, node: usize, x_node: usize, x_other: usize) -> f64 {
        if node == self.i {
            self.value(x_node, x_other)
        } else {
            self.value(x_other, x_node)
        }
    }

    /// Matrix as nested rows.
    pub fn rows_vec(&self) -> Vec<Vec<f64>> {
        self.potential.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }
}

/// Neighbor entry in the adjacency list.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Neighbor {
    pub node: usize,
    pub edge: usize,
}

/// A validated pairwise Markov random field. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PairwiseMRF {
    node_potentials: Vec<Vec<f64>>,
    edges: Vec<Edge>,
    adjacency: Vec<Vec<Neighbor>>,
}

impl PairwiseMRF {
    /// Builds a model from node potentials and `(i, j, matrix)` edges. The
    /// matrix rows are indexed by the state of `i`; edges given as `i > j`
    /// are stored transposed.
    pub fn new(node_potentials: Vec<Vec<f64>>, edges: Vec<(usize, usize, Vec<Vec<f64>>)>) -> Result<Self> {
        let spec = ModelSpec {
            nodes: node_potentials
                .into_iter()
                .enumerate()
                .map(|(id, potential)| NodeSpec {
                    id,
                    cardinality: potential.len(),
                    potential,
                })
                .collect(),
            edges: edges
                .into_iter()
                .map(|(i, j, potential)| EdgeSpec { i, j, potential })
                .collect(),
        };
        Self::from_spec(&spec)
    }

    pub fn from_spec(spec: &ModelSpec) -> Result<Self> {
        let report = validate(spec);
        if !report.is_empty() {
            return Err(Error::InvalidModel(report));
        }
        let node_potentials: Vec<Vec<f64>> = spec.nodes.iter().map(|n| n.potential.clone()).collect();
        let mut adjacency = vec![Vec::new(); node_potentials.len()];
        let mut edges = Vec::with_capacity(spec.edges.len());
        for (index, e) in spec.edges.iter().enumerate() {
            let (i, j) = (e.i.min(e.j), e.i.max(e.j));
            let (rows, cols) = (node_potentials[i].len(), node_potentials[j].len());
            let mut potential = Vec::with_capacity(rows * cols);
            for a in 0..rows {
                for b in 0..cols {
                    potential.push(if e.i < e.j { e.potential[a][b] } else { e.potential[b][a] });
                }
            }
            edges.push(Edge { i, j, potential, cols });
            adjacency[i].push(Neighbor { node: j, edge: index });
            adjacency[j].push(Neighbor { node: i, edge: index });
        }
        Ok(Self {
            node_potentials,
            edges,
            adjacency,
        })
    }

    /// Model document with canonical edge orientation.
    pub fn to_spec(&self) -> ModelSpec {
        ModelSpec {
            nodes: self
                .node_potentials
                .iter()
                .enumerate()
                .map(|(id, p)| NodeSpec {
                    id,
                    cardinality: p.len(),
                    potential: p.clone(),
                })
                .collect(),
            edges: self
                .edges
                .iter()
                .map(|e| EdgeSpec {
                    i: e.i,
                    j: e.j,
                    potential: e.rows_vec(),
                })
                .collect(),
        }
    }

    pub fn num_nodes(&self) -> usize {
        self.node_potentials.len()
    }

    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn cardinality(&self, k: usize) -> usize {
        self.node_potentials[k].len()
    }

    pub fn cardinalities(&self) -> Vec<usize> {
        self.node_potentials.iter().map(Vec::len).collect()
    }

    pub fn node_potential(&self, k: usize) -> &[f64] {
        &self.node_potentials[k]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn neighbors(&self, k: usize) -> &[Neighbor] {
        &self.adjacency[k]
    }

    /// Degree `q_k = |N(k)|`.
    pub fn degree(&self, k: usize) -> usize {
        self.adjacency[k].len()
    }

    pub fn edge_between(&self, a: usize, b: usize) -> Option<usize> {
        self.adjacency
            .get(a)?
            .iter()
            .find(|nb| nb.node == b)
            .map(|nb| nb.edge)
    }

    /// Number of joint configurations, saturating at `u128::MAX`.
    pub fn state_space_size(&self) -> u128 {
        self.node_potentials
            .iter()
            .fold(1u128, |acc, p| acc.saturating_mul(p.len() as u128))
    }

    /// True when the graph has no cycles (a forest).
    pub fn is_forest(&self) -> bool {
        let mut parent: Vec<usize> = (0..self.num_nodes()).collect();
        fn find(parent: &mut [usize], mut x: usize) -> usize {
            while parent[x] != x {
                parent[x] = parent[parent[x]];
                x = parent[x];
            }
            x
        }
        for e in &self.edges {
            let (a, b) = (find(&mut parent, e.i), find(&mut parent, e.j));
            if a == b {
                return false;
            }
            parent[a] = b;
        }
        true
    }

    /// Copy with the node potentials replaced. Shapes must match.
    pub fn with_node_potential(&self, k: usize, potential: Vec<f64>) -> Result<Self> {
        let mut spec = self.to_spec();
        spec.nodes[k].potential = potential;
        Self::from_spec(&spec)
    }

    /// Relabels nodes: new node `p` is old node `order[p]`.
    pub fn relabel(&self, order: &[usize]) -> Result<Self> {
        let n = self.num_nodes();
        let mut inverse = vec![usize::MAX; n];
        if order.len() != n {
            return Err(Error::ShapeMismatch("relabeling must be a permutation".into()));
        }
        for (new, &old) in order.iter().enumerate() {
            if old >= n || inverse[old] != usize::MAX {
                return Err(Error::ShapeMismatch("relabeling must be a permutation".into()));
            }
            inverse[old] = new;
        }
        let node_potentials = order.iter().map(|&old| self.node_potentials[old].clone()).collect();
        let edges = self
            .edges
            .iter()
            .map(|e| (inverse[e.i], inverse[e.j], e.rows_vec()))
            .collect();
        Self::new(node_potentials, edges)
    }

    /// Log potential tables: `(ln psi_k, ln psi_ij)` with the same layout as
    /// the linear ones.
    pub fn log_potentials(&self) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
        let nodes = self
            .node_potentials
            .iter()
            .map(|p| p.iter().map(|v| v.ln()).collect())
            .collect();
        let edges = self
            .edges
            .iter()
            .map(|e| e.potential.iter().map(|v| v.ln()).collect())
            .collect();
        (nodes, edges)
    }
}

/// One state index per node.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Assignment(pub Vec<usize>);

impl Assignment {
    pub fn states(&self) -> &[usize] {
        &self.0
    }

    pub fn check(&self, mrf: &PairwiseMRF) -> Result<()> {
        if self.0.len() != mrf.num_nodes() {
            return Err(Error::AssignmentLength {
                expected: mrf.num_nodes(),
                got: self.0.len(),
            });
        }
        for (node, &state) in self.0.iter().enumerate() {
            if state >= mrf.cardinality(node) {
                return Err(Error::StateOutOfRange {
                    node,
                    state,
                    cardinality: mrf.cardinality(node),
                });
            }
        }
        Ok(())
    }
}

impl From<Vec<usize>> for Assignment {
    fn from(v: Vec<usize>) -> Self {
        Assignment(v)
    }
}

/// `E(x) = -sum_k ln psi_k(x_k) - sum_(i,j) ln psi_ij(x_i, x_j)`.
pub fn energy(mrf: &PairwiseMRF, x: &Assignment) -> Result<f64> {
    x.check(mrf)?;
    let s = x.states();
    let node: f64 = (0..mrf.num_nodes()).map(|k| mrf.node_potential(k)[s[k]].ln()).sum();
    let edge: f64 = mrf.edges().iter().map(|e| e.value(s[e.i], s[e.j]).ln()).sum();
    Ok(-(node + edge))
}

/// Partition value `Z` and the Helmholtz free energy `F = -ln Z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Partition {
    pub z: f64,
    pub log_z: f64,
}

impl Partition {
    pub fn free_energy(&self) -> f64 {
        -self.log_z
    }
}

/// Dense joint distribution over the product state space. Node 0 varies
/// fastest in the flat index.
#[derive(Debug, Clone)]
pub struct JointTable {
    cardinalities: Vec<usize>,
    probabilities: Vec<f64>,
    log_z: f64,
}

fn check_cap(mrf: &PairwiseMRF, cap: u64) -> Result<usize> {
    let states = mrf.state_space_size();
    if states > cap as u128 {
        return Err(Error::StateCapExceeded { states, cap });
    }
    Ok(states as usize)
}

fn decode_into(mut index: usize, cards: &[usize], out: &mut [usize]) {
    for (slot, &c) in out.iter_mut().zip(cards) {
        *slot = index % c;
        index /= c;
    }
}

fn advance(x: &mut [usize], cards: &[usize]) {
    for (slot, &c) in x.iter_mut().zip(cards) {
        *slot += 1;
        if *slot < c {
            return;
        }
        *slot = 0;
    }
}

impl JointTable {
    /// Enumerates every configuration. Fails fast when the state space
    /// exceeds `cap`.
    pub fn enumerate(mrf: &PairwiseMRF, cap: u64) -> Result<Self> {
        let total = check_cap(mrf, cap)?;
        let cards = mrf.cardinalities();
        let (log_nodes, log_edges) = mrf.log_potentials();
        let edges: Vec<(usize, usize, usize)> = mrf.edges().iter().map(|e| (e.i, e.j, e.cols())).collect();

        let mut weights = vec![0.0f64; total];
        weights
            .par_chunks_mut(ENUMERATION_CHUNK)
            .enumerate()
            .for_each(|(chunk, out)| {
                let mut x = vec![0usize; cards.len()];
                decode_into(chunk * ENUMERATION_CHUNK, &cards, &mut x);
                for slot in out.iter_mut() {
                    let mut w = 0.0;
                    for (k, table) in log_nodes.iter().enumerate() {
                        w += table[x[k]];
                    }
                    for ((i, j, cols), table) in edges.iter().zip(&log_edges) {
                        w += table[x[*i] * cols + x[*j]];
                    }
                    *slot = w;
                    advance(&mut x, &cards);
                }
            });

        let max = weights
            .par_chunks(ENUMERATION_CHUNK)
            .map(|c| c.iter().copied().fold(f64::NEG_INFINITY, f64::max))
            .collect::<Vec<_>>()
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        // Fixed chunking keeps the summation order independent of the thread count.
        let partial: Vec<f64> = weights
            .par_chunks_mut(ENUMERATION_CHUNK)
            .map(|c| {
                let mut s = 0.0;
                for w in c.iter_mut() {
                    *w = (*w - max).exp();
                    s += *w;
                }
                s
            })
            .collect();
        let sum: f64 = partial.iter().sum();
        let inv = 1.0 / sum;
        weights.par_iter_mut().for_each(|w| *w *= inv);
        Ok(Self {
            cardinalities: cards,
            probabilities: weights,
            log_z: max + sum.ln(),
        })
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn cardinalities(&self) -> &[usize] {
        &self.cardinalities
    }

    pub fn partition(&self) -> Partition {
        Partition {
            z: self.log_z.exp(),
            log_z: self.log_z,
        }
    }

    pub fn index_of(&self, x: &Assignment) -> usize {
        let mut index = 0;
        let mut stride = 1;
        for (&s, &c) in x.states().iter().zip(&self.cardinalities) {
            index += s * stride;
            stride *= c;
        }
        index
    }

    pub fn assignment_at(&self, index: usize) -> Assignment {
        let mut x = vec![0; self.cardinalities.len()];
        decode_into(index, &self.cardinalities, &mut x);
        Assignment(x)
    }

    pub fn probability(&self, x: &Assignment) -> f64 {
        self.probabilities[self.index_of(x)]
    }

    /// Iterates `(assignment, probability)` in flat-index order.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut x = vec![0usize; self.cardinalities.len()];
        for &p in &self.probabilities {
            f(&x, p);
            advance(&mut x, &self.cardinalities);
        }
    }

    /// Node and edge marginals of the table.
    pub fn marginals(&self, mrf: &PairwiseMRF) -> BeliefState {
        let mut nodes: Vec<Vec<f64>> = self.cardinalities.iter().map(|&c| vec![0.0; c]).collect();
        let mut edges: Vec<Vec<f64>> = mrf.edges().iter().map(|e| vec![0.0; e.potential.len()]).collect();
        self.for_each(|x, p| {
            for (k, slot) in nodes.iter_mut().enumerate() {
                slot[x[k]] += p;
            }
            for (e, slot) in mrf.edges().iter().zip(edges.iter_mut()) {
                slot[x[e.i] * e.cols() + x[e.j]] += p;
            }
        });
        BeliefState::with_edges(nodes, edges)
    }

    /// Configuration of largest probability; lowest flat index on ties.
    pub fn argmax(&self) -> Assignment {
        let mut best = 0;
        for (i, &p) in self.probabilities.iter().enumerate() {
            if p > self.probabilities[best] {
                best = i;
            }
        }
        self.assignment_at(best)
    }
}

/// `P(x) = exp(-E(x)) / Z`, enumerating `Z` under the default cap.
pub fn joint_probability(mrf: &PairwiseMRF, x: &Assignment) -> Result<f64> {
    let e = energy(mrf, x)?;
    let partition = partition_function(mrf)?;
    Ok((-e - partition.log_z).exp())
}

/// Exact node and edge marginals by enumeration under the default cap.
pub fn exact_marginals(mrf: &PairwiseMRF) -> Result<BeliefState> {
    Ok(JointTable::enumerate(mrf, DEFAULT_STATE_CAP)?.marginals(mrf))
}

/// `Z` and `F = -ln Z` by enumeration under the default cap.
pub fn partition_function(mrf: &PairwiseMRF) -> Result<Partition> {
    Ok(JointTable::enumerate(mrf, DEFAULT_STATE_CAP)?.partition())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn two_node(coupling: Vec<Vec<f64>>) -> PairwiseMRF {
        PairwiseMRF::new(vec![vec![1.0, 1.0], vec![1.0, 1.0]], vec![(0, 1, coupling)]).unwrap()
    }

    #[test]
    fn all_ones_chain_is_valid() {
        let spec = two_node(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).to_spec();
        assert!(validate(&spec).is_empty());
    }

    #[test]
    fn zero_edge_entry_is_reported() {
        let mut spec = two_node(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).to_spec();
        spec.edges[0].potential[1][0] = 0.0;
        let report = validate(&spec);
        assert_eq!(report.violations.len(), 1);
        assert!(report.to_string().starts_with("nonpositive potential at edge (0,1)"));
    }

    #[test]
    fn reversed_duplicate_edge_is_reported() {
        let mut spec = two_node(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).to_spec();
        spec.edges.push(EdgeSpec {
            i: 1,
            j: 0,
            potential: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        });
        let report = validate(&spec);
        assert!(report.messages().iter().any(|m| m.contains("duplicate edge")));
    }

    #[test]
    fn shape_and_loop_violations() {
        let mut spec = two_node(vec![vec![1.0, 1.0], vec![1.0, 1.0]]).to_spec();
        spec.edges[0].potential.pop();
        spec.edges.push(EdgeSpec {
            i: 1,
            j: 1,
            potential: vec![vec![1.0, 1.0], vec![1.0, 1.0]],
        });
        spec.nodes[0].potential.push(1.0);
        let messages = validate(&spec).messages();
        assert!(messages.iter().any(|m| m.contains("shape mismatch at edge")));
        assert!(messages.iter().any(|m| m.contains("self-loop")));
        assert!(messages.iter().any(|m| m.contains("shape mismatch at node 0")));
    }

    #[test]
    fn reversed_edge_is_transposed() {
        let m = PairwiseMRF::new(
            vec![vec![1.0, 1.0], vec![1.0, 1.0, 1.0]],
            vec![(1, 0, vec![vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]])],
        )
        .unwrap();
        let e = m.edge(0);
        assert_eq!((e.i, e.j), (0, 1));
        assert_eq!(e.value(1, 2), 6.0);
        assert_eq!(e.value(0, 1), 3.0);
        assert_eq!(e.value_from(1, 2, 0), 5.0);
    }

    #[test]
    fn energy_examples() {
        let ones = two_node(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert_eq!(energy(&ones, &Assignment(vec![1, 0])).unwrap(), 0.0);

        let e = std::f64::consts::E;
        let single = PairwiseMRF::new(vec![vec![e, e * e]], vec![]).unwrap();
        assert!((energy(&single, &Assignment(vec![1])).unwrap() + 2.0).abs() < 1e-15);

        let m = PairwiseMRF::new(
            vec![vec![1.0, 2.0], vec![3.0, 1.0]],
            vec![(0, 1, vec![vec![1.0, 1.0], vec![1.0, 5.0]])],
        )
        .unwrap();
        let expected = -(2f64.ln() + 5f64.ln());
        assert!((energy(&m, &Assignment(vec![1, 1])).unwrap() - expected).abs() < 1e-12);
        assert!((expected + std::f64::consts::LN_10).abs() < 1e-12);
    }

    #[test]
    fn energy_rejects_bad_assignment() {
        let m = two_node(vec![vec![1.0, 1.0], vec![1.0, 1.0]]);
        assert!(matches!(
            energy(&m, &Assignment(vec![0])),
            Err(Error::AssignmentLength { .. })
        ));
        assert!(matches!(
            energy(&m, &Assignment(vec![0, 2])),
            Err(Error::StateOutOfRange { .. })
        ));
    }

    #[test]
    fn joint_probability_examples() {
        let single = PairwiseMRF::new(vec![vec![1.0, 1.0]], vec![]).unwrap();
        assert!((joint_probability(&single, &Assignment(vec![1])).unwrap() - 0.5).abs() < 1e-15);

        let indep = PairwiseMRF::new(vec![vec![1.0, 3.0], vec![1.0, 1.0]], vec![]).unwrap();
        let p = joint_probability(&indep, &Assignment(vec![1, 0])).unwrap();
        assert!((p - 3.0 / 8.0).abs() < 1e-15);
    }

    #[test]
    fn marginal_examples() {
        let single = PairwiseMRF::new(vec![vec![2.0, 2.0]], vec![]).unwrap();
        assert_eq!(exact_marginals(&single).unwrap().node(0), &[0.5, 0.5]);

        let m = two_node(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        let b = exact_marginals(&m).unwrap();
        for k in 0..2 {
            assert!((b.node(k)[0] - 0.5).abs() < 1e-15);
        }
        let pair = b.edge(0).unwrap();
        let expected = [1.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 1.0 / 3.0];
        for (a, e) in pair.iter().zip(expected) {
            assert!((a - e).abs() < 1e-15);
        }

        let disconnected = PairwiseMRF::new(vec![vec![1.0, 3.0], vec![1.0, 1.0]], vec![]).unwrap();
        let b = exact_marginals(&disconnected).unwrap();
        assert!((b.node(0)[0] - 0.25).abs() < 1e-15 && (b.node(0)[1] - 0.75).abs() < 1e-15);
    }

    #[test]
    fn partition_examples() {
        let single = PairwiseMRF::new(vec![vec![1.0, 1.0]], vec![]).unwrap();
        let p = partition_function(&single).unwrap();
        assert!((p.z - 2.0).abs() < 1e-14);
        assert!((p.free_energy() + 2f64.ln()).abs() < 1e-15);

        let m = two_node(vec![vec![2.0, 1.0], vec![1.0, 2.0]]);
        assert!((partition_function(&m).unwrap().z - 6.0).abs() < 1e-13);

        let ones = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let triangle = PairwiseMRF::new(
            vec![vec![1.0, 1.0]; 3],
            vec![(0, 1, ones.clone()), (1, 2, ones.clone()), (0, 2, ones)],
        )
        .unwrap();
        assert!((partition_function(&triangle).unwrap().z - 8.0).abs() < 1e-13);
    }

    #[test]
    fn cap_is_enforced() {
        let m = PairwiseMRF::new(vec![vec![1.0, 1.0]; 30], vec![]).unwrap();
        assert!(matches!(
            JointTable::enumerate(&m, DEFAULT_STATE_CAP),
            Err(Error::StateCapExceeded { .. })
        ));
        let small = PairwiseMRF::new(vec![vec![1.0, 1.0]; 3], vec![]).unwrap();
        assert!(JointTable::enumerate(&small, 7).is_err());
        assert!(JointTable::enumerate(&small, 8).is_ok());
    }

    #[test]
    fn index_roundtrip() {
        let m = PairwiseMRF::new(vec![vec![1.0, 1.0], vec![1.0; 3], vec![1.0; 4]], vec![]).unwrap();
        let t = JointTable::enumerate(&m, DEFAULT_STATE_CAP).unwrap();
        for i in 0..t.len() {
            assert_eq!(t.index_of(&t.assignment_at(i)), i);
        }
    }

    #[test]
    fn forest_detection() {
        let ones = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let chain = PairwiseMRF::new(
            vec![vec![1.0, 1.0]; 3],
            vec![(0, 1, ones.clone()), (1, 2, ones.clone())],
        )
        .unwrap();
        assert!(chain.is_forest());
        let cycle = PairwiseMRF::new(
            vec![vec![1.0, 1.0]; 3],
            vec![(0, 1, ones.clone()), (1, 2, ones.clone()), (2, 0, ones)],
        )
        .unwrap();
        assert!(!cycle.is_forest());
    }
}
