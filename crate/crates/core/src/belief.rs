//! Node and pairwise belief containers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::PairwiseMRF;

/// Per-node simplex vectors and, optionally, per-edge joint beliefs laid out
/// like the corresponding edge potential (row-major, rows indexed by the
/// state of the lower-numbered endpoint).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeliefState {
    nodes: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<Vec<f64>>>,
}

impl BeliefState {
    pub fn node_only(nodes: Vec<Vec<f64>>) -> Self {
        Self { nodes, edges: None }
    }

    pub fn with_edges(nodes: Vec<Vec<f64>>, edges: Vec<Vec<f64>>) -> Self {
        Self {
            nodes,
            edges: Some(edges),
        }
    }

    /// Uniform node beliefs and product (uniform) edge beliefs.
    pub fn uniform(mrf: &PairwiseMRF) -> Self {
        let nodes = mrf
            .cardinalities()
            .into_iter()
            .map(|c| vec![1.0 / c as f64; c])
            .collect();
        let edges = mrf
            .edges()
            .iter()
            .map(|e| vec![1.0 / e.potential.len() as f64; e.potential.len()])
            .collect();
        Self::with_edges(nodes, edges)
    }

    pub fn nodes(&self) -> &[Vec<f64>] {
        &self.nodes
    }

    pub fn node(&self, k: usize) -> &[f64] {
        &self.nodes[k]
    }

    pub fn edges(&self) -> Option<&[Vec<f64>]> {
        self.edges.as_deref()
    }

    pub fn edge(&self, e: usize) -> Option<&[f64]> {
        self.edges.as_ref().map(|v| v[e].as_slice())
    }

    pub fn into_nodes(self) -> Vec<Vec<f64>> {
        self.nodes
    }

    pub fn without_edges(&self) -> Self {
        Self::node_only(self.nodes.clone())
    }

    /// Checks that every node vector is in the simplex and every edge matrix
    /// sums to one, within `tol`.
    pub fn check_simplex(&self, tol: f64) -> Result<()> {
        for v in self.nodes.iter().chain(self.edges.iter().flatten()) {
            if v.iter().any(|&p| !(p >= -tol) || !p.is_finite()) {
                return Err(Error::ShapeMismatch("belief has a negative entry".into()));
            }
            let s: f64 = v.iter().sum();
            if (s - 1.0).abs() > tol {
                return Err(Error::NotNormalized(s));
            }
        }
        Ok(())
    }

    /// `max |beta_ij e - beta_i|`, `|e^T beta_ij - beta_j|` over all edges.
    pub fn consistency_residual(&self, mrf: &PairwiseMRF) -> Result<f64> {
        let edges = self.edges.as_ref().ok_or(Error::MissingEdgeBeliefs)?;
        let mut worst = 0.0f64;
        for (e, b) in mrf.edges().iter().zip(edges) {
            let (rows, cols) = (e.rows(), e.cols());
            for a in 0..rows {
                let s: f64 = b[a * cols..(a + 1) * cols].iter().sum();
                worst = worst.max((s - self.nodes[e.i][a]).abs());
            }
            for c in 0..cols {
                let s: f64 = (0..rows).map(|a| b[a * cols + c]).sum();
                worst = worst.max((s - self.nodes[e.j][c]).abs());
            }
        }
        Ok(worst)
    }

    /// Largest componentwise node-belief difference.
    pub fn max_node_difference(&self, other: &BeliefState) -> f64 {
        self.nodes
            .iter()
            .zip(&other.nodes)
            .flat_map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y).abs()))
            .fold(0.0, f64::max)
    }
}

/// Normalizes a nonnegative vector in place; returns the original sum.
pub(crate) fn normalize(v: &mut [f64]) -> f64 {
    let s: f64 = v.iter().sum();
    let inv = 1.0 / s;
    for x in v.iter_mut() {
        *x *= inv;
    }
    s
}

/// Softmax of log-weights.
pub(crate) fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits.iter().map(|l| (l - max).exp()).collect();
    normalize(&mut out);
    out
}

/// Index of the largest entry; lowest index on ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.7, 0.3]), 0);
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let a = softmax(&[1.0, 2.0, 3.0]);
        let b = softmax(&[1001.0, 1002.0, 1003.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-15);
        }
    }

    #[test]
    fn consistency_of_product_beliefs() {
        let m = PairwiseMRF::new(
            vec![vec![1.0, 1.0], vec![1.0, 1.0, 1.0]],
            vec![(0, 1, vec![vec![1.0; 3]; 2])],
        )
        .unwrap();
        let b = BeliefState::uniform(&m);
        assert!(b.consistency_residual(&m).unwrap() < 1e-15);
        b.check_simplex(1e-12).unwrap();
        assert!(BeliefState::node_only(vec![vec![0.5, 0.5]])
            .consistency_residual(&m)
            .is_err());
    }
}
