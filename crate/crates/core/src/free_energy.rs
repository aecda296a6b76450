//! Gibbs, mean-field and Bethe free energies and the KL divergence.
//!
//! Every function uses the convention `0 ln 0 = 0`, so beliefs on the
//! boundary of the simplex evaluate to their limits.

use crate::belief::BeliefState;
use crate::error::{Error, Result};
use crate::model::{JointTable, PairwiseMRF, DEFAULT_STATE_CAP};

const NORMALIZATION_TOL: f64 = 1e-9;

#[inline]
pub(crate) fn xlnx(x: f64) -> f64 {
    if x > 0.0 {
        x * x.ln()
    } else {
        0.0
    }
}

/// Negative entropy `sum p ln p`.
pub fn neg_entropy(p: &[f64]) -> f64 {
    p.iter().map(|&x| xlnx(x)).sum()
}

fn check_normalized(v: &[f64]) -> Result<()> {
    let s: f64 = v.iter().sum();
    if (s - 1.0).abs() > NORMALIZATION_TOL || v.iter().any(|&x| x < 0.0) {
        return Err(Error::NotNormalized(s));
    }
    Ok(())
}

/// `D(beta || p) = sum beta ln(beta / p)`.
pub fn kl_divergence(beta: &[f64], p: &[f64]) -> Result<f64> {
    if beta.len() != p.len() {
        return Err(Error::ShapeMismatch(format!(
            "distributions of length {} and {}",
            beta.len(),
            p.len()
        )));
    }
    if p.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::InvalidParameter("reference distribution must be strictly positive".into()));
    }
    Ok(beta
        .iter()
        .zip(p)
        .map(|(&b, &q)| if b > 0.0 { b * (b / q).ln() } else { 0.0 })
        .sum())
}

/// `G(beta) = sum_x beta(x) E(x) + sum_x beta(x) ln beta(x)` for a joint
/// belief laid out like [`JointTable`] (node 0 fastest).
pub fn gibbs_free_energy(mrf: &PairwiseMRF, joint: &[f64]) -> Result<f64> {
    gibbs_free_energy_with_cap(mrf, joint, DEFAULT_STATE_CAP)
}

pub fn gibbs_free_energy_with_cap(mrf: &PairwiseMRF, joint: &[f64], cap: u64) -> Result<f64> {
    let states = mrf.state_space_size();
    if states > cap as u128 {
        return Err(Error::StateCapExceeded { states, cap });
    }
    if joint.len() as u128 != states {
        return Err(Error::ShapeMismatch(format!(
            "joint belief has {} entries, state space has {states}",
            joint.len()
        )));
    }
    check_normalized(joint)?;
    let cards = mrf.cardinalities();
    let (log_nodes, log_edges) = mrf.log_potentials();
    let mut x = vec![0usize; cards.len()];
    let mut total = 0.0;
    for &b in joint {
        if b > 0.0 {
            let mut log_weight = 0.0;
            for (k, t) in log_nodes.iter().enumerate() {
                log_weight += t[x[k]];
            }
            for (e, t) in mrf.edges().iter().zip(&log_edges) {
                log_weight += t[x[e.i] * e.cols() + x[e.j]];
            }
            total += b * (b.ln() - log_weight);
        }
        for (slot, &c) in x.iter_mut().zip(&cards) {
            *slot += 1;
            if *slot < c {
                break;
            }
            *slot = 0;
        }
    }
    Ok(total)
}

/// Gibbs free energy of the exact distribution's table; equals `F` up to
/// rounding.
pub fn gibbs_of_table(mrf: &PairwiseMRF, table: &JointTable) -> Result<f64> {
    gibbs_free_energy_with_cap(mrf, table.probabilities(), u64::MAX)
}

fn check_nodes(mrf: &PairwiseMRF, beliefs: &BeliefState) -> Result<()> {
    if beliefs.nodes().len() != mrf.num_nodes() {
        return Err(Error::ShapeMismatch("one belief vector per node required".into()));
    }
    for (k, b) in beliefs.nodes().iter().enumerate() {
        if b.len() != mrf.cardinality(k) {
            return Err(Error::ShapeMismatch(format!("belief of node {k} has wrong length")));
        }
    }
    Ok(())
}

/// Mean-field free energy
/// `-sum_k beta_k . ln psi_k - sum_(i,j) beta_i^T ln(psi_ij) beta_j + sum_k beta_k . ln beta_k`.
pub fn mean_field_free_energy(mrf: &PairwiseMRF, beliefs: &BeliefState) -> Result<f64> {
    check_nodes(mrf, beliefs)?;
    let nodes = beliefs.nodes();
    let mut g = 0.0;
    for (k, b) in nodes.iter().enumerate() {
        g += b
            .iter()
            .zip(mrf.node_potential(k))
            .map(|(&p, &psi)| xlnx(p) - p * psi.ln())
            .sum::<f64>();
    }
    for e in mrf.edges() {
        let (bi, bj) = (&nodes[e.i], &nodes[e.j]);
        for (a, &pa) in bi.iter().enumerate() {
            for (c, &pc) in bj.iter().enumerate() {
                g -= pa * pc * e.value(a, c).ln();
            }
        }
    }
    Ok(g)
}

/// Bethe free energy
/// `-sum_k beta_k . ln psi_k - sum_(i,j) [beta_ij o ln psi_ij]
///  + sum_k (1 - q_k) beta_k . ln beta_k + sum_(i,j) [beta_ij o ln beta_ij]`.
///
/// Consistency between node and edge beliefs is not required.
pub fn bethe_free_energy(mrf: &PairwiseMRF, beliefs: &BeliefState) -> Result<f64> {
    check_nodes(mrf, beliefs)?;
    let edges = beliefs.edges().ok_or(Error::MissingEdgeBeliefs)?;
    if edges.len() != mrf.num_edges() {
        return Err(Error::MissingEdgeBeliefs);
    }
    let mut g = 0.0;
    for (k, b) in beliefs.nodes().iter().enumerate() {
        let weight = 1.0 - mrf.degree(k) as f64;
        g += b
            .iter()
            .zip(mrf.node_potential(k))
            .map(|(&p, &psi)| weight * xlnx(p) - p * psi.ln())
            .sum::<f64>();
    }
    for (e, b) in mrf.edges().iter().zip(edges) {
        if b.len() != e.potential.len() {
            return Err(Error::ShapeMismatch("edge belief has wrong shape".into()));
        }
        g += b
            .iter()
            .zip(&e.potential)
            .map(|(&p, &psi)| xlnx(p) - p * psi.ln())
            .sum::<f64>();
    }
    Ok(g)
}
