//! Sum-product and max-product belief propagation.
//!
//! Messages `mu_{l->k}` live on directed edges and are kept normalized. The
//! synchronous schedule double-buffers: every message of round `t` is
//! computed from the round `t-1` buffer only, so a round may be evaluated in
//! parallel and still produce bit-identical results. The asynchronous sweep
//! visits nodes in a fixed order and overwrites outgoing messages in place.

use rayon::prelude::*;

use crate::belief::{argmax, normalize, BeliefState};
use crate::error::{Error, Result};
use crate::model::{Assignment, PairwiseMRF};

pub const DEFAULT_TOLERANCE: f64 = 1e-8;
pub const DEFAULT_MAX_ITERS: usize = 500;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BpMode {
    Sum,
    Max,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScheduleMode {
    Synchronous,
    /// Nodes are visited in the given order; the order must be a permutation.
    AsynchronousSweep(Vec<usize>),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Schedule {
    pub mode: ScheduleMode,
    /// `new = (1 - damping) * update + damping * old`, in `[0, 1)`.
    pub damping: f64,
}

impl Default for Schedule {
    fn default() -> Self {
        Self {
            mode: ScheduleMode::Synchronous,
            damping: 0.0,
        }
    }
}

impl Schedule {
    pub fn synchronous() -> Self {
        Self::default()
    }

    pub fn sweep(order: Vec<usize>) -> Self {
        Self {
            mode: ScheduleMode::AsynchronousSweep(order),
            damping: 0.0,
        }
    }

    pub fn with_damping(mut self, damping: f64) -> Self {
        self.damping = damping;
        self
    }

    fn check(&self, mrf: &PairwiseMRF) -> Result<()> {
        if !(0.0..1.0).contains(&self.damping) {
            return Err(Error::InvalidParameter("damping must be in [0, 1)".into()));
        }
        if let ScheduleMode::AsynchronousSweep(order) = &self.mode {
            let mut seen = vec![false; mrf.num_nodes()];
            let is_permutation = order.len() == seen.len()
                && order
                    .iter()
                    .all(|&k| k < seen.len() && !std::mem::replace(&mut seen[k], true));
            if !is_permutation {
                return Err(Error::InvalidParameter(
                    "sweep order must be a permutation of the nodes".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Normalized messages indexed by directed edge: `2e` carries `i -> j` and
/// `2e + 1` carries `j -> i` for edge `e = (i, j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct MessageStore {
    messages: Vec<Vec<f64>>,
}

#[inline]
fn directed(mrf: &PairwiseMRF, edge: usize, from: usize) -> usize {
    2 * edge + usize::from(mrf.edge(edge).i != from)
}

impl MessageStore {
    pub fn uniform(mrf: &PairwiseMRF) -> Self {
        let mut messages = Vec::with_capacity(2 * mrf.num_edges());
        for e in mrf.edges() {
            let nj = mrf.cardinality(e.j);
            let ni = mrf.cardinality(e.i);
            messages.push(vec![1.0 / nj as f64; nj]);
            messages.push(vec![1.0 / ni as f64; ni]);
        }
        Self { messages }
    }

    /// Builds a store from explicit `(from, to, message)` triples on top of
    /// uniform defaults.
    pub fn from_messages(mrf: &PairwiseMRF, entries: &[(usize, usize, Vec<f64>)]) -> Result<Self> {
        let mut store = Self::uniform(mrf);
        for (from, to, m) in entries {
            let e = mrf.edge_between(*from, *to).ok_or(Error::NotAnEdge(*from, *to))?;
            if m.len() != mrf.cardinality(*to) {
                return Err(Error::ShapeMismatch(format!("message {from}->{to} has wrong length")));
            }
            store.messages[directed(mrf, e, *from)] = m.clone();
        }
        Ok(store)
    }

    pub fn get(&self, mrf: &PairwiseMRF, from: usize, to: usize) -> Result<&[f64]> {
        let e = mrf.edge_between(from, to).ok_or(Error::NotAnEdge(from, to))?;
        self.messages
            .get(directed(mrf, e, from))
            .map(Vec::as_slice)
            .ok_or(Error::MissingMessage { from, to })
    }

    pub fn len(&self) -> usize {
        self.messages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.messages.is_empty()
    }

    fn check(&self, mrf: &PairwiseMRF) -> Result<()> {
        if self.messages.len() != 2 * mrf.num_edges() {
            let e = mrf.edges().get(self.messages.len() / 2).ok_or_else(|| {
                Error::ShapeMismatch("message store does not match the model".into())
            })?;
            return Err(Error::MissingMessage { from: e.i, to: e.j });
        }
        Ok(())
    }
}

/// `psi_l(x_l) prod_{u in N(l) \ {skip}} mu_{u->l}(x_l)`, scaled to max 1.
fn cavity(mrf: &PairwiseMRF, messages: &[Vec<f64>], node: usize, skip: Option<usize>) -> Vec<f64> {
    let mut h = mrf.node_potential(node).to_vec();
    for nb in mrf.neighbors(node) {
        if Some(nb.node) == skip {
            continue;
        }
        let m = &messages[directed(mrf, nb.edge, nb.node)];
        for (slot, v) in h.iter_mut().zip(m) {
            *slot *= v;
        }
        let max = h.iter().copied().fold(0.0, f64::max);
        if max > 0.0 {
            h.iter_mut().for_each(|x| *x /= max);
        }
    }
    h
}

fn compute_message(mrf: &PairwiseMRF, messages: &[Vec<f64>], from: usize, edge: usize, mode: BpMode) -> Vec<f64> {
    let e = mrf.edge(edge);
    let to = e.other(from);
    let h = cavity(mrf, messages, from, Some(to));
    let mut out = vec![0.0; mrf.cardinality(to)];
    for (xk, slot) in out.iter_mut().enumerate() {
        *slot = match mode {
            BpMode::Sum => h
                .iter()
                .enumerate()
                .map(|(xl, hv)| e.value_from(from, xl, xk) * hv)
                .sum(),
            BpMode::Max => h
                .iter()
                .enumerate()
                .map(|(xl, hv)| e.value_from(from, xl, xk) * hv)
                .fold(0.0, f64::max),
        };
    }
    normalize(&mut out);
    out
}

fn update(mrf: &PairwiseMRF, msgs: &MessageStore, from: usize, to: usize, mode: BpMode) -> Result<Vec<f64>> {
    let e = mrf.edge_between(from, to).ok_or(Error::NotAnEdge(from, to))?;
    msgs.check(mrf)?;
    Ok(compute_message(mrf, &msgs.messages, from, e, mode))
}

/// `mu_{from->to}(x_k) ∝ sum_{x_l} psi_{lk}(x_l, x_k) psi_l(x_l) prod_{u != to} mu_{u->l}(x_l)`.
pub fn sum_product_update(mrf: &PairwiseMRF, msgs: &MessageStore, from: usize, to: usize) -> Result<Vec<f64>> {
    update(mrf, msgs, from, to, BpMode::Sum)
}

/// As [`sum_product_update`] with the sum over `x_l` replaced by a max.
pub fn max_product_update(mrf: &PairwiseMRF, msgs: &MessageStore, from: usize, to: usize) -> Result<Vec<f64>> {
    update(mrf, msgs, from, to, BpMode::Max)
}

/// `beta_k(x_k) ∝ psi_k(x_k) prod_{l in N(k)} mu_{l->k}(x_k)`.
pub fn belief(mrf: &PairwiseMRF, msgs: &MessageStore, k: usize) -> Result<Vec<f64>> {
    msgs.check(mrf)?;
    let mut b = cavity(mrf, &msgs.messages, k, None);
    normalize(&mut b);
    Ok(b)
}

/// Pairwise beliefs `beta_ij ∝ psi_ij psi_i psi_j prod mu_{u->i} prod mu_{w->j}`
/// (each product excluding the other endpoint), one per edge.
pub fn pairwise_beliefs(mrf: &PairwiseMRF, msgs: &MessageStore) -> Result<Vec<Vec<f64>>> {
    msgs.check(mrf)?;
    Ok(mrf
        .edges()
        .iter()
        .map(|e| {
            let hi = cavity(mrf, &msgs.messages, e.i, Some(e.j));
            let hj = cavity(mrf, &msgs.messages, e.j, Some(e.i));
            let mut b: Vec<f64> = (0..e.potential.len())
                .map(|idx| {
                    let (a, c) = (idx / e.cols(), idx % e.cols());
                    e.potential[idx] * hi[a] * hj[c]
                })
                .collect();
            normalize(&mut b);
            b
        })
        .collect())
}

/// Outcome of [`run_bp`].
#[derive(Debug, Clone)]
pub struct BpResult {
    pub mode: BpMode,
    /// Node beliefs only.
    pub beliefs: BeliefState,
    pub converged: bool,
    pub iterations: usize,
    /// Max-norm message change of each iteration.
    pub residual_trace: Vec<f64>,
    pub messages: MessageStore,
}

/// Iterative message passing, one schedule round per [`BpSolver::step`].
#[derive(Debug, Clone)]
pub struct BpSolver<'a> {
    mrf: &'a PairwiseMRF,
    mode: BpMode,
    schedule: Schedule,
    messages: MessageStore,
    trace: Vec<f64>,
}

impl<'a> BpSolver<'a> {
    pub fn new(mrf: &'a PairwiseMRF, mode: BpMode, schedule: Schedule) -> Result<Self> {
        schedule.check(mrf)?;
        Ok(Self {
            mrf,
            mode,
            schedule,
            messages: MessageStore::uniform(mrf),
            trace: Vec::new(),
        })
    }

    /// Runs one round and returns its residual.
    pub fn step(&mut self) -> f64 {
        let mrf = self.mrf;
        let mode = self.mode;
        let lambda = self.schedule.damping;
        let mix = |fresh: &mut Vec<f64>, old: &[f64]| {
            if lambda > 0.0 {
                for (f, o) in fresh.iter_mut().zip(old) {
                    *f = (1.0 - lambda) * *f + lambda * o;
                }
            }
            fresh.iter().zip(old).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
        };
        let residual = match &self.schedule.mode {
            ScheduleMode::Synchronous => {
                let old = &self.messages.messages;
                let fresh: Vec<(Vec<f64>, f64)> = (0..old.len())
                    .into_par_iter()
                    .map(|d| {
                        let edge = d / 2;
                        let e = mrf.edge(edge);
                        let from = if d % 2 == 0 { e.i } else { e.j };
                        let mut m = compute_message(mrf, old, from, edge, mode);
                        let delta = mix(&mut m, &old[d]);
                        (m, delta)
                    })
                    .collect();
                let mut residual = 0.0f64;
                let mut next = Vec::with_capacity(fresh.len());
                for (m, delta) in fresh {
                    residual = residual.max(delta);
                    next.push(m);
                }
                self.messages.messages = next;
                residual
            }
            ScheduleMode::AsynchronousSweep(order) => {
                let mut residual = 0.0f64;
                for &from in order {
                    for nb in mrf.neighbors(from) {
                        let d = directed(mrf, nb.edge, from);
                        let mut m = compute_message(mrf, &self.messages.messages, from, nb.edge, mode);
                        residual = residual.max(mix(&mut m, &self.messages.messages[d]));
                        self.messages.messages[d] = m;
                    }
                }
                residual
            }
        };
        self.trace.push(residual);
        residual
    }

    pub fn messages(&self) -> &MessageStore {
        &self.messages
    }

    pub fn iterations(&self) -> usize {
        self.trace.len()
    }

    pub fn beliefs(&self) -> BeliefState {
        BeliefState::node_only(
            (0..self.mrf.num_nodes())
                .map(|k| {
                    let mut b = cavity(self.mrf, &self.messages.messages, k, None);
                    normalize(&mut b);
                    b
                })
                .collect(),
        )
    }

    pub fn finish(self, converged: bool) -> BpResult {
        BpResult {
            mode: self.mode,
            beliefs: self.beliefs(),
            converged,
            iterations: self.trace.len(),
            residual_trace: self.trace,
            messages: self.messages,
        }
    }
}

/// Runs message passing from uniform messages until the max directed-message
/// change is at most `tol` or `max_iters` rounds have run.
pub fn run_bp(mrf: &PairwiseMRF, mode: BpMode, schedule: Schedule, max_iters: usize, tol: f64) -> Result<BpResult> {
    if max_iters == 0 {
        return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
    }
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let mut solver = BpSolver::new(mrf, mode, schedule)?;
    let mut converged = false;
    for _ in 0..max_iters {
        if solver.step() <= tol {
            converged = true;
            break;
        }
    }
    Ok(solver.finish(converged))
}

/// Per-node argmax of the beliefs, lowest state index on ties.
pub fn map_decode(result: &BpResult) -> Assignment {
    Assignment(result.beliefs.nodes().iter().map(|b| argmax(b)).collect())
}
