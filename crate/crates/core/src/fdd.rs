//! Distributed hypothesis testing for fault detection and diagnosis.
//!
//! Every agent holds the same bank of hypotheses and a local likelihood
//! vector. Under conditional independence the centralized posterior is
//! `prior(h) prod_k p(y_k | h)`; the distributed solvers are compared
//! against it.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::belief::{argmax, normalize, softmax};
use crate::bp::{run_bp, BpMode, Schedule, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};
use crate::consensus::{bethe_consensus, mfe_consensus, BeliefConsensusParams, ConsensusTrace, LocalModel, TraceRow};
use crate::error::{Error, Result};
use crate::model::PairwiseMRF;

pub const DEFAULT_EPSILON: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct HypothesisBank {
    labels: Vec<String>,
    prior: Vec<f64>,
}

impl HypothesisBank {
    pub fn new(labels: Vec<String>, prior: Vec<f64>) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::InvalidBank("at least two hypotheses required".into()));
        }
        if prior.len() != labels.len() {
            return Err(Error::InvalidBank(format!(
                "prior has {} entries for {} hypotheses",
                prior.len(),
                labels.len()
            )));
        }
        if prior.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidBank("prior entries must be strictly positive".into()));
        }
        let s: f64 = prior.iter().sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidBank(format!("prior sums to {s}")));
        }
        Ok(Self { labels, prior })
    }

    /// Labels `hypothesis-0`, `hypothesis-1`, ... with a uniform prior.
    pub fn uniform(h: usize) -> Result<Self> {
        let labels = (0..h).map(|i| format!("hypothesis-{i}")).collect();
        Self::new(labels, vec![1.0 / h as f64; h])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn prior(&self) -> &[f64] {
        &self.prior
    }
}

/// Unnormalized likelihood `p(y_k | h)` reported by one agent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalEvidence {
    pub id: String,
    pub likelihood: Vec<f64>,
}

impl LocalEvidence {
    pub fn new(id: impl Into<String>, likelihood: Vec<f64>) -> Self {
        Self {
            id: id.into(),
            likelihood,
        }
    }
}

fn check_evidence(bank: &HypothesisBank, evidence: &[LocalEvidence]) -> Result<()> {
    if evidence.is_empty() {
        return Err(Error::InvalidParameter("at least one agent required".into()));
    }
    for (k, e) in evidence.iter().enumerate() {
        if e.likelihood.len() != bank.len() {
            return Err(Error::InvalidEvidence {
                agent: e.id.clone(),
                message: format!("{} likelihoods for {} hypotheses", e.likelihood.len(), bank.len()),
            });
        }
        if e.likelihood.iter().any(|&p| !(p > 0.0) || !p.is_finite()) {
            return Err(Error::InvalidEvidence {
                agent: e.id.clone(),
                message: "likelihoods must be finite and strictly positive".into(),
            });
        }
        if evidence[..k].iter().any(|o| o.id == e.id) {
            return Err(Error::InvalidEvidence {
                agent: e.id.clone(),
                message: "duplicate agent id".into(),
            });
        }
    }
    Ok(())
}

/// `prior(h) prod_k p(y_k | h)`, normalized. Computed in the log domain.
pub fn centralized_posterior(bank: &HypothesisBank, evidence: &[LocalEvidence]) -> Result<Vec<f64>> {
    check_evidence(bank, evidence)?;
    let logits: Vec<f64> = (0..bank.len())
        .map(|h| bank.prior[h].ln() + evidence.iter().map(|e| e.likelihood[h].ln()).sum::<f64>())
        .collect();
    Ok(softmax(&logits))
}

fn check_topology(n: usize, topology: &[(usize, usize)]) -> Result<()> {
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for &(a, b) in topology {
        if a >= n || b >= n {
            return Err(Error::InvalidParameter(format!("topology edge ({a},{b}) names a missing agent")));
        }
        let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
        parent[ra] = rb;
    }
    let root = find(&mut parent, 0);
    if (1..n).any(|k| find(&mut parent, k) != root) {
        return Err(Error::DisconnectedTopology);
    }
    Ok(())
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0 && epsilon <= 1.0) {
        return Err(Error::InvalidParameter(format!("epsilon must lie in (0, 1], got {epsilon}")));
    }
    Ok(())
}

/// Node potential `prior^(1/N) * likelihood` of every agent.
fn node_potentials(bank: &HypothesisBank, evidence: &[LocalEvidence]) -> Vec<Vec<f64>> {
    let share = 1.0 / evidence.len() as f64;
    evidence
        .iter()
        .map(|e| {
            e.likelihood
                .iter()
                .zip(&bank.prior)
                .map(|(l, p)| p.powf(share) * l)
                .collect()
        })
        .collect()
}

fn smoothed_delta(h: usize, epsilon: f64) -> Vec<Vec<f64>> {
    (0..h)
        .map(|a| (0..h).map(|b| if a == b { 1.0 } else { epsilon }).collect())
        .collect()
}

/// Pairwise model with one node per agent over the hypothesis bank. Edge
/// potentials are the delta smoothed to `epsilon` off the diagonal.
pub fn build_fdd_mrf(
    bank: &HypothesisBank,
    evidence: &[LocalEvidence],
    topology: &[(usize, usize)],
    epsilon: f64,
) -> Result<PairwiseMRF> {
    check_evidence(bank, evidence)?;
    check_epsilon(epsilon)?;
    check_topology(evidence.len(), topology)?;
    let delta = smoothed_delta(bank.len(), epsilon);
    let edges = topology.iter().map(|&(a, b)| (a, b, delta.clone())).collect();
    PairwiseMRF::new(node_potentials(bank, evidence), edges)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FddMethod {
    BpSum,
    BpMax,
    MfeConsensus,
    BetheConsensus,
}

impl FddMethod {
    pub const ALL: [FddMethod; 4] = [
        FddMethod::BpSum,
        FddMethod::BpMax,
        FddMethod::MfeConsensus,
        FddMethod::BetheConsensus,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FddMethod::BpSum => "bp-sum",
            FddMethod::BpMax => "bp-max",
            FddMethod::MfeConsensus => "mfe-consensus",
            FddMethod::BetheConsensus => "bethe-consensus",
        }
    }
}

impl fmt::Display for FddMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FddMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown method `{s}`")))
    }
}

#[derive(Debug, Clone)]
pub struct FddParams {
    pub epsilon: f64,
    pub bp_tolerance: f64,
    pub bp_max_iters: usize,
    pub consensus: BeliefConsensusParams,
}

impl Default for FddParams {
    fn default() -> Self {
        Self {
            epsilon: DEFAULT_EPSILON,
            bp_tolerance: DEFAULT_TOLERANCE,
            bp_max_iters: DEFAULT_MAX_ITERS,
            consensus: BeliefConsensusParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Diagnostics {
    pub method: FddMethod,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    /// Final BP message change or consensus residual of the solver.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FddDecision {
    pub agents: Vec<String>,
    pub agent_beliefs: Vec<Vec<f64>>,
    pub agent_decisions: Vec<usize>,
    pub consensus_belief: Vec<f64>,
    pub decision: usize,
    pub label: String,
    pub oracle_posterior: Vec<f64>,
    pub oracle_decision: usize,
    /// False when the distributed decision differs from the oracle's.
    pub oracle_agreement: bool,
    pub diagnostics: Diagnostics,
    /// Consensus rounds, or BP rounds with only the residual filled in.
    #[serde(skip)]
    pub trace: Option<ConsensusTrace>,
}

/// `max_i ||beta_i - mean||_inf` over the agents' beliefs.
pub fn consensus_residual(decision: &FddDecision) -> f64 {
    belief_spread(&decision.agent_beliefs)
}

fn belief_spread(beliefs: &[Vec<f64>]) -> f64 {
    let mean = average(beliefs);
    beliefs
        .iter()
        .flat_map(|b| b.iter().zip(&mean).map(|(x, m)| (x - m).abs()))
        .fold(0.0, f64::max)
}

fn average(beliefs: &[Vec<f64>]) -> Vec<f64> {
    let n = beliefs.len() as f64;
    let mut mean = vec![0.0; beliefs.first().map_or(0, Vec::len)];
    for b in beliefs {
        for (m, x) in mean.iter_mut().zip(b) {
            *m += x / n;
        }
    }
    mean
}

/// What each agent sees: its node potential and its incident edges.
fn local_models(bank: &HypothesisBank, evidence: &[LocalEvidence], topology: &[(usize, usize)], epsilon: f64) -> Vec<LocalModel> {
    let delta = smoothed_delta(bank.len(), epsilon);
    node_potentials(bank, evidence)
        .into_iter()
        .enumerate()
        .map(|(k, potential)| LocalModel {
            potential,
            edges: topology
                .iter()
                .filter(|&&(a, b)| a == k || b == k)
                .map(|_| delta.clone())
                .collect(),
        })
        .collect()
}

/// Runs one distributed method and compares its decision with the oracle.
pub fn distributed_fdd(
    bank: &HypothesisBank,
    evidence: &[LocalEvidence],
    topology: &[(usize, usize)],
    method: FddMethod,
    params: &FddParams,
) -> Result<FddDecision> {
    let mrf = build_fdd_mrf(bank, evidence, topology, params.epsilon)?;
    let oracle_posterior = centralized_posterior(bank, evidence)?;
    let (agent_beliefs, consensus, diagnostics, trace) = match method {
        FddMethod::BpSum | FddMethod::BpMax => {
            let mode = if method == FddMethod::BpSum { BpMode::Sum } else { BpMode::Max };
            let r = run_bp(&mrf, mode, Schedule::synchronous(), params.bp_max_iters, params.bp_tolerance)?;
            let beliefs = r.beliefs.into_nodes();
            let diagnostics = Diagnostics {
                method,
                converged: r.converged,
                diverged: false,
                iterations: r.iterations,
                residual: r.residual_trace.last().copied().unwrap_or(0.0),
            };
            let trace = ConsensusTrace {
                rows: r
                    .residual_trace
                    .iter()
                    .enumerate()
                    .map(|(i, &residual)| TraceRow {
                        iteration: i + 1,
                        dual_value: f64::NAN,
                        residual,
                        step: f64::NAN,
                    })
                    .collect(),
            };
            let mut mean = average(&beliefs);
            normalize(&mut mean);
            (beliefs, mean, diagnostics, Some(trace))
        }
        FddMethod::MfeConsensus | FddMethod::BetheConsensus => {
            let models = local_models(bank, evidence, topology, params.epsilon);
            let r = if method == FddMethod::MfeConsensus {
                mfe_consensus(&models, &params.consensus)?
            } else {
                bethe_consensus(&models, &params.consensus)?
            };
            let diagnostics = Diagnostics {
                method,
                converged: r.converged,
                diverged: r.diverged,
                iterations: r.iterations,
                residual: r.residual,
            };
            let mut consensus = r.consensus;
            for c in consensus.iter_mut() {
                *c = c.max(0.0);
            }
            normalize(&mut consensus);
            (r.agent_beliefs, consensus, diagnostics, Some(r.trace))
        }
    };
    let decision = argmax(&consensus);
    let oracle_decision = argmax(&oracle_posterior);
    Ok(FddDecision {
        agents: evidence.iter().map(|e| e.id.clone()).collect(),
        agent_decisions: agent_beliefs.iter().map(|b| argmax(b)).collect(),
        agent_beliefs,
        consensus_belief: consensus,
        decision,
        label: bank.labels[decision].clone(),
        oracle_posterior,
        oracle_decision,
        oracle_agreement: decision == oracle_decision,
        diagnostics,
        trace,
    })
}
