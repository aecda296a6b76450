//! Dual decomposition for separable programs with consistency constraints,
//! and belief-consensus programs built on it.
//!
//! Sign conventions: every agent maximizes a concave local objective
//! `l_k(y_k)`. In the equality form the agents are coupled by `y_k = C_k z`.
//! Prices live in the subspace `M = {v : C^T v = 0}`; the slave problem is
//! `Q_k(v_k) = sup l_k(y_k) - <v_k, y_k>` and the master minimizes the dual
//! `sum_k Q_k(v_k)` over `M` by projected subgradient steps
//! `v <- U (v + alpha y)` with `U = I - C (C^T C)^-1 C^T`.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::belief::softmax;
use crate::error::{Error, Result};
use crate::optimize::MirrorDescent;

/// Optimizer of one priced local problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SlaveSolution {
    pub y: Vec<f64>,
    /// Optimal value of the priced local problem.
    pub value: f64,
}

/// A local agent in the equality form.
pub trait SlaveProblem: Send + Sync {
    fn dim(&self) -> usize;
    /// Maximizes `l_k(y) - <prices, y>`.
    fn solve(&self, prices: &[f64]) -> Result<SlaveSolution>;
}

/// A local agent in the coupled-inequality form.
pub trait CoupledAgent: Send + Sync {
    fn dim(&self) -> usize;
    /// Maximizes `l_k(x) + <gain, x>`.
    fn solve(&self, gain: &[f64]) -> Result<SlaveSolution>;
}

/// `l(y) = -(curvature / 2) ||y - center||^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadraticAgent {
    pub center: Vec<f64>,
    pub curvature: f64,
}

impl QuadraticAgent {
    pub fn new(center: Vec<f64>) -> Self {
        Self { center, curvature: 1.0 }
    }

    pub fn with_curvature(mut self, curvature: f64) -> Self {
        self.curvature = curvature;
        self
    }

    fn solve_linear(&self, gain: &[f64]) -> Result<SlaveSolution> {
        if gain.len() != self.center.len() {
            return Err(Error::ShapeMismatch("price vector has wrong length".into()));
        }
        let y: Vec<f64> = self.center.iter().zip(gain).map(|(c, g)| c + g / self.curvature).collect();
        let value = y
            .iter()
            .zip(&self.center)
            .zip(gain)
            .map(|((y, c), g)| -0.5 * self.curvature * (y - c).powi(2) + g * y)
            .sum();
        Ok(SlaveSolution { y, value })
    }
}

impl SlaveProblem for QuadraticAgent {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn solve(&self, prices: &[f64]) -> Result<SlaveSolution> {
        let gain: Vec<f64> = prices.iter().map(|p| -p).collect();
        self.solve_linear(&gain)
    }
}

impl CoupledAgent for QuadraticAgent {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn solve(&self, gain: &[f64]) -> Result<SlaveSolution> {
        self.solve_linear(gain)
    }
}

/// Entropic agent on the simplex:
/// `l(beta) = beta . score - temperature * beta . ln beta`.
/// The priced problem has the closed form `softmax((score - v) / temperature)`.
#[derive(Debug, Clone, PartialEq)]
pub struct EntropicAgent {
    pub score: Vec<f64>,
    pub temperature: f64,
}

impl EntropicAgent {
    fn shifted(&self, prices: &[f64]) -> Vec<f64> {
        self.score
            .iter()
            .zip(prices)
            .map(|(s, v)| (s - v) / self.temperature)
            .collect()
    }

    /// The same priced problem solved by mirror descent; used to cross-check
    /// the closed form.
    pub fn solve_numerically(&self, prices: &[f64], tolerance: f64) -> Result<SlaveSolution> {
        let n = self.score.len();
        let t = self.temperature;
        let md = MirrorDescent {
            blocks: vec![n],
            max_iters: 100_000,
            tolerance,
            initial_step: 1.0,
        };
        let out = md.minimize(vec![1.0 / n as f64; n], |b| {
            let f = b
                .iter()
                .zip(&self.score)
                .zip(prices)
                .map(|((&b, s), v)| b * (v - s) + t * crate::free_energy::xlnx(b))
                .sum();
            let g = b
                .iter()
                .zip(&self.score)
                .zip(prices)
                .map(|((&b, s), v)| v - s + t * (b.ln() + 1.0))
                .collect();
            Ok((f, g))
        })?;
        Ok(SlaveSolution {
            y: out.point,
            value: -out.value,
        })
    }
}

impl SlaveProblem for EntropicAgent {
    fn dim(&self) -> usize {
        self.score.len()
    }

    fn solve(&self, prices: &[f64]) -> Result<SlaveSolution> {
        if prices.len() != self.score.len() {
            return Err(Error::ShapeMismatch("price vector has wrong length".into()));
        }
        let z = self.shifted(prices);
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + z.iter().map(|x| (x - max).exp()).sum::<f64>().ln();
        Ok(SlaveSolution {
            y: softmax(&z),
            value: self.temperature * lse,
        })
    }
}

/// Mean-field agent: minimizes
/// `-beta . ln psi + beta^T M beta + beta . ln beta + <v, beta>` on the
/// simplex by mirror descent. Convex when the symmetric part of `M` is PSD.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldAgent {
    pub log_psi: Vec<f64>,
    pub interaction: DMatrix<f64>,
    pub tolerance: f64,
}

impl SlaveProblem for MeanFieldAgent {
    fn dim(&self) -> usize {
        self.log_psi.len()
    }

    fn solve(&self, prices: &[f64]) -> Result<SlaveSolution> {
        let n = self.log_psi.len();
        if prices.len() != n {
            return Err(Error::ShapeMismatch("price vector has wrong length".into()));
        }
        let sym = &self.interaction + self.interaction.transpose();
        let md = MirrorDescent {
            blocks: vec![n],
            max_iters: 100_000,
            tolerance: self.tolerance,
            initial_step: 1.0,
        };
        let out = md.minimize(vec![1.0 / n as f64; n], |b| {
            let bv = DVector::from_column_slice(b);
            let quad = bv.dot(&(&self.interaction * &bv));
            let coupling = &sym * &bv;
            let mut f = quad;
            let mut g = Vec::with_capacity(n);
            for x in 0..n {
                f += b[x] * (prices[x] - self.log_psi[x]) + crate::free_energy::xlnx(b[x]);
                g.push(prices[x] - self.log_psi[x] + coupling[x] + b[x].ln() + 1.0);
            }
            Ok((f, g))
        })?;
        if !out.converged {
            return Err(Error::InvalidParameter(format!(
                "mean-field slave stalled at residual {:.3e}",
                out.residual
            )));
        }
        Ok(SlaveSolution {
            y: out.point,
            value: -out.value,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "rule")]
pub enum StepRule {
    Constant { alpha: f64 },
    /// `alpha0 / sqrt(n)` at the n-th update, n >= 1.
    Diminishing { alpha0: f64 },
}

impl Default for StepRule {
    fn default() -> Self {
        StepRule::Diminishing { alpha0: 1.0 }
    }
}

impl StepRule {
    pub fn step(&self, n: usize) -> f64 {
        match *self {
            StepRule::Constant { alpha } => alpha,
            StepRule::Diminishing { alpha0 } => alpha0 / (n.max(1) as f64).sqrt(),
        }
    }

    fn check(&self) -> Result<()> {
        let a = match *self {
            StepRule::Constant { alpha } => alpha,
            StepRule::Diminishing { alpha0 } => alpha0,
        };
        if !(a > 0.0) || !a.is_finite() {
            return Err(Error::InvalidParameter("step size must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DualParams {
    pub step: StepRule,
    pub max_iters: usize,
    pub tolerance: f64,
}

impl Default for DualParams {
    fn default() -> Self {
        Self {
            step: StepRule::default(),
            max_iters: 10_000,
            tolerance: 1e-8,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub dual_value: f64,
    pub residual: f64,
    /// Step taken after this row; zero on the final row.
    pub step: f64,
}

/// One row per slave round.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ConsensusTrace {
    pub rows: Vec<TraceRow>,
}

impl ConsensusTrace {
    pub const CSV_HEADER: &'static str = "iteration,dual_value,residual,step";

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn to_csv(&self) -> String {
        let rows: Vec<Vec<f64>> = self
            .rows
            .iter()
            .map(|r| vec![r.iteration as f64, r.dual_value, r.residual, r.step])
            .collect();
        crate::io::csv(Self::CSV_HEADER, &rows)
    }

    /// True when the residual grew tenfold over the last 50 rows.
    fn diverging(&self) -> bool {
        let n = self.rows.len();
        n > 50 && self.rows[n - 1].residual > 10.0 * self.rows[n - 51].residual.max(f64::MIN_POSITIVE)
    }
}

/// Agents coupled by `y_k = C_k z`.
pub struct ConsensusProblem {
    agents: Vec<Box<dyn SlaveProblem>>,
    offsets: Vec<usize>,
    stacked: DMatrix<f64>,
    projector: DMatrix<f64>,
    recover: DMatrix<f64>,
}

impl ConsensusProblem {
    /// `maps[k]` is `C_k`, of shape `dim_k x dim(z)`.
    pub fn new(agents: Vec<Box<dyn SlaveProblem>>, maps: Vec<DMatrix<f64>>) -> Result<Self> {
        if agents.is_empty() {
            return Err(Error::InvalidParameter("at least one agent required".into()));
        }
        if maps.len() != agents.len() {
            return Err(Error::ShapeMismatch("one consistency map per agent required".into()));
        }
        let zdim = maps[0].ncols();
        let mut offsets = vec![0];
        for (k, (a, c)) in agents.iter().zip(&maps).enumerate() {
            if c.nrows() != a.dim() || c.ncols() != zdim {
                return Err(Error::ShapeMismatch(format!(
                    "consistency map of agent {k} is {}x{}, expected {}x{zdim}",
                    c.nrows(),
                    c.ncols(),
                    a.dim()
                )));
            }
            offsets.push(offsets[k] + a.dim());
        }
        let total = offsets[agents.len()];
        let mut stacked = DMatrix::zeros(total, zdim);
        for (k, c) in maps.iter().enumerate() {
            stacked.view_mut((offsets[k], 0), (c.nrows(), zdim)).copy_from(c);
        }
        let gram = stacked.transpose() * &stacked;
        let chol = gram.cholesky().ok_or(Error::SingularConsistencyMap)?;
        let recover = chol.solve(&stacked.transpose());
        let projector = DMatrix::identity(total, total) - &stacked * &recover;
        Ok(Self {
            agents,
            offsets,
            stacked,
            projector,
            recover,
        })
    }

    /// Pure consensus: every `C_k` is the identity.
    pub fn consensus(agents: Vec<Box<dyn SlaveProblem>>) -> Result<Self> {
        let dim = agents.first().map(|a| a.dim()).unwrap_or(0);
        if agents.iter().any(|a| a.dim() != dim) {
            return Err(Error::ShapeMismatch("consensus agents must share a dimension".into()));
        }
        let maps = agents.iter().map(|_| DMatrix::identity(dim, dim)).collect();
        Self::new(agents, maps)
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn projector(&self) -> &DMatrix<f64> {
        &self.projector
    }

    /// `||C^T v||_inf`; zero for prices in `M`.
    pub fn price_consistency(&self, v: &[f64]) -> f64 {
        (self.stacked.transpose() * DVector::from_column_slice(v)).amax()
    }

    /// `||U y||_inf`: distance of the stacked local solutions from the range
    /// of `C`.
    pub fn residual(&self, y: &[f64]) -> f64 {
        (&self.projector * DVector::from_column_slice(y)).amax()
    }

    /// Least-squares global variable `(C^T C)^-1 C^T y`.
    pub fn recover(&self, y: &[f64]) -> Vec<f64> {
        (&self.recover * DVector::from_column_slice(y)).as_slice().to_vec()
    }

    pub fn solve_slaves(&self, v: &[f64]) -> Result<Vec<SlaveSolution>> {
        self.agents
            .par_iter()
            .enumerate()
            .map(|(k, a)| {
                a.solve(&v[self.offsets[k]..self.offsets[k + 1]]).map_err(|e| Error::Agent {
                    agent: k,
                    message: e.to_string(),
                })
            })
            .collect()
    }

    /// `U (v + alpha y)`. Re-projecting the sum keeps the prices in `M` to
    /// rounding even if `v` drifted.
    pub fn master_update(&self, v: &[f64], y: &[f64], alpha: f64) -> Vec<f64> {
        let raw = DVector::from_iterator(v.len(), v.iter().zip(y).map(|(p, q)| p + alpha * q));
        (&self.projector * raw).as_slice().to_vec()
    }

    fn split(&self, flat: &[f64]) -> Vec<Vec<f64>> {
        self.offsets.windows(2).map(|w| flat[w[0]..w[1]].to_vec()).collect()
    }
}

#[derive(Debug, Clone)]
pub struct DualResult {
    /// Global variable recovered from the local solutions.
    pub solution: Vec<f64>,
    pub local: Vec<Vec<f64>>,
    pub prices: Vec<Vec<f64>>,
    pub trace: ConsensusTrace,
    pub converged: bool,
    pub diverged: bool,
    /// Number of master updates.
    pub iterations: usize,
    pub residual: f64,
    /// Largest `||C^T v||_inf` seen over all price iterates.
    pub max_price_consistency: f64,
}

/// Alternates parallel slave solves with master updates until the residual
/// reaches `params.tolerance` or `params.max_iters` updates were made. On
/// divergence the iterate with the smallest residual is returned.
pub fn run_dual_decomposition(problem: &ConsensusProblem, params: &DualParams) -> Result<DualResult> {
    params.step.check()?;
    if !(params.tolerance > 0.0) {
        return Err(Error::InvalidParameter("tolerance must be positive".into()));
    }
    let total = *problem.offsets.last().expect("offsets");
    let mut v = vec![0.0; total];
    let mut trace = ConsensusTrace::default();
    let mut max_consistency = 0.0f64;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let converged;
    let diverged;
    let mut n = 0;
    loop {
        let sols = problem.solve_slaves(&v)?;
        let dual: f64 = sols.iter().map(|s| s.value).sum();
        let y: Vec<f64> = sols.into_iter().flat_map(|s| s.y).collect();
        let residual = problem.residual(&y);
        if best.as_ref().is_none_or(|(r, _, _)| residual < *r) {
            best = Some((residual, y.clone(), v.clone()));
        }
        let done = residual <= params.tolerance;
        let stop = done || n >= params.max_iters || trace.diverging();
        let alpha = if stop { 0.0 } else { params.step.step(n + 1) };
        trace.rows.push(TraceRow {
            iteration: n,
            dual_value: dual,
            residual,
            step: alpha,
        });
        if stop {
            converged = done;
            diverged = !done && trace.diverging();
            break;
        }
        v = problem.master_update(&v, &y, alpha);
        max_consistency = max_consistency.max(problem.price_consistency(&v));
        n += 1;
    }
    let (residual, y, v) = best.expect("at least one round");
    Ok(DualResult {
        solution: problem.recover(&y),
        local: problem.split(&y),
        prices: problem.split(&v),
        trace,
        converged,
        diverged,
        iterations: n,
        residual,
        max_price_consistency: max_consistency,
    })
}

/// Agents coupled by `sum_k C_k x_k + d >= 0`.
pub struct CoupledProblem {
    agents: Vec<Box<dyn CoupledAgent>>,
    maps: Vec<DMatrix<f64>>,
    offset: Vec<f64>,
}

impl CoupledProblem {
    pub fn new(agents: Vec<Box<dyn CoupledAgent>>, maps: Vec<DMatrix<f64>>, offset: Vec<f64>) -> Result<Self> {
        if agents.is_empty() || maps.len() != agents.len() {
            return Err(Error::ShapeMismatch("one constraint map per agent required".into()));
        }
        for (k, (a, c)) in agents.iter().zip(&maps).enumerate() {
            if c.nrows() != offset.len() || c.ncols() != a.dim() {
                return Err(Error::ShapeMismatch(format!("constraint map of agent {k} has wrong shape")));
            }
        }
        Ok(Self { agents, maps, offset })
    }

    /// `sum_k C_k x_k + d`.
    pub fn slack(&self, xs: &[Vec<f64>]) -> Vec<f64> {
        let mut s = DVector::from_column_slice(&self.offset);
        for (c, x) in self.maps.iter().zip(xs) {
            s += c * DVector::from_column_slice(x);
        }
        s.as_slice().to_vec()
    }
}

#[derive(Debug, Clone)]
pub struct CoupledResult {
    pub local: Vec<Vec<f64>>,
    pub prices: Vec<f64>,
    /// Trace residual is the constraint violation `max(0, -(Cx + d))`.
    pub trace: ConsensusTrace,
    pub converged: bool,
    pub iterations: usize,
}

/// Projected subgradient on nonnegative prices:
/// `v <- max(0, v - alpha (C x + d))`. Converged once the iterate is
/// feasible and complementary slackness holds to `params.tolerance`.
pub fn run_coupled_inequality(problem: &CoupledProblem, params: &DualParams) -> Result<CoupledResult> {
    params.step.check()?;
    let mut v = vec![0.0; problem.offset.len()];
    let mut trace = ConsensusTrace::default();
    let mut n = 0;
    loop {
        let sols: Vec<SlaveSolution> = problem
            .agents
            .par_iter()
            .zip(&problem.maps)
            .enumerate()
            .map(|(k, (a, c))| {
                let gain = c.transpose() * DVector::from_column_slice(&v);
                a.solve(gain.as_slice()).map_err(|e| Error::Agent {
                    agent: k,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_>>()?;
        let dual = sols.iter().map(|s| s.value).sum::<f64>()
            + v.iter().zip(&problem.offset).map(|(a, b)| a * b).sum::<f64>();
        let xs: Vec<Vec<f64>> = sols.into_iter().map(|s| s.y).collect();
        let slack = problem.slack(&xs);
        let violation = slack.iter().map(|s| (-s).max(0.0)).fold(0.0, f64::max);
        let complementarity = slack.iter().zip(&v).map(|(s, p)| (s * p).abs()).fold(0.0, f64::max);
        let converged = violation <= params.tolerance && complementarity <= params.tolerance;
        let stop = converged || n >= params.max_iters;
        let alpha = if stop { 0.0 } else { params.step.step(n + 1) };
        trace.rows.push(TraceRow {
            iteration: n,
            dual_value: dual,
            residual: violation,
            step: alpha,
        });
        if stop {
            return Ok(CoupledResult {
                local: xs,
                prices: v,
                trace,
                converged,
                iterations: n,
            });
        }
        for (p, s) in v.iter_mut().zip(&slack) {
            *p = (*p - alpha * s).max(0.0);
        }
        n += 1;
    }
}

/// One agent's view of a pairwise model: its node potential and the
/// potentials of its incident edges, rows indexed by the agent's own state.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalModel {
    pub potential: Vec<f64>,
    pub edges: Vec<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone)]
pub struct BeliefConsensusParams {
    /// `None` picks the constant step `1/L`, with `L` the Lipschitz constant
    /// of the dual gradient implied by the agents' entropy weight.
    pub step: Option<StepRule>,
    pub max_iters: usize,
    pub tolerance: f64,
    /// Accept an indefinite interaction matrix on the caller's assertion
    /// that it is PSD on the simplex.
    pub assume_simplex_psd: bool,
    /// Inner solver tolerance for numerically solved slaves.
    pub slave_tolerance: f64,
}

impl Default for BeliefConsensusParams {
    fn default() -> Self {
        Self {
            step: None,
            max_iters: 20_000,
            tolerance: 1e-10,
            assume_simplex_psd: false,
            slave_tolerance: 1e-10,
        }
    }
}

impl BeliefConsensusParams {
    /// An entropy weight `w` makes each slave's priced optimum
    /// `1/(2w)`-Lipschitz in its prices.
    fn dual(&self, entropy_weight: f64) -> DualParams {
        DualParams {
            step: self.step.unwrap_or(StepRule::Constant {
                alpha: 2.0 * entropy_weight,
            }),
            max_iters: self.max_iters,
            tolerance: self.tolerance,
        }
    }
}

#[derive(Debug, Clone)]
pub struct BeliefConsensus {
    pub agent_beliefs: Vec<Vec<f64>>,
    pub consensus: Vec<f64>,
    pub prices: Vec<Vec<f64>>,
    pub trace: ConsensusTrace,
    pub converged: bool,
    pub diverged: bool,
    pub iterations: usize,
    pub residual: f64,
}

impl From<DualResult> for BeliefConsensus {
    fn from(r: DualResult) -> Self {
        Self {
            agent_beliefs: r.local,
            consensus: r.solution,
            prices: r.prices,
            trace: r.trace,
            converged: r.converged,
            diverged: r.diverged,
            iterations: r.iterations,
            residual: r.residual,
        }
    }
}

const PSD_TOLERANCE: f64 = -1e-10;

fn check_models(models: &[LocalModel]) -> Result<usize> {
    let h = models
        .first()
        .map(|m| m.potential.len())
        .ok_or_else(|| Error::InvalidParameter("at least one agent required".into()))?;
    for (k, m) in models.iter().enumerate() {
        let bad_shape = m.potential.len() != h
            || m.edges.iter().any(|e| e.len() != h || e.iter().any(|r| r.len() != h));
        if bad_shape {
            return Err(Error::Agent {
                agent: k,
                message: format!("all agents must share a hypothesis bank of size {h}"),
            });
        }
        let values = m.potential.iter().chain(m.edges.iter().flatten().flatten());
        if values.clone().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(Error::Agent {
                agent: k,
                message: "potentials must be finite and strictly positive".into(),
            });
        }
    }
    Ok(h)
}

/// `M_i = -sum_j ln(psi_ij / max psi_ij)`, entrywise nonnegative.
pub fn interaction_matrix(model: &LocalModel) -> DMatrix<f64> {
    let h = model.potential.len();
    let mut m = DMatrix::zeros(h, h);
    for e in &model.edges {
        let max = e.iter().flatten().copied().fold(f64::NEG_INFINITY, f64::max);
        for (a, row) in e.iter().enumerate() {
            for (b, &x) in row.iter().enumerate() {
                m[(a, b)] -= (x / max).ln();
            }
        }
    }
    m
}

/// Smallest eigenvalue of the symmetric part.
pub fn min_symmetric_eigenvalue(m: &DMatrix<f64>) -> f64 {
    let sym = (m + m.transpose()) * 0.5;
    sym.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

/// Consensus on node beliefs for the mean-field program. Each agent
/// minimizes `-beta . ln psi_i + beta^T M_i beta + beta . ln beta`; the
/// interaction must be PSD (or asserted PSD on the simplex).
pub fn mfe_consensus(models: &[LocalModel], params: &BeliefConsensusParams) -> Result<BeliefConsensus> {
    check_models(models)?;
    let mut agents: Vec<Box<dyn SlaveProblem>> = Vec::with_capacity(models.len());
    for (k, model) in models.iter().enumerate() {
        let interaction = interaction_matrix(model);
        let min_eigenvalue = min_symmetric_eigenvalue(&interaction);
        if min_eigenvalue < PSD_TOLERANCE && !params.assume_simplex_psd {
            return Err(Error::IndefiniteInteraction { agent: k, min_eigenvalue });
        }
        agents.push(Box::new(MeanFieldAgent {
            log_psi: model.potential.iter().map(|p| p.ln()).collect(),
            interaction,
            tolerance: params.slave_tolerance,
        }));
    }
    // The quadratic term only adds curvature, so the entropy bound is safe;
    // halve it for slack against the interaction.
    Ok(run_dual_decomposition(&ConsensusProblem::consensus(agents)?, &params.dual(0.5))?.into())
}

/// The entropic agents of the Bethe consensus program with diagonal pairwise
/// beliefs. Agent `i` scores `ln psi_i + a_i / 2` with
/// `a_i = sum_j ln diag(psi_ij)`, so each edge is counted once overall, and
/// carries entropy weight `1/N`, so the summed program is the centralized
/// product posterior.
pub fn bethe_agents(models: &[LocalModel]) -> Result<Vec<EntropicAgent>> {
    check_models(models)?;
    let temperature = 1.0 / models.len() as f64;
    Ok(models
        .iter()
        .map(|m| {
            let score = m
                .potential
                .iter()
                .enumerate()
                .map(|(h, p)| p.ln() + 0.5 * m.edges.iter().map(|e| e[h][h].ln()).sum::<f64>())
                .collect();
            EntropicAgent { score, temperature }
        })
        .collect())
}

/// Consensus on node beliefs for the reduced Bethe program.
pub fn bethe_consensus(models: &[LocalModel], params: &BeliefConsensusParams) -> Result<BeliefConsensus> {
    let agents = bethe_agents(models)?;
    let weight = agents[0].temperature;
    let agents = agents.into_iter().map(|a| Box::new(a) as Box<dyn SlaveProblem>).collect();
    Ok(run_dual_decomposition(&ConsensusProblem::consensus(agents)?, &params.dual(weight))?.into())
}
