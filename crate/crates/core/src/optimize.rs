//! Direct minimization of the mean-field and Bethe free energies.
//!
//! * Mean field: exact cyclic coordinate descent. Each node update is the
//!   closed-form minimizer of the objective in that node's belief, so the
//!   objective never increases.
//! * Bethe: exponentiated-gradient (entropic mirror) descent on the node
//!   beliefs with backtracking. After every step each edge belief is re-fit
//!   to the current node marginals by iterative proportional fitting started
//!   from `psi_ij`, which makes it the exact minimizer of the edge terms for
//!   those marginals. The IPF scalings are also the gradient of the edge terms
//!   with respect to the node beliefs.
//! * Bethe via BP: sum-product fixed points are Bethe stationary points;
//!   edge beliefs are assembled from the converged messages.
//!
//! Non-convex instances are handled by random restarts; the best run wins by
//! `(objective, run index)`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1};
use rayon::prelude::*;

use crate::belief::{normalize, softmax, BeliefState};
use crate::bp::{pairwise_beliefs, BpMode, BpSolver, Schedule};
use crate::error::{Error, Result};
use crate::free_energy::{bethe_free_energy, kl_divergence, mean_field_free_energy};
use crate::model::PairwiseMRF;

/// Euclidean projection onto the probability simplex.
pub fn simplex_project(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut theta = 0.0;
    for (j, &x) in u.iter().enumerate() {
        cumulative += x;
        let t = (cumulative - 1.0) / (j + 1) as f64;
        if x - t > 0.0 {
            theta = t;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

/// How the first run is initialized.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InitMode {
    Uniform,
    RandomDirichlet(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct BOParams {
    pub max_iters: usize,
    /// Convergence threshold on the objective decrease over one sweep (mean
    /// field) or on the stationarity residual (Bethe direct). For the BP
    /// route this is the message tolerance.
    pub tolerance: f64,
    /// Marginal error tolerance of the IPF edge re-fit.
    pub inner_tolerance: f64,
    /// Initial exponentiated-gradient step.
    pub step_size: f64,
    pub init: InitMode,
    /// Additional Dirichlet-initialized runs.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for BOParams {
    fn default() -> Self {
        Self {
            max_iters: 10_000,
            tolerance: 1e-10,
            inner_tolerance: 1e-13,
            step_size: 1.0,
            init: InitMode::Uniform,
            restarts: 3,
            seed: 0,
        }
    }
}

impl BOParams {
    fn check(&self) -> Result<()> {
        if self.max_iters == 0 {
            return Err(Error::InvalidParameter("max_iters must be at least 1".into()));
        }
        for (name, v) in [
            ("tolerance", self.tolerance),
            ("inner_tolerance", self.inner_tolerance),
            ("step_size", self.step_size),
        ] {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be positive")));
            }
        }
        Ok(())
    }

    fn initial_beliefs(&self, mrf: &PairwiseMRF, run: usize) -> Vec<Vec<f64>> {
        let seed = match (run, self.init) {
            (0, InitMode::Uniform) => None,
            (0, InitMode::RandomDirichlet(seed)) => Some(seed),
            (r, _) => Some(self.seed.wrapping_add(r as u64)),
        };
        match seed {
            None => mrf.cardinalities().into_iter().map(|c| vec![1.0 / c as f64; c]).collect(),
            Some(seed) => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                mrf.cardinalities()
                    .into_iter()
                    .map(|c| {
                        let mut v: Vec<f64> = (0..c)
                            .map(|_| {
                                let s: f64 = Exp1.sample(&mut rng);
                                s.max(1e-12)
                            })
                            .collect();
                        normalize(&mut v);
                        v
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone)]
pub struct BOResult {
    pub beliefs: BeliefState,
    pub objective: f64,
    /// Objective at the initial point and after every iteration.
    pub objective_trace: Vec<f64>,
    /// Per-iteration progress measure, aligned with `objective_trace`:
    /// objective decrease (mean field), stationarity residual (Bethe
    /// direct) or message change (BP).
    pub residual_trace: Vec<f64>,
    pub converged: bool,
    pub stationarity_residual: f64,
    pub iterations: usize,
    /// Index of the winning run (0 is the configured initialization).
    pub run: usize,
}

fn best_run(runs: Vec<BOResult>) -> BOResult {
    let mut best: Option<BOResult> = None;
    for r in runs {
        best = match best {
            Some(b) if b.objective <= r.objective + 1e-12 => Some(b),
            _ => Some(r),
        };
    }
    best.expect("at least one run")
}

fn runs<F>(params: &BOParams, f: F) -> Result<BOResult>
where
    F: Fn(usize) -> Result<BOResult> + Sync + Send,
{
    let results: Vec<Result<BOResult>> = (0..=params.restarts).into_par_iter().map(f).collect();
    Ok(best_run(results.into_iter().collect::<Result<Vec<_>>>()?))
}

/// Mean-field logits of node `k`: `ln psi_k + sum_j ln psi_kj beta_j`.
fn mean_field_logits(mrf: &PairwiseMRF, log_edges: &[Vec<f64>], beliefs: &[Vec<f64>], k: usize) -> Vec<f64> {
    let mut logits: Vec<f64> = mrf.node_potential(k).iter().map(|p| p.ln()).collect();
    for nb in mrf.neighbors(k) {
        let e = mrf.edge(nb.edge);
        let table = &log_edges[nb.edge];
        let other = &beliefs[nb.node];
        for (xk, slot) in logits.iter_mut().enumerate() {
            *slot += other
                .iter()
                .enumerate()
                .map(|(xj, &b)| {
                    let idx = if e.i == k { xk * e.cols() + xj } else { xj * e.cols() + xk };
                    table[idx] * b
                })
                .sum::<f64>();
        }
    }
    logits
}

fn mean_field_residual(mrf: &PairwiseMRF, log_edges: &[Vec<f64>], beliefs: &[Vec<f64>]) -> f64 {
    (0..mrf.num_nodes())
        .map(|k| {
            let logits = mean_field_logits(mrf, log_edges, beliefs, k);
            let target = softmax(&logits);
            target
                .iter()
                .zip(&beliefs[k])
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

fn mean_field_run(mrf: &PairwiseMRF, params: &BOParams, run: usize) -> Result<BOResult> {
    let (_, log_edges) = mrf.log_potentials();
    let mut beliefs = params.initial_beliefs(mrf, run);
    let mut objective = mean_field_free_energy(mrf, &BeliefState::node_only(beliefs.clone()))?;
    let mut trace = vec![objective];
    let mut residuals = vec![f64::NAN];
    let mut converged = false;
    for _ in 0..params.max_iters {
        for k in 0..mrf.num_nodes() {
            beliefs[k] = softmax(&mean_field_logits(mrf, &log_edges, &beliefs, k));
        }
        let next = mean_field_free_energy(mrf, &BeliefState::node_only(beliefs.clone()))?;
        trace.push(next);
        let decrease = objective - next;
        residuals.push(decrease);
        objective = next;
        if decrease < params.tolerance {
            converged = true;
            break;
        }
    }
    Ok(BOResult {
        stationarity_residual: mean_field_residual(mrf, &log_edges, &beliefs),
        beliefs: BeliefState::node_only(beliefs),
        objective,
        iterations: trace.len() - 1,
        objective_trace: trace,
        residual_trace: residuals,
        converged,
        run,
    })
}

/// Minimizes the mean-field free energy over products of simplices by cyclic
/// coordinate descent, with random restarts.
pub fn minimize_mean_field(mrf: &PairwiseMRF, params: &BOParams) -> Result<BOResult> {
    params.check()?;
    runs(params, |run| mean_field_run(mrf, params, run))
}

/// Minimizes a function over a product of simplices by entropic mirror
/// descent with backtracking.
#[derive(Debug, Clone)]
pub struct MirrorDescent {
    /// Blocks are contiguous slices of these lengths.
    pub blocks: Vec<usize>,
    pub max_iters: usize,
    /// Stop once `max |g_x - <beta, g>|` over all blocks drops to this.
    pub tolerance: f64,
    pub initial_step: f64,
}

#[derive(Debug, Clone)]
pub struct MirrorOutcome {
    pub point: Vec<f64>,
    pub value: f64,
    pub trace: Vec<f64>,
    pub residual_trace: Vec<f64>,
    pub residual: f64,
    pub converged: bool,
    pub iterations: usize,
}

impl MirrorDescent {
    /// Gradient minus its belief-weighted mean on every block. Inner products
    /// with simplex differences are unchanged but lose the rounding from
    /// large common offsets.
    fn centered(&self, x: &[f64], g: &[f64]) -> Vec<f64> {
        let mut out = Vec::with_capacity(g.len());
        let mut offset = 0;
        for &len in &self.blocks {
            let (xb, gb) = (&x[offset..offset + len], &g[offset..offset + len]);
            let mean: f64 = xb.iter().zip(gb).map(|(a, b)| a * b).sum();
            out.extend(gb.iter().map(|v| v - mean));
            offset += len;
        }
        out
    }

    fn residual(&self, x: &[f64], g: &[f64]) -> f64 {
        let mut offset = 0;
        let mut worst = 0.0f64;
        for &len in &self.blocks {
            let (xb, gb) = (&x[offset..offset + len], &g[offset..offset + len]);
            let mean: f64 = xb.iter().zip(gb).map(|(a, b)| a * b).sum();
            for &gv in gb {
                worst = worst.max((gv - mean).abs());
            }
            offset += len;
        }
        worst
    }

    fn step(&self, x: &[f64], g: &[f64], eta: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(x.len());
        let mut offset = 0;
        for &len in &self.blocks {
            let logits: Vec<f64> = (offset..offset + len).map(|i| x[i].ln() - eta * g[i]).collect();
            out.extend(softmax(&logits));
            offset += len;
        }
        out
    }

    /// `oracle` returns `(value, gradient)` at a point.
    pub fn minimize<F>(&self, init: Vec<f64>, mut oracle: F) -> Result<MirrorOutcome>
    where
        F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    {
        let mut x = init;
        let (mut f, mut g) = oracle(&x)?;
        let mut trace = vec![f];
        let mut eta = self.initial_step;
        let mut residual = self.residual(&x, &g);
        let mut residual_trace = vec![residual];
        let mut converged = residual <= self.tolerance;
        let mut iterations = 0;
        while !converged && iterations < self.max_iters {
            iterations += 1;
            let mut accepted = None;
            let centered = self.centered(&x, &g);
            while eta > 1e-16 {
                let candidate = self.step(&x, &g, eta);
                let (fc, gc) = oracle(&candidate)?;
                let linear: f64 = candidate.iter().zip(&x).zip(&centered).map(|((c, a), gv)| gv * (c - a)).sum();
                let mut divergence = 0.0;
                let mut offset = 0;
                for &len in &self.blocks {
                    divergence += kl_divergence(&candidate[offset..offset + len], &x[offset..offset + len])?;
                    offset += len;
                }
                let decrease = linear + divergence / eta;
                let noise = 1e-11 * (1.0 + f.abs());
                let ok = if decrease.abs() > noise {
                    fc.is_finite() && fc <= f + decrease + 1e-3 * noise && fc <= f + 1e-3 * noise
                } else {
                    // Value differences are below rounding here; test the
                    // symmetrized condition, which only needs gradients.
                    let next = self.centered(&candidate, &gc);
                    let slope: f64 = candidate.iter().zip(&x).zip(&next).map(|((c, a), gv)| gv * (c - a)).sum();
                    gc.iter().all(|v| v.is_finite()) && slope <= 0.0
                };
                if ok {
                    accepted = Some((candidate, fc, gc));
                    break;
                }
                eta *= 0.5;
            }
            let Some((candidate, fc, gc)) = accepted else {
                break;
            };
            x = candidate;
            f = fc;
            g = gc;
            trace.push(f);
            eta = (eta * 1.5).min(1e4);
            residual = self.residual(&x, &g);
            residual_trace.push(residual);
            converged = residual <= self.tolerance;
        }
        Ok(MirrorOutcome {
            point: x,
            value: f,
            trace,
            residual_trace,
            residual,
            converged,
            iterations,
        })
    }
}

/// Per-edge IPF state: row and column scalings of `psi_ij`.
#[derive(Debug, Clone)]
struct EdgeFit {
    row: Vec<f64>,
    col: Vec<f64>,
}

/// Fits `diag(row) psi diag(col)` to the marginals `(bi, bj)` by alternating
/// row and column scaling, warm-started from `fit`.
fn ipf_edge(psi: &[f64], cols: usize, bi: &[f64], bj: &[f64], fit: &mut EdgeFit, tol: f64) -> Vec<f64> {
    let rows = bi.len();
    for _ in 0..100_000 {
        for a in 0..rows {
            let s: f64 = (0..cols).map(|c| psi[a * cols + c] * fit.col[c]).sum();
            fit.row[a] = bi[a] / s;
        }
        let mut err = 0.0f64;
        for c in 0..cols {
            let s: f64 = (0..rows).map(|a| psi[a * cols + c] * fit.row[a]).sum();
            let updated = bj[c] / s;
            // Column marginal before this update, relative to its target.
            err = err.max((s * fit.col[c] - bj[c]).abs());
            fit.col[c] = updated;
        }
        if err <= tol {
            break;
        }
    }
    let mut b = vec![0.0; psi.len()];
    for a in 0..rows {
        for c in 0..cols {
            b[a * cols + c] = fit.row[a] * psi[a * cols + c] * fit.col[c];
        }
    }
    b
}

fn split_blocks(mrf: &PairwiseMRF, flat: &[f64]) -> Vec<Vec<f64>> {
    let mut offset = 0;
    mrf.cardinalities()
        .into_iter()
        .map(|c| {
            let v = flat[offset..offset + c].to_vec();
            offset += c;
            v
        })
        .collect()
}

/// Bethe objective with every edge belief at its exact minimizer for the
/// given node beliefs, plus its gradient in the node beliefs.
struct ReducedBethe<'a> {
    mrf: &'a PairwiseMRF,
    log_nodes: Vec<Vec<f64>>,
    fits: Vec<EdgeFit>,
    inner_tolerance: f64,
}

impl<'a> ReducedBethe<'a> {
    fn new(mrf: &'a PairwiseMRF, inner_tolerance: f64) -> Self {
        let (log_nodes, _) = mrf.log_potentials();
        let fits = mrf
            .edges()
            .iter()
            .map(|e| EdgeFit {
                row: vec![1.0; e.rows()],
                col: vec![1.0; e.cols()],
            })
            .collect();
        Self {
            mrf,
            log_nodes,
            fits,
            inner_tolerance,
        }
    }

    fn beliefs(&mut self, nodes: Vec<Vec<f64>>) -> BeliefState {
        let edges = self
            .mrf
            .edges()
            .iter()
            .zip(self.fits.iter_mut())
            .map(|(e, fit)| ipf_edge(&e.potential, e.cols(), &nodes[e.i], &nodes[e.j], fit, self.inner_tolerance))
            .collect();
        BeliefState::with_edges(nodes, edges)
    }

    fn evaluate(&mut self, flat: &[f64]) -> Result<(f64, Vec<f64>, BeliefState)> {
        let beliefs = self.beliefs(split_blocks(self.mrf, flat));
        let value = bethe_free_energy(self.mrf, &beliefs)?;
        let mut grads: Vec<Vec<f64>> = beliefs
            .nodes()
            .iter()
            .enumerate()
            .map(|(k, b)| {
                let weight = 1.0 - self.mrf.degree(k) as f64;
                b.iter()
                    .zip(&self.log_nodes[k])
                    .map(|(&p, &lp)| weight * p.ln() - lp)
                    .collect()
            })
            .collect();
        for (e, fit) in self.mrf.edges().iter().zip(&self.fits) {
            for (slot, s) in grads[e.i].iter_mut().zip(&fit.row) {
                *slot += s.ln();
            }
            for (slot, s) in grads[e.j].iter_mut().zip(&fit.col) {
                *slot += s.ln();
            }
        }
        Ok((value, grads.concat(), beliefs))
    }
}

/// Stationarity residual of node beliefs for the Bethe program: the largest
/// deviation of the reduced gradient from its belief-weighted mean, with
/// edge beliefs at their exact minimizers. Zero at BP fixed points.
pub fn bethe_stationarity_residual(mrf: &PairwiseMRF, beliefs: &BeliefState) -> Result<f64> {
    let mut reduced = ReducedBethe::new(mrf, 1e-14);
    let flat = beliefs.nodes().concat();
    if flat.iter().any(|&p| !(p > 0.0)) {
        return Ok(f64::INFINITY);
    }
    let (_, g, _) = reduced.evaluate(&flat)?;
    let md = MirrorDescent {
        blocks: mrf.cardinalities(),
        max_iters: 0,
        tolerance: 0.0,
        initial_step: 1.0,
    };
    Ok(md.residual(&flat, &g))
}

fn bethe_direct_run(mrf: &PairwiseMRF, params: &BOParams, run: usize) -> Result<BOResult> {
    let mut reduced = ReducedBethe::new(mrf, params.inner_tolerance);
    let md = MirrorDescent {
        blocks: mrf.cardinalities(),
        max_iters: params.max_iters,
        tolerance: params.tolerance,
        initial_step: params.step_size,
    };
    let init = params.initial_beliefs(mrf, run).concat();
    let outcome = md.minimize(init, |x| reduced.evaluate(x).map(|(f, g, _)| (f, g)))?;
    let (objective, _, beliefs) = reduced.evaluate(&outcome.point)?;
    Ok(BOResult {
        beliefs,
        objective,
        objective_trace: outcome.trace,
        residual_trace: outcome.residual_trace,
        converged: outcome.converged,
        stationarity_residual: outcome.residual,
        iterations: outcome.iterations,
        run,
    })
}

/// Minimizes the Bethe free energy over the local consistency polytope by
/// exponentiated gradient on node beliefs with IPF edge re-fits.
pub fn minimize_bethe_direct(mrf: &PairwiseMRF, params: &BOParams) -> Result<BOResult> {
    params.check()?;
    runs(params, |run| bethe_direct_run(mrf, params, run))
}

/// Bethe stationary point from sum-product BP. The objective trace holds the
/// Bethe free energy of the BP beliefs after every round.
pub fn minimize_bethe_via_bp(mrf: &PairwiseMRF, params: &BOParams) -> Result<BOResult> {
    params.check()?;
    let mut solver = BpSolver::new(mrf, BpMode::Sum, Schedule::synchronous())?;
    let assemble = |solver: &BpSolver| -> Result<BeliefState> {
        let nodes = solver.beliefs().into_nodes();
        Ok(BeliefState::with_edges(nodes, pairwise_beliefs(mrf, solver.messages())?))
    };
    let mut trace = vec![bethe_free_energy(mrf, &assemble(&solver)?)?];
    let mut residuals = vec![f64::NAN];
    let mut converged = false;
    for _ in 0..params.max_iters {
        let residual = solver.step();
        trace.push(bethe_free_energy(mrf, &assemble(&solver)?)?);
        residuals.push(residual);
        if residual <= params.tolerance {
            converged = true;
            break;
        }
    }
    let beliefs = assemble(&solver)?;
    Ok(BOResult {
        objective: *trace.last().expect("nonempty trace"),
        stationarity_residual: bethe_stationarity_residual(mrf, &beliefs)?,
        beliefs,
        iterations: solver.iterations(),
        objective_trace: trace,
        residual_trace: residuals,
        converged,
        run: 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{exact_marginals, partition_function};

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn projection_examples() {
        assert!(close(&simplex_project(&[0.2, 0.8]), &[0.2, 0.8], 1e-15));
        assert_eq!(simplex_project(&[2.0, 0.0]), vec![1.0, 0.0]);
        assert!(close(&simplex_project(&[0.6, 0.6]), &[0.5, 0.5], 1e-15));
        assert!(close(&simplex_project(&[-1.0, 0.3, 0.2]), &[0.0, 0.55, 0.45], 1e-15));
    }

    #[test]
    fn mean_field_edgeless_is_exact_after_one_sweep() {
        let m = PairwiseMRF::new(vec![vec![1.0, 3.0], vec![2.0, 1.0, 1.0]], vec![]).unwrap();
        let r = minimize_mean_field(&m, &BOParams::default()).unwrap();
        assert!(close(r.beliefs.node(0), &[0.25, 0.75], 1e-15));
        assert!(close(r.beliefs.node(1), &[0.5, 0.25, 0.25], 1e-15));
        assert!(r.converged);
        let f = partition_function(&m).unwrap().free_energy();
        assert!((r.objective - f).abs() < 1e-14);
    }

    #[test]
    fn mean_field_symmetric_fixed_point() {
        let m = PairwiseMRF::new(
            vec![vec![1.0, 1.0], vec![1.0, 1.0]],
            vec![(0, 1, vec![vec![2.0, 1.0], vec![1.0, 2.0]])],
        )
        .unwrap();
        let params = BOParams {
            restarts: 0,
            ..BOParams::default()
        };
        let r = minimize_mean_field(&m, &params).unwrap();
        for b in r.beliefs.nodes() {
            assert!(close(b, &[0.5, 0.5], 1e-15));
        }
    }

    #[test]
    fn mean_field_upper_bounds_helmholtz() {
        let m = PairwiseMRF::new(
            vec![vec![2.0, 1.0], vec![1.0, 1.0]],
            vec![(0, 1, vec![vec![3.0, 1.0], vec![1.0, 3.0]])],
        )
        .unwrap();
        let r = minimize_mean_field(&m, &BOParams::default()).unwrap();
        let f = partition_function(&m).unwrap().free_energy();
        assert!(r.objective >= f);
        assert!(r.objective - f < 0.2, "gap {}", r.objective - f);
        for w in r.objective_trace.windows(2) {
            assert!(w[1] - w[0] <= 1e-12);
        }
    }

    #[test]
    fn ipf_matches_marginals() {
        let psi = [1.0, 2.0, 0.5, 3.0, 1.0, 0.25];
        let mut fit = EdgeFit {
            row: vec![1.0; 2],
            col: vec![1.0; 3],
        };
        let b = ipf_edge(&psi, 3, &[0.3, 0.7], &[0.2, 0.5, 0.3], &mut fit, 1e-14);
        let rows = [b[0] + b[1] + b[2], b[3] + b[4] + b[5]];
        assert!(close(&rows, &[0.3, 0.7], 1e-13));
        let cols = [b[0] + b[3], b[1] + b[4], b[2] + b[5]];
        assert!(close(&cols, &[0.2, 0.5, 0.3], 1e-13));
    }

    #[test]
    fn bethe_direct_on_chain_matches_oracle() {
        let m = PairwiseMRF::new(
            vec![vec![1.0, 2.0, 0.5], vec![0.4, 1.0], vec![3.0, 1.0, 1.0]],
            vec![
                (0, 1, vec![vec![2.0, 0.5], vec![0.3, 1.0], vec![1.0, 2.5]]),
                (1, 2, vec![vec![1.0, 0.2, 1.5], vec![0.6, 1.0, 1.0]]),
            ],
        )
        .unwrap();
        let r = minimize_bethe_direct(&m, &BOParams::default()).unwrap();
        let exact = exact_marginals(&m).unwrap();
        assert!(r.beliefs.max_node_difference(&exact) < 1e-6);
        let f = partition_function(&m).unwrap().free_energy();
        assert!((r.objective - f).abs() < 1e-6);
        assert!(r.beliefs.consistency_residual(&m).unwrap() <= 1e-7);
    }

    #[test]
    fn bethe_direct_edgeless_matches_mean_field() {
        let m = PairwiseMRF::new(vec![vec![1.0, 3.0], vec![2.0, 1.0, 1.0]], vec![]).unwrap();
        let bethe = minimize_bethe_direct(&m, &BOParams::default()).unwrap();
        let mf = minimize_mean_field(&m, &BOParams::default()).unwrap();
        assert!(bethe.beliefs.max_node_difference(&mf.beliefs) < 1e-9);
        assert!((bethe.objective - mf.objective).abs() < 1e-9);
    }

    #[test]
    fn uniform_cycle_from_both_solvers() {
        let ones = vec![vec![1.0, 1.0], vec![1.0, 1.0]];
        let m = PairwiseMRF::new(
            vec![vec![1.0, 1.0]; 3],
            vec![(0, 1, ones.clone()), (1, 2, ones.clone()), (0, 2, ones)],
        )
        .unwrap();
        let direct = minimize_bethe_direct(&m, &BOParams::default()).unwrap();
        let via_bp = minimize_bethe_via_bp(&m, &BOParams::default()).unwrap();
        for r in [&direct, &via_bp] {
            for b in r.beliefs.nodes() {
                assert!(close(b, &[0.5, 0.5], 1e-9));
            }
            assert!((r.objective + 3.0 * 2f64.ln()).abs() < 1e-9);
        }
        assert!((partition_function(&m).unwrap().free_energy() + 8f64.ln()).abs() < 1e-14);
    }

    #[test]
    fn via_bp_is_stationary_on_tree() {
        let m = PairwiseMRF::new(
            vec![vec![1.0, 2.0], vec![0.4, 1.0, 2.0], vec![3.0, 1.0]],
            vec![
                (0, 1, vec![vec![2.0, 0.5, 1.0], vec![0.3, 1.0, 2.0]]),
                (1, 2, vec![vec![1.0, 0.2], vec![1.5, 0.6], vec![1.0, 1.0]]),
            ],
        )
        .unwrap();
        let r = minimize_bethe_via_bp(&m, &BOParams::default()).unwrap();
        assert!(r.converged);
        assert!(r.stationarity_residual < 1e-9, "{}", r.stationarity_residual);
        let f = partition_function(&m).unwrap().free_energy();
        assert!((r.objective - f).abs() < 1e-9);
    }

    #[test]
    fn loopy_solvers_agree_on_weak_coupling() {
        let c = vec![vec![1.3, 0.8], vec![0.9, 1.2]];
        let m = PairwiseMRF::new(
            vec![vec![1.0, 2.0], vec![1.5, 1.0], vec![1.0, 1.2], vec![0.7, 1.0]],
            vec![(0, 1, c.clone()), (1, 2, c.clone()), (2, 3, c.clone()), (3, 0, c.clone()), (0, 2, c)],
        )
        .unwrap();
        let via_bp = minimize_bethe_via_bp(&m, &BOParams::default()).unwrap();
        assert!(via_bp.converged);
        let direct = minimize_bethe_direct(&m, &BOParams::default()).unwrap();
        assert!((bethe_free_energy(&m, &via_bp.beliefs).unwrap() - direct.objective).abs() < 1e-4);
        assert!(via_bp.beliefs.max_node_difference(&direct.beliefs) < 1e-4);
    }

    #[test]
    fn invalid_params_are_rejected() {
        let m = PairwiseMRF::new(vec![vec![1.0, 1.0]], vec![]).unwrap();
        let bad = BOParams {
            step_size: 0.0,
            ..BOParams::default()
        };
        assert!(minimize_bethe_direct(&m, &bad).is_err());
        let bad = BOParams {
            max_iters: 0,
            ..BOParams::default()
        };
        assert!(minimize_mean_field(&m, &bad).is_err());
    }
}
