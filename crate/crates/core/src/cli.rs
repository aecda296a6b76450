//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input error, 3 non-convergence (the result is
//! still written), 4 enumeration cap exceeded, 5 precondition rejected.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::bp::{pairwise_beliefs, BpMode, BpSolver, Schedule, DEFAULT_MAX_ITERS, DEFAULT_TOLERANCE};
use crate::error::{Error, Result};
use crate::fdd::{consensus_residual, distributed_fdd, FddDecision, FddMethod, FddParams};
use crate::free_energy::bethe_free_energy;
use crate::io::{csv, read_model, read_scenario, to_json};
use crate::model::{JointTable, PairwiseMRF, DEFAULT_STATE_CAP, STATE_CAP_ENV};
use crate::optimize::{minimize_bethe_direct, minimize_mean_field, BOParams, BOResult};
use crate::BeliefState;

pub const EXIT_INPUT: u8 = 2;
pub const EXIT_NOT_CONVERGED: u8 = 3;
pub const EXIT_CAP: u8 = 4;
pub const EXIT_PRECONDITION: u8 = 5;

#[derive(Debug, Parser)]
#[command(name = "beliefnet", version, about = "Inference and belief consensus on pairwise Markov random fields")]
pub struct Cli {
    /// Worker threads for solver internals; output does not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InferMethod {
    BpSum,
    BpMax,
    Mf,
    Bethe,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Approximate marginals of a model file.
    Infer {
        model: PathBuf,
        #[arg(long, value_enum, default_value = "bp-sum")]
        method: InferMethod,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Seed of the random restarts (mf, bethe).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Extra Dirichlet-initialized runs (mf, bethe).
        #[arg(long)]
        restarts: Option<usize>,
        /// Message damping in [0, 1) (bp-sum, bp-max).
        #[arg(long, default_value_t = 0.0)]
        damping: f64,
        /// Write a per-iteration CSV trace here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Exact marginals, partition function and free energy by enumeration.
    Oracle { model: PathBuf },
    /// Distributed fault detection on a scenario file.
    Fdd {
        scenario: PathBuf,
        /// Override the scenario's method.
        #[arg(long)]
        method: Option<String>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        trace: Option<PathBuf>,
    },
}

/// Failure with its exit code.
#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        let code = match e {
            Error::StateCapExceeded { .. } => EXIT_CAP,
            Error::IndefiniteInteraction { .. } | Error::DisconnectedTopology => EXIT_PRECONDITION,
            _ => EXIT_INPUT,
        };
        CliError {
            code,
            message: e.to_string(),
        }
    }
}

#[derive(Serialize)]
struct InferDocument {
    method: &'static str,
    converged: bool,
    iterations: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    objective: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    stationarity_residual: Option<f64>,
    node_beliefs: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edge_beliefs: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    map: Option<Vec<usize>>,
}

#[derive(Serialize)]
struct OracleDocument {
    z: f64,
    log_z: f64,
    free_energy: f64,
    node_marginals: Vec<Vec<f64>>,
    edge_marginals: Vec<Vec<f64>>,
    map: Vec<usize>,
}

#[derive(Serialize)]
struct FddDocument<'a> {
    #[serde(flatten)]
    decision: &'a FddDecision,
    consensus_residual: f64,
}

pub const INFER_TRACE_HEADER: &str = "iteration,residual,objective";

/// Output of a successful run: the document for stdout and whether the
/// solver converged.
pub struct Outcome {
    pub document: String,
    pub converged: bool,
}

fn write_trace(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::Input(format!("cannot write {}: {e}", path.display())))
}

fn state_cap() -> Result<u64> {
    match std::env::var(STATE_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| Error::Input(format!("{STATE_CAP_ENV} must be a positive integer, got `{v}`"))),
        Err(_) => Ok(DEFAULT_STATE_CAP),
    }
}

fn run_bp_cli(
    mrf: &PairwiseMRF,
    mode: BpMode,
    damping: f64,
    tol: f64,
    max_iters: usize,
    trace: bool,
) -> Result<(InferDocument, Vec<Vec<f64>>)> {
    if max_iters == 0 || !(tol > 0.0) {
        return Err(Error::InvalidParameter("--max-iters must be >= 1 and --tol positive".into()));
    }
    let mut solver = BpSolver::new(mrf, mode, Schedule::synchronous().with_damping(damping))?;
    let mut rows = Vec::new();
    let mut converged = false;
    for _ in 0..max_iters {
        let residual = solver.step();
        if trace {
            let objective = match mode {
                BpMode::Sum => {
                    let b = BeliefState::with_edges(solver.beliefs().into_nodes(), pairwise_beliefs(mrf, solver.messages())?);
                    bethe_free_energy(mrf, &b)?
                }
                BpMode::Max => f64::NAN,
            };
            rows.push(vec![solver.iterations() as f64, residual, objective]);
        }
        if residual <= tol {
            converged = true;
            break;
        }
    }
    let result = solver.finish(converged);
    let map = (mode == BpMode::Max).then(|| crate::bp::map_decode(&result).0);
    let doc = InferDocument {
        method: if mode == BpMode::Sum { "bp-sum" } else { "bp-max" },
        converged,
        iterations: result.iterations,
        objective: None,
        stationarity_residual: None,
        node_beliefs: result.beliefs.into_nodes(),
        edge_beliefs: None,
        map,
    };
    Ok((doc, rows))
}

fn optimizer_document(method: &'static str, r: BOResult, with_edges: bool) -> (InferDocument, Vec<Vec<f64>>) {
    let rows = r
        .objective_trace
        .iter()
        .zip(&r.residual_trace)
        .enumerate()
        .map(|(i, (o, res))| vec![i as f64, *res, *o])
        .collect();
    let edge_beliefs = if with_edges { r.beliefs.edges().map(|e| e.to_vec()) } else { None };
    let doc = InferDocument {
        method,
        converged: r.converged,
        iterations: r.iterations,
        objective: Some(r.objective),
        stationarity_residual: Some(r.stationarity_residual),
        node_beliefs: r.beliefs.into_nodes(),
        edge_beliefs,
        map: None,
    };
    (doc, rows)
}

#[allow(clippy::too_many_arguments)]
fn infer(
    model: &Path,
    method: InferMethod,
    tol: Option<f64>,
    max_iters: Option<usize>,
    seed: u64,
    restarts: Option<usize>,
    damping: f64,
    trace: Option<&Path>,
) -> Result<Outcome> {
    let mrf = read_model(model)?;
    let (doc, rows) = match method {
        InferMethod::BpSum | InferMethod::BpMax => {
            let mode = if method == InferMethod::BpSum { BpMode::Sum } else { BpMode::Max };
            run_bp_cli(
                &mrf,
                mode,
                damping,
                tol.unwrap_or(DEFAULT_TOLERANCE),
                max_iters.unwrap_or(DEFAULT_MAX_ITERS),
                trace.is_some(),
            )?
        }
        InferMethod::Mf | InferMethod::Bethe => {
            let defaults = BOParams::default();
            let params = BOParams {
                tolerance: tol.unwrap_or(defaults.tolerance),
                max_iters: max_iters.unwrap_or(defaults.max_iters),
                restarts: restarts.unwrap_or(defaults.restarts),
                seed,
                ..defaults
            };
            if method == InferMethod::Mf {
                optimizer_document("mf", minimize_mean_field(&mrf, &params)?, false)
            } else {
                optimizer_document("bethe", minimize_bethe_direct(&mrf, &params)?, true)
            }
        }
    };
    if let Some(path) = trace {
        write_trace(path, &csv(INFER_TRACE_HEADER, &rows))?;
    }
    Ok(Outcome {
        converged: doc.converged,
        document: to_json(&doc),
    })
}

fn oracle(model: &Path) -> Result<Outcome> {
    let mrf = read_model(model)?;
    let table = JointTable::enumerate(&mrf, state_cap()?)?;
    let partition = table.partition();
    let marginals = table.marginals(&mrf);
    let doc = OracleDocument {
        z: partition.z,
        log_z: partition.log_z,
        free_energy: partition.free_energy(),
        node_marginals: marginals.nodes().to_vec(),
        edge_marginals: marginals.edges().map(|e| e.to_vec()).unwrap_or_default(),
        map: table.argmax().0,
    };
    Ok(Outcome {
        document: to_json(&doc),
        converged: true,
    })
}

fn fdd(scenario: &Path, method: Option<&str>, trace: Option<&Path>) -> Result<Outcome> {
    let s = read_scenario(scenario)?;
    let method: FddMethod = match method {
        Some(m) => m.parse()?,
        None => s.method,
    };
    let mut params = FddParams {
        epsilon: s.epsilon,
        ..FddParams::default()
    };
    if let Some(tol) = s.solver.tolerance {
        params.bp_tolerance = tol;
        params.consensus.tolerance = tol;
    }
    if let Some(n) = s.solver.max_iters {
        params.bp_max_iters = n;
        params.consensus.max_iters = n;
    }
    params.consensus.step = s.solver.step;
    params.consensus.assume_simplex_psd = s.solver.assume_simplex_psd;
    let decision = distributed_fdd(&s.bank, &s.evidence, &s.topology, method, &params)?;
    if let (Some(path), Some(t)) = (trace, &decision.trace) {
        write_trace(path, &t.to_csv())?;
    }
    let doc = FddDocument {
        decision: &decision,
        consensus_residual: if decision.agents.len() > 1 { consensus_residual(&decision) } else { 0.0 },
    };
    Ok(Outcome {
        document: to_json(&doc),
        converged: decision.diagnostics.converged,
    })
}

fn dispatch(command: &Command) -> Result<Outcome> {
    match command {
        Command::Infer {
            model,
            method,
            tol,
            max_iters,
            seed,
            restarts,
            damping,
            trace,
        } => infer(model, *method, *tol, *max_iters, *seed, *restarts, *damping, trace.as_deref()),
        Command::Oracle { model } => oracle(model),
        Command::Fdd {
            scenario,
            method,
            seed: _,
            trace,
        } => fdd(scenario, method.as_deref(), trace.as_deref()),
    }
}

/// Runs a parsed command and returns the document and exit code.
pub fn run(cli: &Cli) -> std::result::Result<Outcome, CliError> {
    match cli.threads {
        Some(0) => Err(CliError {
            code: EXIT_INPUT,
            message: "--threads must be at least 1".into(),
        }),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(|e| CliError {
                code: EXIT_INPUT,
                message: e.to_string(),
            })?;
            pool.install(|| dispatch(&cli.command)).map_err(CliError::from)
        }
        None => dispatch(&cli.command).map_err(CliError::from),
    }
}

pub fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { 0 });
        }
    };
    match run(&cli) {
        Ok(outcome) => {
            let mut stdout = std::io::stdout().lock();
            let _ = stdout.write_all(outcome.document.as_bytes());
            let _ = stdout.flush();
            if outcome.converged {
                ExitCode::SUCCESS
            } else {
                eprintln!("warning: solver did not converge");
                ExitCode::from(EXIT_NOT_CONVERGED)
            }
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
