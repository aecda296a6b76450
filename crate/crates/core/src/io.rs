//! JSON model and scenario files, and result documents.
//!
//! Numbers are written in the shortest decimal form that parses back to the
//! same `f64`, so `parse(serialize(mrf)) == mrf` holds exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::consensus::StepRule;
use crate::error::{Error, Result};
use crate::fdd::{FddMethod, HypothesisBank, LocalEvidence, DEFAULT_EPSILON};
use crate::model::{ModelSpec, PairwiseMRF};

/// Deserializes `text`, naming the offending key and position on failure.
pub fn parse_json<T: DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    let value = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let inner = e.into_inner();
        if path == "." {
            Error::Input(inner.to_string())
        } else {
            Error::Input(format!("at key `{path}`: {inner}"))
        }
    })?;
    de.end().map_err(|e| Error::Input(e.to_string()))?;
    Ok(value)
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Input(format!("cannot read {}: {e}", path.display())))
}

fn with_path<T>(path: &Path, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Input(m) => Error::Input(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn parse_model(text: &str) -> Result<PairwiseMRF> {
    PairwiseMRF::from_spec(&parse_json::<ModelSpec>(text)?)
}

pub fn read_model(path: &Path) -> Result<PairwiseMRF> {
    with_path(path, parse_model(&read(path)?))
}

pub fn model_to_json(mrf: &PairwiseMRF) -> String {
    to_json(&mrf.to_spec())
}

/// Pretty JSON with a trailing newline.
pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("result documents serialize");
    s.push('\n');
    s
}

/// Optional solver settings of a scenario.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSpec {
    /// BP message tolerance or consensus residual tolerance.
    #[serde(default)]
    pub tolerance: Option<f64>,
    #[serde(default)]
    pub max_iters: Option<usize>,
    #[serde(default)]
    pub step: Option<StepRule>,
    /// Accept indefinite mean-field interactions (asserted PSD on the
    /// simplex).
    #[serde(default)]
    pub assume_simplex_psd: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub hypotheses: Vec<String>,
    /// Uniform when omitted.
    #[serde(default)]
    pub prior: Option<Vec<f64>>,
    pub agents: Vec<LocalEvidence>,
    #[serde(default)]
    pub topology: Vec<(String, String)>,
    #[serde(default = "default_method")]
    pub method: FddMethod,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub solver: SolverSpec,
}

fn default_method() -> FddMethod {
    FddMethod::BpSum
}

fn default_epsilon() -> f64 {
    DEFAULT_EPSILON
}

/// A scenario with agent ids resolved to indices.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub bank: HypothesisBank,
    pub evidence: Vec<LocalEvidence>,
    pub topology: Vec<(usize, usize)>,
    pub method: FddMethod,
    pub epsilon: f64,
    pub solver: SolverSpec,
}

impl ScenarioFile {
    pub fn resolve(self) -> Result<Scenario> {
        let h = self.hypotheses.len();
        let prior = self.prior.unwrap_or_else(|| vec![1.0 / h as f64; h]);
        let bank = HypothesisBank::new(self.hypotheses, prior)?;
        let index = |id: &str| {
            self.agents
                .iter()
                .position(|a| a.id == id)
                .ok_or_else(|| Error::UnknownAgent(id.to_string()))
        };
        let topology = self
            .topology
            .iter()
            .map(|(a, b)| Ok((index(a)?, index(b)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Scenario {
            bank,
            evidence: self.agents,
            topology,
            method: self.method,
            epsilon: self.epsilon,
            solver: self.solver,
        })
    }
}

pub fn parse_scenario(text: &str) -> Result<Scenario> {
    parse_json::<ScenarioFile>(text)?.resolve()
}

pub fn read_scenario(path: &Path) -> Result<Scenario> {
    with_path(path, parse_scenario(&read(path)?))
}

/// CSV with a fixed header. Non-finite cells are left empty.
pub fn csv(header: &str, rows: &[Vec<f64>]) -> String {
    let mut out = String::from(header);
    out.push('\n');
    for row in rows {
        let cells: Vec<String> = row
            .iter()
            .enumerate()
            .map(|(c, v)| match (c, v.is_finite()) {
                (0, _) => format!("{}", *v as u64),
                (_, true) => format!("{v:e}"),
                (_, false) => String::new(),
            })
            .collect();
        let _ = writeln!(out, "{}", cells.join(","));
    }
    out
}
