//! Loopy sum-product can converge and still pick the wrong hypothesis.
//!
//! Four agents in a clique lean mildly towards "nominal", and a pendant
//! agent has strong evidence of a fault. The oracle posterior says
//! "fault". Loopy BP overcounts the clique's evidence around its cycles
//! and settles on "nominal".

use beliefnet::fdd::{distributed_fdd, FddMethod, FddParams};
use beliefnet::io::parse_scenario;

const SCENARIO: &str = include_str!("../tests/data/fdd_loopy_probe.json");

fn main() -> beliefnet::Result<()> {
    let s = parse_scenario(SCENARIO)?;
    let params = FddParams { epsilon: s.epsilon, ..FddParams::default() };
    for method in [FddMethod::BpSum, FddMethod::BetheConsensus] {
        let d = distributed_fdd(&s.bank, &s.evidence, &s.topology, method, &params)?;
        println!(
            "{:<16} converged {} in {:>3} rounds: {:<8} (oracle: {}, posterior {:.4?})",
            method.name(),
            d.diagnostics.converged,
            d.diagnostics.iterations,
            d.label,
            s.bank.labels()[d.oracle_decision],
            d.oracle_posterior
        );
    }
    Ok(())
}
