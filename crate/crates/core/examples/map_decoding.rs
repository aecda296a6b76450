//! Max-product decoding, and why per-node marginal argmax is not a MAP
//! decoder.

use beliefnet::belief::argmax;
use beliefnet::bp::{map_decode, run_bp, BpMode, Schedule};
use beliefnet::io::parse_model;
use beliefnet::model::{energy, exact_marginals, JointTable, DEFAULT_STATE_CAP};

const TRIANGLE: &str = include_str!("../tests/data/mmap_caveat.json");

fn main() -> beliefnet::Result<()> {
    let mrf = parse_model(TRIANGLE)?;
    let table = JointTable::enumerate(&mrf, DEFAULT_STATE_CAP)?;
    let map = table.argmax();
    println!("joint MAP            {:?} (energy {:.4})", map.states(), energy(&mrf, &map)?);

    let marginals = exact_marginals(&mrf)?;
    let per_node: Vec<usize> = marginals.nodes().iter().map(|b| argmax(b)).collect();
    println!("argmax of marginals  {per_node:?}");

    let sum = run_bp(&mrf, BpMode::Sum, Schedule::synchronous(), 1000, 1e-12)?;
    let sum_node: Vec<usize> = sum.beliefs.nodes().iter().map(|b| argmax(b)).collect();
    println!("argmax of sum-product beliefs {sum_node:?}");

    // The triangle is loopy, so max-product is a heuristic here too.
    let max = run_bp(&mrf, BpMode::Max, Schedule::synchronous(), 1000, 1e-12)?;
    let decoded = map_decode(&max);
    println!(
        "max-product decode   {:?} (converged {}, energy {:.4})",
        decoded.states(),
        max.converged,
        energy(&mrf, &decoded)?
    );
    Ok(())
}
