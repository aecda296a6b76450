//! Minimizing the Bethe free energy directly and through loopy BP.
//!
//! Both land on a stationary point; on this weakly coupled cycle it is the
//! same one.

use beliefnet::model::{exact_marginals, partition_function};
use beliefnet::optimize::{minimize_bethe_direct, minimize_bethe_via_bp, BOParams};
use beliefnet::PairwiseMRF;

fn main() -> beliefnet::Result<()> {
    let n = 5;
    let nodes = (0..n).map(|k| vec![1.0, 1.0 + 0.3 * k as f64]).collect();
    let edges = (0..n)
        .map(|k| (k, (k + 1) % n, vec![vec![1.5, 1.0], vec![1.0, 1.5]]))
        .collect();
    let mrf = PairwiseMRF::new(nodes, edges)?;
    let params = BOParams { restarts: 0, ..BOParams::default() };

    let direct = minimize_bethe_direct(&mrf, &params)?;
    let via_bp = minimize_bethe_via_bp(&mrf, &params)?;
    let f = partition_function(&mrf)?.free_energy();
    let exact = exact_marginals(&mrf)?;

    println!("direct  {:.10} residual {:.1e} ({} iterations)", direct.objective, direct.stationarity_residual, direct.iterations);
    println!("via BP  {:.10} residual {:.1e} ({} iterations)", via_bp.objective, via_bp.stationarity_residual, via_bp.iterations);
    println!("F       {f:.10}");
    println!("belief gap between routes {:.2e}", direct.beliefs.max_node_difference(&via_bp.beliefs));
    println!("error against exact marginals {:.2e}", direct.beliefs.max_node_difference(&exact));
    Ok(())
}
