//! Sum-product on a small tree, checked against brute-force enumeration.
//!
//! Run with `cargo run --example tree_marginals`.

use beliefnet::bp::{run_bp, BpMode, Schedule};
use beliefnet::model::{exact_marginals, partition_function};
use beliefnet::PairwiseMRF;

fn main() -> beliefnet::Result<()> {
    // A star: node 0 in the middle, three binary leaves and one ternary.
    let attract = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
    let mrf = PairwiseMRF::new(
        vec![vec![1.0, 3.0], vec![2.0, 1.0], vec![1.0, 1.0], vec![1.0, 4.0], vec![1.0, 2.0, 3.0]],
        vec![
            (0, 1, attract.clone()),
            (0, 2, attract.clone()),
            (0, 3, vec![vec![1.0, 3.0], vec![3.0, 1.0]]),
            (0, 4, vec![vec![1.0, 0.5, 2.0], vec![2.0, 1.0, 0.5]]),
        ],
    )?;

    let bp = run_bp(&mrf, BpMode::Sum, Schedule::synchronous(), 100, 1e-12)?;
    let exact = exact_marginals(&mrf)?;
    println!("converged after {} rounds", bp.iterations);
    for k in 0..mrf.num_nodes() {
        println!("node {k}: bp {:.6?} exact {:.6?}", bp.beliefs.node(k), exact.node(k));
    }
    println!("max error {:.2e}", bp.beliefs.max_node_difference(&exact));
    println!("ln Z = {:.6}", partition_function(&mrf)?.log_z);
    Ok(())
}
