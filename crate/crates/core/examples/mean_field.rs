//! Mean-field coordinate descent on a loopy grid, with random restarts.

use beliefnet::model::partition_function;
use beliefnet::optimize::{minimize_mean_field, BOParams};
use beliefnet::PairwiseMRF;

fn main() -> beliefnet::Result<()> {
    // 3x3 ferromagnetic grid with a field on one corner.
    let side = 3;
    let mut nodes = vec![vec![1.0, 1.0]; side * side];
    nodes[0] = vec![1.0, 3.0];
    let coupling = vec![vec![2.0, 1.0], vec![1.0, 2.0]];
    let mut edges = Vec::new();
    for r in 0..side {
        for c in 0..side {
            let k = r * side + c;
            if c + 1 < side {
                edges.push((k, k + 1, coupling.clone()));
            }
            if r + 1 < side {
                edges.push((k, k + side, coupling.clone()));
            }
        }
    }
    let mrf = PairwiseMRF::new(nodes, edges)?;

    let params = BOParams { restarts: 5, seed: 7, ..BOParams::default() };
    let result = minimize_mean_field(&mrf, &params)?;
    let f = partition_function(&mrf)?.free_energy();
    println!(
        "mean field {:.6} after {} sweeps (run {}), F = {f:.6}, gap {:.3e}",
        result.objective,
        result.iterations,
        result.run,
        result.objective - f
    );
    for (k, b) in result.beliefs.nodes().iter().enumerate() {
        println!("node {k}: P(x=1) = {:.4}", b[1]);
    }
    Ok(())
}
