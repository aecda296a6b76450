//! Consensus by dual decomposition: agents with private quadratic utilities
//! agree on one point. The agreed point is the curvature-weighted mean of
//! their centers.

use beliefnet::consensus::{run_dual_decomposition, ConsensusProblem, DualParams, QuadraticAgent, SlaveProblem, StepRule};

fn main() -> beliefnet::Result<()> {
    let specs = [(vec![1.0, 0.0], 1.0), (vec![4.0, 2.0], 2.0), (vec![-2.0, 5.0], 1.0)];
    let agents: Vec<Box<dyn SlaveProblem>> = specs
        .iter()
        .map(|(c, w)| Box::new(QuadraticAgent::new(c.clone()).with_curvature(*w)) as Box<dyn SlaveProblem>)
        .collect();
    let problem = ConsensusProblem::consensus(agents)?;

    for step in [StepRule::Constant { alpha: 0.5 }, StepRule::Diminishing { alpha0: 1.0 }] {
        let params = DualParams { step, max_iters: 5000, tolerance: 1e-8 };
        let r = run_dual_decomposition(&problem, &params)?;
        println!(
            "{step:?}: converged {} in {} updates, solution {:.6?}",
            r.converged, r.iterations, r.solution
        );
        for row in r.trace.rows.iter().step_by((r.trace.len() / 5).max(1)) {
            println!("  n={:<5} dual {:>12.6} residual {:.3e}", row.iteration, row.dual_value, row.residual);
        }
    }
    // Weighted mean of the centers, for comparison.
    let total: f64 = specs.iter().map(|(_, w)| w).sum();
    let mean: Vec<f64> = (0..2).map(|d| specs.iter().map(|(c, w)| w * c[d]).sum::<f64>() / total).collect();
    println!("expected {mean:.6?}");
    Ok(())
}
