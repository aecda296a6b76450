//! Two agents share a budget: each wants its own amount but together they
//! may use at most 5. Nonnegative prices on the budget steer them to the
//! constrained optimum.

use beliefnet::consensus::{run_coupled_inequality, CoupledAgent, CoupledProblem, DualParams, QuadraticAgent, StepRule};
use nalgebra::DMatrix;

fn main() -> beliefnet::Result<()> {
    let agents: Vec<Box<dyn CoupledAgent>> = vec![
        Box::new(QuadraticAgent::new(vec![3.0])),
        Box::new(QuadraticAgent::new(vec![4.0])),
    ];
    // 5 - x1 - x2 >= 0
    let maps = vec![DMatrix::from_element(1, 1, -1.0), DMatrix::from_element(1, 1, -1.0)];
    let problem = CoupledProblem::new(agents, maps, vec![5.0])?;

    let params = DualParams { step: StepRule::Constant { alpha: 0.3 }, max_iters: 5000, tolerance: 1e-9 };
    let r = run_coupled_inequality(&problem, &params)?;
    println!("converged {} after {} updates", r.converged, r.iterations);
    println!("allocations {:.6?} (expected [2, 3])", r.local);
    println!("budget price {:.6} (expected 1)", r.prices[0]);
    println!("slack {:.2e}", problem.slack(&r.local)[0]);
    Ok(())
}
