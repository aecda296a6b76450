//! Gibbs, mean-field and Bethe free energies on one model.
//!
//! The Gibbs free energy of any joint exceeds `F = -ln Z` by its KL
//! divergence to the true distribution. Mean field only sees product
//! distributions, so it bounds `F` from above. On a tree the Bethe free
//! energy of the exact marginals is `F` itself.

use beliefnet::bp::{pairwise_beliefs, run_bp, BpMode, Schedule};
use beliefnet::free_energy::{bethe_free_energy, gibbs_free_energy, kl_divergence, mean_field_free_energy};
use beliefnet::model::{exact_marginals, JointTable, DEFAULT_STATE_CAP};
use beliefnet::{BeliefState, PairwiseMRF};

fn main() -> beliefnet::Result<()> {
    let mrf = PairwiseMRF::new(
        vec![vec![1.0, 2.0], vec![3.0, 1.0], vec![1.0, 1.0]],
        vec![
            (0, 1, vec![vec![3.0, 1.0], vec![1.0, 3.0]]),
            (1, 2, vec![vec![1.0, 2.0], vec![2.0, 1.0]]),
        ],
    )?;
    let table = JointTable::enumerate(&mrf, DEFAULT_STATE_CAP)?;
    let f = table.partition().free_energy();
    println!("F = -ln Z            {f:.6}");

    let uniform = vec![1.0 / table.len() as f64; table.len()];
    let g = gibbs_free_energy(&mrf, &uniform)?;
    let kl = kl_divergence(&uniform, table.probabilities())?;
    println!("G(uniform)           {g:.6}  (F + KL = {:.6})", f + kl);

    let exact = exact_marginals(&mrf)?;
    let mf = mean_field_free_energy(&mrf, &exact.without_edges())?;
    println!("mean field at exact marginals {mf:.6}  (>= F)");

    let bp = run_bp(&mrf, BpMode::Sum, Schedule::synchronous(), 100, 1e-13)?;
    let beliefs = BeliefState::with_edges(bp.beliefs.into_nodes(), pairwise_beliefs(&mrf, &bp.messages)?);
    println!("Bethe at BP fixed point       {:.6}  (= F on a tree)", bethe_free_energy(&mrf, &beliefs)?);
    Ok(())
}
