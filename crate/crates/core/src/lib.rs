//! Pairwise Markov random fields with exact oracles, belief propagation,
//! free-energy minimization and distributed consensus.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod belief;
pub mod bp;
pub mod cli;
pub mod consensus;
pub mod error;
pub mod fdd;
pub mod io;
pub mod free_energy;
pub mod model;
pub mod optimize;

pub use belief::BeliefState;
pub use error::{Error, Result};
pub use model::{Assignment, PairwiseMRF};
