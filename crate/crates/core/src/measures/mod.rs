//! Empirical measures on the discretized space and the block-function lift.

mod assignment;
mod block;
mod empirical;
mod sampling;

pub use assignment::{assignment, assignment_cost};
pub use block::{block_average, lift, pushforward, BlockFunction};
pub use empirical::{moment, transport_costs, wasserstein, EmpiricalMeasure, Metric};
pub use sampling::{sample_atoms, van_der_corput, InitialLaw};
