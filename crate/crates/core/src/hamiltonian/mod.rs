//! Costs, control policies, pointwise Hamiltonians and path costs.

mod cost;
mod pathcost;
mod pointwise;
mod policy;

pub use cost::{ControlCost, CostSpec, ScalarFn, StateCost, StateFn};
pub use pathcost::{cost_of_pathbundle, CostAccumulator};
pub use pointwise::{
    channel_slopes, feedback_gamma_star, hamiltonian_pointwise, minimize_channel, minimize_channel_numeric,
    truncation_radius, GOLDEN_TOL, GRID_POINTS,
};
pub use policy::{ControlCone, ControlPolicy, FeedbackFn, FeedbackInput, PolicyKind};
