//! Monte Carlo values, independent oracles and verification experiments.

mod estimate;
mod experiments;
mod oracle;
mod report;

pub use estimate::{describe, estimate_cost, lifted_path_costs, path_costs};
pub use experiments::*;
pub use oracle::{
    advertising_feedback, costate_feedback, oracle_adjoint_linear, oracle_open_loop, AdjointSolution, CoarseSpec,
    OpenLoopResult, ADJOINT_REFINEMENT, MAX_CANDIDATES,
};
pub use report::{mean_and_se, paired_difference, CaseResult, ExperimentReport, PlotSeries, ValueEstimate};
