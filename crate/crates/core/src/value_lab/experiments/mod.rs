//! Verification experiments; each returns an [`ExperimentReport`](super::ExperimentReport)
//! with one row per checked case.

mod checks;
mod common;
mod feedback;
mod lifting;
mod regularity;
mod sweep;

pub use checks::{
    exp_diagnose, exp_sdde_check, exp_truncation, exp_wasserstein_oracle, logcosh_cost, SddeSpec, OUTPUT_BOUND_TOL,
    SDDE_MIN_ORDER, TRUNCATION_TOL,
};
pub use common::{default_law, default_profiles, random_policy, sweep_law, MACHINE_FLOOR};
pub use feedback::{exp_feedback_vs_bruteforce, FeedbackSpec};
pub use lifting::{exp_lifting_identity, LiftingSpec, LIFT_TOL};
pub use regularity::{dual_lipschitz, exp_regularity_probe, mean_gradient, RegularitySpec};
pub use sweep::{exp_convergence_sweep, wasserstein_unequal, SweepPolicy, SweepSpec};
