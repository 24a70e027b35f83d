//! Numerical laboratory for controlled interacting particle systems whose
//! per-particle state lives in a discretized Hilbert space.
//!
//! The crate is organised bottom-up:
//!
//! * [`space_ops`] builds the discretized state spaces (delay and vintage),
//!   the generator `A`, its propagator `exp(tA)`, its inverse and the weak-B
//!   operator `B = (A^-1)^* A^-1`.
//! * [`measures`] holds empirical measures, Wasserstein distances in the
//!   strong and `|.|_-1` metrics, block-function lifts and atom sampling.
//! * [`dynamics`] integrates the particle system and its lifted counterpart
//!   with a shared counter-based common noise, plus a direct delay-equation
//!   integrator for cross-checks.
//! * [`hamiltonian`] evaluates costs, Hamiltonians and feedback laws.
//! * [`value_lab`] runs Monte Carlo value estimation, independent oracles and
//!   the verification experiments.
//! * [`models`] assembles the advertising-with-delay and vintage-capital
//!   applications.

pub mod dynamics;
pub mod error;
pub mod hamiltonian;
pub mod measures;
pub mod models;
pub mod space_ops;
pub mod value_lab;

pub use dynamics::{
    gaussian_increment, simulate_lifted, simulate_particles, PathBundle, PathRecord, SimConfig,
    SystemSpec,
};
pub use error::{Error, Result};
pub use hamiltonian::{
    feedback_gamma_star, hamiltonian_pointwise, truncation_radius, ControlCone, ControlCost,
    ControlPolicy, CostSpec, StateCost,
};
pub use measures::{BlockFunction, EmpiricalMeasure, InitialLaw, Metric};
pub use models::{AdvertisingParams, Model, VintageParams};
pub use space_ops::{GeneratorBundle, OperatorDiagnostics, SpaceKind, SpaceSpec};
pub use value_lab::{ExperimentReport, ValueEstimate};

/// Dense state vector in a discretized space.
pub type Vector = nalgebra::DVector<f64>;
/// Dense matrix; ensembles store one particle per column.
pub type Matrix = nalgebra::DMatrix<f64>;
