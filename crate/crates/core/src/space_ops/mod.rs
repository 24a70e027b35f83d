//! Discretized Hilbert spaces, the generator `A`, its semigroup and the
//! weak-B operator.

mod diagnostics;
mod expm;
mod generator;
mod space;

pub use diagnostics::{verify_operator_assumptions, OperatorDiagnostics};
pub use expm::expm;
pub use generator::{assemble_generator, GeneratorBundle};
pub use space::{build_delay_space, build_euclid_space, build_vintage_space, SpaceKind, SpaceSpec};
