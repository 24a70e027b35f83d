//! Time integration of the particle system, its lift and the scalar delay
//! equation, all driven by one counter-based common noise.

pub(crate) mod noise;
mod sdde;
mod simulate;
mod system;

pub use noise::gaussian_increment;
pub use sdde::{delay_reference, simulate_sdde_direct, SddePaths};
pub(crate) use simulate::increments;
pub use simulate::{
    for_each_path, run_lifted_path, run_particle_path, simulate_lifted, simulate_particles, PathBundle,
    PathObserver, PathRecord, Representation,
};
pub use system::{SimConfig, SystemSpec};
