use std::sync::Arc;

use rand::Rng;

use crate::dynamics::noise::{counter_rng, POLICY_STREAM};
use crate::dynamics::SystemSpec;
use crate::error::Result;
use crate::hamiltonian::{ControlCone, ControlPolicy, CostSpec};
use crate::measures::InitialLaw;
use crate::models::Model;
use crate::space_ops::{SpaceKind, SpaceSpec};
use crate::Vector;

/// Floor added to statistical tolerances for identities that hold exactly
/// in exact arithmetic: `MACHINE_FLOOR * (1 + |value|)`.
pub const MACHINE_FLOOR: f64 = 1e-10;

pub(crate) fn floor(v: f64) -> f64 {
    MACHINE_FLOOR * (1.0 + v.abs())
}

/// Build a model and cache its propagator for step `dt`.
pub fn build_prepared(model: &Model, dt: f64) -> Result<(SystemSpec, CostSpec)> {
    let (mut system, cost, _) = model.build()?;
    system.prepare(dt)?;
    Ok((system, cost))
}

/// Two smooth, well-separated initial states compatible with the space's
/// boundary conditions.
pub fn default_profiles(space: &SpaceSpec) -> [Vector; 2] {
    match space.kind {
        SpaceKind::Delay => {
            let a = Vector::from_element(space.dim, 1.0);
            let d = space.interval_length();
            let mut b = Vector::zeros(space.dim);
            b[0] = 0.2;
            for (j, xi) in space.grid.iter().enumerate() {
                b[1 + j] = 0.2 + 0.6 * (-xi) / d;
            }
            [a, b]
        }
        SpaceKind::Vintage => {
            let len = space.interval_length();
            let a = Vector::from_fn(space.dim, |j, _| (std::f64::consts::PI * space.grid[j] / len).sin());
            let b = Vector::from_fn(space.dim, |j, _| {
                let s = space.grid[j] / len;
                2.0 * s * (1.0 - s)
            });
            [a, b]
        }
        SpaceKind::Euclid => [Vector::from_element(space.dim, 1.0), Vector::from_element(space.dim, 0.2)],
    }
}

/// Smooth random initial states around a unit level.
pub fn default_law() -> InitialLaw {
    InitialLaw::GaussianProfile {
        head_mean: 1.0,
        head_std: 0.3,
        amplitude: 0.2,
        modes: 3,
    }
}

/// Two-profile mixture used by the convergence sweep.
///
/// The weight `0.505` is off the dyadic grid in the first binary digits that
/// the stratified selection resolves for `n <= 128`, so the selected
/// proportion approaches the target strictly monotonically along powers of
/// two instead of stalling on ties.
pub fn sweep_law(space: &SpaceSpec) -> InitialLaw {
    let [a, b] = default_profiles(space);
    InitialLaw::Mixture {
        profiles: vec![a, b],
        weights: vec![0.505, 0.495],
        jitter: 0.0,
    }
}

/// Feedback `a_j = proj(c0 + c1 x_j + c2 mean_j + c3 sin(c4 t))` with
/// coefficients drawn from `seed`; channel `j` reads coordinate `j` when
/// there is one control per coordinate and the first coordinate otherwise.
pub fn random_policy(system: &SystemSpec, cone: ControlCone, seed: u64) -> ControlPolicy {
    let mut rng = counter_rng(&[POLICY_STREAM, seed]);
    let c0 = rng.random_range(0.2..1.0);
    let c1 = rng.random_range(-1.0..1.0);
    let c2 = rng.random_range(-1.0..1.0);
    let c3 = rng.random_range(-0.5..0.5);
    let c4 = rng.random_range(1.0..6.0);
    let qdim = system.control_dim();
    let per_coord = qdim == system.dim();
    ControlPolicy::feedback(
        qdim,
        cone,
        Arc::new(move |inp| {
            Vector::from_fn(qdim, |j, _| {
                let c = if per_coord { j } else { 0 };
                cone.project(c0 + c1 * inp.state[c] + c2 * inp.mean[c] + c3 * (c4 * inp.time).sin())
            })
        }),
    )
}
