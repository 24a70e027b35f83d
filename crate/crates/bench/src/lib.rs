//! Shared fixtures for the criterion benchmarks.

use mfc_core::measures::sample_atoms;
use mfc_core::value_lab::{default_law, random_policy};
use mfc_core::{AdvertisingParams, ControlPolicy, CostSpec, Matrix, Model, SimConfig, SystemSpec, Vector};

pub struct Fixture {
    pub system: SystemSpec,
    pub cost: CostSpec,
    pub policy: ControlPolicy,
    pub x0: Vec<Vector>,
    pub cfg: SimConfig,
}

/// Advertising model on `grid_m` nodes with `n` particles and a prepared
/// propagator.
pub fn advertising(grid_m: usize, n: usize, steps: usize, paths: usize) -> Fixture {
    let model = Model::Advertising(AdvertisingParams { grid_m, ..Default::default() });
    let cfg = SimConfig::new(0.0, 1.0, steps, paths, 1).expect("valid sim config");
    let (mut system, cost, _) = model.build().expect("default model builds");
    system.prepare(cfg.dt()).expect("propagator");
    let x0 = sample_atoms(&default_law(), &system.bundle.space, n, 1).expect("atoms");
    let policy = random_policy(&system, cost.cone, 1);
    Fixture { system, cost, policy, x0, cfg }
}

/// Dense `n x n` cost matrix with a fixed pseudo-random pattern.
pub fn cost_matrix(n: usize) -> Matrix {
    Matrix::from_fn(n, n, |i, j| ((i * 131 + j * 71) as f64 * 0.618).fract() + (i as f64 - j as f64).abs() * 0.01)
}
