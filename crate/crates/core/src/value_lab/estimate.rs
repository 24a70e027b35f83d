use super::report::ValueEstimate;
use crate::dynamics::{for_each_path, run_lifted_path, run_particle_path, Representation, SimConfig, SystemSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::{ControlPolicy, CostAccumulator, CostSpec};
use crate::measures::BlockFunction;
use crate::{Matrix, Vector};

pub(crate) fn pack(x0: &[Vector]) -> Result<Matrix> {
    if x0.is_empty() {
        return Err(Error::InvalidParameter("at least one particle is required".into()));
    }
    for x in x0 {
        crate::error::ensure_dim(x0[0].len(), x.len(), "particle state")?;
    }
    Ok(Matrix::from_columns(x0))
}

fn check(system: &SystemSpec, cost: &CostSpec, policy: &ControlPolicy, dim: usize, n: usize, cfg: &SimConfig) -> Result<()> {
    cfg.validate()?;
    crate::error::ensure_dim(system.dim(), dim, "initial state")?;
    crate::error::ensure_dim(system.control_dim(), cost.control_dim(), "cost control channels")?;
    crate::error::ensure_dim(system.control_dim(), policy.control_dim(), "policy control dimension")?;
    cost.check_dim(system.dim())?;
    policy.check_compatible(n, cfg.steps)
}

/// Per-path costs of the particle system, streamed without storing paths.
pub fn path_costs(
    system: &SystemSpec,
    cost: &CostSpec,
    policy: &ControlPolicy,
    x0: &[Vector],
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    let x = pack(x0)?;
    check(system, cost, policy, x.nrows(), x.ncols(), cfg)?;
    let prop = system.bundle.propagator(cfg.dt())?.into_owned();
    for_each_path(cfg.paths, |p| {
        let mut acc = CostAccumulator::new(cost, cfg.dt(), Representation::Particles);
        run_particle_path(system, policy, &x, cfg, &prop, p, &mut acc)?;
        Ok(acc.total())
    })
}

/// Per-path costs of the lifted equation started from a block function.
pub fn lifted_path_costs(
    system: &SystemSpec,
    cost: &CostSpec,
    policy: &ControlPolicy,
    x0: &BlockFunction,
    cfg: &SimConfig,
) -> Result<Vec<f64>> {
    check(system, cost, policy, x0.dim(), x0.partition_size(), cfg)?;
    let prop = system.bundle.propagator(cfg.dt())?.into_owned();
    for_each_path(cfg.paths, |p| {
        let mut acc = CostAccumulator::new(cost, cfg.dt(), Representation::Lifted);
        run_lifted_path(system, policy, x0, cfg, &prop, p, &mut acc)?;
        Ok(acc.total())
    })
}

/// Short description of a simulation setup, used when no run-level
/// fingerprint is available.
pub fn describe(cfg: &SimConfig, n: usize) -> String {
    format!(
        "t0={};T={};steps={};paths={};seed={};n={}",
        cfg.t0, cfg.horizon, cfg.steps, cfg.paths, cfg.seed, n
    )
}

/// Monte Carlo mean and standard error of the cost under `policy`.
pub fn estimate_cost(
    system: &SystemSpec,
    cost: &CostSpec,
    policy: &ControlPolicy,
    x0: &[Vector],
    cfg: &SimConfig,
) -> Result<ValueEstimate> {
    let samples = path_costs(system, cost, policy, x0, cfg)?;
    ValueEstimate::from_samples(&samples, cfg.seed, describe(cfg, x0.len()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hamiltonian::{ControlCone, StateCost};
    use crate::models::AdvertisingParams;

    fn setup() -> (SystemSpec, CostSpec, Vec<Vector>) {
        let (sys, cost, _) = AdvertisingParams { grid_m: 11, ..Default::default() }.build().unwrap();
        let x0 = vec![Vector::from_element(sys.dim(), 1.0), Vector::from_element(sys.dim(), 0.5)];
        (sys, cost, x0)
    }

    #[test]
    fn zero_cost_is_zero() {
        let (sys, mut cost, x0) = setup();
        cost.running = StateCost::Zero;
        cost.terminal = StateCost::Zero;
        let pol = ControlPolicy::zero(1, ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 10, 20, 1).unwrap();
        let v = estimate_cost(&sys, &cost, &pol, &x0, &cfg).unwrap();
        assert_eq!((v.mean, v.std_error), (0.0, 0.0));
    }

    #[test]
    fn no_noise_means_no_error() {
        let p = AdvertisingParams { grid_m: 11, sigma0: 0.0, ..Default::default() };
        let (sys, cost, _) = p.build().unwrap();
        let pol = ControlPolicy::constant(Vector::from_element(1, 0.5), ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 10, 16, 3).unwrap();
        let v = estimate_cost(&sys, &cost, &pol, &[Vector::from_element(sys.dim(), 1.0)], &cfg).unwrap();
        assert!(v.std_error < 1e-14 * v.mean.abs().max(1.0));
    }

    #[test]
    fn standard_error_shrinks_with_paths() {
        let (sys, cost, x0) = setup();
        let pol = ControlPolicy::constant(Vector::from_element(1, 0.5), ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 10, 4000, 5).unwrap();
        let a = estimate_cost(&sys, &cost, &pol, &x0, &cfg).unwrap();
        let b = estimate_cost(&sys, &cost, &pol, &x0, &cfg.with_paths(8000)).unwrap();
        let ratio = b.std_error / a.std_error;
        assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "ratio {ratio}");
    }

    #[test]
    fn streamed_and_lifted_costs_agree() {
        let (sys, cost, x0) = setup();
        let pol = ControlPolicy::constant(Vector::from_element(1, 0.5), ControlCone::Nonnegative).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 10, 8, 5).unwrap();
        let a = path_costs(&sys, &cost, &pol, &x0, &cfg).unwrap();
        let b = lifted_path_costs(&sys, &cost, &pol, &crate::measures::lift(&x0).unwrap(), &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
