use super::common::{build_prepared, default_law, random_policy};
use crate::dynamics::{for_each_path, run_lifted_path, run_particle_path, PathRecord, Representation, SimConfig};
use crate::error::{Error, Result};
use crate::hamiltonian::CostAccumulator;
use crate::measures::{lift, sample_atoms, InitialLaw};
use crate::models::Model;
use crate::value_lab::report::{CaseResult, ExperimentReport};
use crate::Matrix;

/// Tolerance of the pathwise lifting identity.
pub const LIFT_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LiftingSpec {
    pub n_list: Vec<usize>,
    pub law: Option<InitialLaw>,
    pub policy_seed: u64,
    /// Also rerun the lifted side with a different seed and require the
    /// harness to see the mismatch.
    pub negative_control: bool,
}

impl Default for LiftingSpec {
    fn default() -> Self {
        Self {
            n_list: vec![1, 2, 5, 10],
            law: None,
            policy_seed: 7,
            negative_control: true,
        }
    }
}

/// Per path: largest state discrepancy over all steps and blocks, and cost
/// discrepancy.
fn compare(
    model: &Model,
    spec: &LiftingSpec,
    n: usize,
    cfg: &SimConfig,
    lifted_cfg: &SimConfig,
    paths: usize,
) -> Result<Vec<(f64, f64)>> {
    let (system, cost) = build_prepared(model, cfg.dt())?;
    let law = spec.law.clone().unwrap_or_else(default_law);
    let atoms = sample_atoms(&law, &system.bundle.space, n, cfg.seed)?;
    let x0 = Matrix::from_columns(&atoms);
    let blocks = lift(&atoms)?;
    let policy = random_policy(&system, cost.cone, spec.policy_seed);
    policy.check_compatible(n, cfg.steps)?;
    let prop = system.bundle.propagator(cfg.dt())?.into_owned();
    let dt = cfg.dt();
    for_each_path(paths, |p| {
        let mut a = (
            PathRecord::new(p, cfg.steps),
            CostAccumulator::new(&cost, dt, Representation::Particles),
        );
        run_particle_path(&system, &policy, &x0, cfg, &prop, p, &mut a)?;
        let mut b = (
            PathRecord::new(p, cfg.steps),
            CostAccumulator::new(&cost, dt, Representation::Lifted),
        );
        run_lifted_path(&system, &policy, &blocks, lifted_cfg, &prop, p, &mut b)?;
        let state = a
            .0
            .states
            .iter()
            .zip(&b.0.states)
            .map(|(x, y)| (x - y).amax())
            .fold(0.0, f64::max);
        Ok((state, (a.1.total() - b.1.total()).abs()))
    })
}

/// Particle system versus lifted equation on block functions, sharing one
/// noise stream: both the trajectories and the costs must agree pathwise.
pub fn exp_lifting_identity(model: &Model, spec: &LiftingSpec, cfg: &SimConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    if spec.n_list.is_empty() || spec.n_list.contains(&0) {
        return Err(Error::InvalidParameter("n list must be nonempty and positive".into()));
    }
    let mut rep = ExperimentReport::new("lift-check");
    rep.input("model", model.name());
    rep.input("n_list", format!("{:?}", spec.n_list));
    rep.input("policy_seed", spec.policy_seed);
    for &n in &spec.n_list {
        let res = compare(model, spec, n, cfg, cfg, cfg.paths)?;
        let state = res.iter().map(|r| r.0).fold(0.0, f64::max);
        let costd = res.iter().map(|r| r.1).fold(0.0, f64::max);
        let inputs = format!("n={n};paths={};steps={}", cfg.paths, cfg.steps);
        rep.push(CaseResult::new(
            format!("state n={n}"),
            inputs.clone(),
            state,
            0.0,
            LIFT_TOL,
            "estimate < tolerance",
            state < LIFT_TOL,
        ));
        rep.push(CaseResult::new(
            format!("cost n={n}"),
            inputs,
            costd,
            0.0,
            LIFT_TOL,
            "estimate < tolerance",
            costd < LIFT_TOL,
        ));
    }
    if spec.negative_control {
        let n = *spec.n_list.iter().max().unwrap();
        let other = cfg.with_seed(cfg.seed ^ 0x5eed_0f_f5e7);
        let paths = cfg.paths.min(20);
        let res = compare(model, spec, n, cfg, &other, paths)?;
        let state = res.iter().map(|r| r.0).fold(0.0, f64::max);
        rep.push(CaseResult::new(
            format!("negative control n={n}"),
            format!("n={n};paths={paths};lifted seed differs"),
            state,
            0.0,
            LIFT_TOL,
            "estimate > tolerance (mismatch must be detected)",
            state > LIFT_TOL,
        ));
    }
    Ok(rep)
}
