use std::sync::Arc;

use itertools::Itertools;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::common::build_prepared;
use crate::dynamics::{delay_reference, simulate_particles, simulate_sdde_direct, SimConfig, SystemSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::{
    channel_slopes, minimize_channel, minimize_channel_numeric, truncation_radius, ControlCost, ControlPolicy,
    CostSpec,
};
use crate::measures::{assignment, assignment_cost, transport_costs, wasserstein, EmpiricalMeasure, Metric};
use crate::models::{AdvertisingParams, Model};
use crate::space_ops::{assemble_generator, build_delay_space, verify_operator_assumptions};
use crate::value_lab::report::{CaseResult, ExperimentReport, PlotSeries};
use crate::Vector;

/// Tolerance of the output inequality `|c . x| <= C |x|_-1`.
pub const OUTPUT_BOUND_TOL: f64 = 1e-9;
/// Tolerance for values of the truncated and untruncated minimizations.
pub const TRUNCATION_TOL: f64 = 1e-8;
/// Required empirical order of the deterministic delay-equation error.
pub const SDDE_MIN_ORDER: f64 = 0.7;

/// Operator assumptions of every model plus the output bound on random
/// vectors.
pub fn exp_diagnose(models: &[Model], dt: f64, samples: usize, seed: u64) -> Result<ExperimentReport> {
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter(format!("dt must be > 0, got {dt}")));
    }
    let mut rep = ExperimentReport::new("diagnose");
    rep.input("dt", dt);
    rep.input("samples", samples);
    for model in models {
        let (_, _, bundle) = model.build()?;
        let diag = verify_operator_assumptions(&bundle, dt)?;
        let inputs = format!("model={};dim={};c0={}", model.name(), bundle.dim(), bundle.c0);
        for (name, value, tol, pass) in diag.rows() {
            let rule = if name == "dissipativity_margin" || name.ends_with("min_eig") {
                if name == "b_min_eig" {
                    "estimate > tolerance"
                } else {
                    "estimate >= tolerance"
                }
            } else {
                "estimate <= tolerance"
            };
            rep.push(CaseResult::new(format!("{} {name}", model.name()), inputs.clone(), value, 0.0, tol, rule, pass));
        }
        let c = model.output_functional()?;
        let bound = model.output_bound()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut worst = f64::NEG_INFINITY;
        for _ in 0..samples {
            let x = Vector::from_fn(bundle.dim(), |_, _| rng.random_range(-1.0..1.0));
            let d = bundle.dual_norm(&x)?;
            worst = worst.max(c.dot(&x).abs() / (bound * d) - 1.0);
        }
        rep.push(CaseResult::at_most(
            format!("{} output bound", model.name()),
            format!("{inputs};bound={bound}"),
            worst,
            0.0,
            OUTPUT_BOUND_TOL,
        ));
    }
    Ok(rep)
}

fn brute_force(cost: &crate::Matrix) -> f64 {
    let n = cost.nrows();
    (0..n)
        .permutations(n)
        .map(|p| assignment_cost(cost, &p))
        .fold(f64::INFINITY, f64::min)
}

/// Assignment-based Wasserstein distances against enumeration of all
/// permutations on small random instances.
pub fn exp_wasserstein_oracle(instances: usize, max_n: usize, seed: u64) -> Result<ExperimentReport> {
    if max_n == 0 || max_n > 8 {
        return Err(Error::InvalidParameter(format!("max_n must lie in 1..=8, got {max_n}")));
    }
    let mut rep = ExperimentReport::new("oracle-compare");
    rep.input("instances", instances);
    rep.input("max_n", max_n);
    rep.input("seed", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = [0.0f64; 2];
    let mut worst_total = [0.0f64; 2];
    for _ in 0..instances {
        let m = rng.random_range(3..=7);
        let bundle = assemble_generator(build_delay_space(1.0, m)?, 0.0)?;
        let n = rng.random_range(1..=max_n);
        let r = [1.0, 1.5, 2.0][rng.random_range(0..3)];
        let mut atoms = || {
            (0..n)
                .map(|_| Vector::from_fn(bundle.dim(), |_, _| rng.random_range(-2.0..2.0)))
                .collect::<Vec<_>>()
        };
        let mu = EmpiricalMeasure::new(atoms())?;
        let nu = EmpiricalMeasure::new(atoms())?;
        for (k, metric) in [Metric::Strong, Metric::Dual].into_iter().enumerate() {
            let cost = transport_costs(&bundle, &mu, &nu, r, metric)?;
            let fast = assignment_cost(&cost, &assignment(&cost));
            let slow = brute_force(&cost);
            worst_total[k] = worst_total[k].max((fast - slow).abs());
            let w = wasserstein(&bundle, &mu, &nu, r, metric)?;
            let b = (slow / n as f64).powf(1.0 / r);
            worst[k] = worst[k].max((w - b).abs());
        }
    }
    for (k, name) in ["strong", "dual"].iter().enumerate() {
        let inputs = format!("instances={instances};max_n={max_n};seed={seed}");
        rep.push(CaseResult::at_most(format!("{name} total cost"), inputs.clone(), worst_total[k], 0.0, 0.0));
        rep.push(CaseResult::at_most(format!("{name} distance"), inputs, worst[k], 0.0, 0.0));
    }
    Ok(rep)
}

/// Strictly convex cost with quadratic growth: `q^2 / 2 + log cosh q`.
pub fn logcosh_cost() -> ControlCost {
    ControlCost::Convex {
        f: Arc::new(|q: f64| 0.5 * q * q + q.cosh().ln()),
        c1: 0.5,
        c2: 0.5,
        c3: 1.0,
    }
}

fn random_costate(rng: &mut ChaCha8Rng, system: &SystemSpec, c_p: f64) -> Result<Vector> {
    let dim = system.dim();
    let dir = Vector::from_fn(dim, |_, _| rng.random_range(-1.0..1.0));
    let norm = system.bundle.norm(&dir)?;
    if norm == 0.0 {
        return Ok(dir);
    }
    let radius = c_p * rng.random_range(0.0..=1.0f64);
    Ok(dir * (radius / norm))
}

/// Minimizers over the truncated control set against a ten times larger
/// set, for the model's quadratic cost and a non-quadratic convex cost.
pub fn exp_truncation(model: &Model, c_p: f64, samples: usize, seed: u64) -> Result<ExperimentReport> {
    let (system, cost, _) = model.build()?;
    let mut rep = ExperimentReport::new("truncation");
    rep.input("model", model.name());
    rep.input("c_p", c_p);
    rep.input("samples", samples);
    let variants: Vec<(&str, CostSpec)> = vec![
        ("quadratic", cost.clone()),
        (
            "logcosh",
            CostSpec {
                control: logcosh_cost(),
                ..cost.clone()
            },
        ),
    ];
    for (name, spec) in variants {
        let k = truncation_radius(c_p, &system, &spec)?;
        let (lo_k, hi_k) = spec.cone.search_interval(k);
        let (lo_w, hi_w) = spec.cone.search_interval(10.0 * k);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut max_arg = 0.0f64;
        let mut max_gap = 0.0f64;
        let mut max_closed = 0.0f64;
        for _ in 0..samples {
            let p = random_costate(&mut rng, &system, c_p)?;
            let s = channel_slopes(&system, &p)?;
            for j in 0..s.len() {
                let nu = spec.channel_weights[j];
                let (v_k, _) = minimize_channel_numeric(&spec.control, lo_k, hi_k, s[j], nu);
                let (v_w, q_w) = minimize_channel_numeric(&spec.control, lo_w, hi_w, s[j], nu);
                max_arg = max_arg.max(q_w.abs());
                max_gap = max_gap.max((v_k - v_w).abs());
                if let ControlCost::Quadratic { .. } = spec.control {
                    let (v_c, _) = minimize_channel(&spec.control, spec.cone, s[j], nu, f64::INFINITY);
                    max_closed = max_closed.max((v_c - v_k).abs());
                }
            }
        }
        let inputs = format!("cost={name};samples={samples};K={k}");
        rep.push(CaseResult::at_most(format!("{name} |argmin| on [0,10K]"), inputs.clone(), max_arg, 0.0, k));
        rep.push(CaseResult::at_most(
            format!("{name} value gap K vs 10K"),
            inputs.clone(),
            max_gap,
            0.0,
            TRUNCATION_TOL,
        ));
        if let ControlCost::Quadratic { .. } = spec.control {
            rep.push(CaseResult::at_most(
                format!("{name} closed form vs numeric"),
                inputs,
                max_closed,
                0.0,
                TRUNCATION_TOL,
            ));
        }
    }
    Ok(rep)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SddeSpec {
    /// `(grid nodes, time steps)` per refinement level.
    pub levels: Vec<(usize, usize)>,
    pub horizon: f64,
    /// Reference step is this many times finer.
    pub reference_factor: usize,
    /// Constant control used on every level.
    pub control: f64,
}

impl Default for SddeSpec {
    fn default() -> Self {
        Self {
            levels: vec![(11, 20), (21, 40), (41, 80)],
            horizon: 2.0,
            reference_factor: 10,
            control: 0.5,
        }
    }
}

fn head_path(params: &AdvertisingParams, policy: &ControlPolicy, cfg: &SimConfig) -> Result<Vec<Vec<f64>>> {
    let (system, _) = build_prepared(&Model::Advertising(params.clone()), cfg.dt())?;
    let x0 = vec![Vector::from_element(system.dim(), 1.0)];
    let bundle = simulate_particles(&system, policy, &x0, cfg)?;
    Ok(bundle
        .records
        .iter()
        .map(|r| r.states.iter().map(|x| x[(0, 0)]).collect())
        .collect())
}

fn order(errs: &[f64]) -> f64 {
    let k = errs.len();
    (errs[k - 2] / errs[k - 1]).log2()
}

/// The Hilbert-space reformulation of the advertising delay equation and the
/// direct delay integrator, against a fine deterministic reference and
/// against each other under noise.
pub fn exp_sdde_check(params: &AdvertisingParams, spec: &SddeSpec, paths: usize, seed: u64) -> Result<ExperimentReport> {
    if spec.levels.len() < 2 {
        return Err(Error::InvalidParameter("need at least two refinement levels".into()));
    }
    let policy = ControlPolicy::constant(Vector::from_element(1, spec.control), crate::hamiltonian::ControlCone::Nonnegative)?;
    let mut rep = ExperimentReport::new("sdde-check");
    rep.input("levels", format!("{:?}", spec.levels));
    rep.input("horizon", spec.horizon);
    rep.input("control", spec.control);
    let quiet = AdvertisingParams {
        sigma0: 0.0,
        ..params.clone()
    };
    let mut errs_lift = Vec::new();
    let mut errs_direct = Vec::new();
    let mut diffs = Vec::new();
    for &(m, steps) in &spec.levels {
        let q = AdvertisingParams {
            grid_m: m,
            ..quiet.clone()
        };
        let cfg = SimConfig::new(0.0, spec.horizon, steps, 1, seed)?;
        let u = spec.control;
        let reference = delay_reference(&q, 1.0, |_| 1.0, |_| u, 0.0, spec.horizon, steps * spec.reference_factor)?;
        let lifted = head_path(&q, &policy, &cfg)?;
        let x0 = vec![Vector::from_element(m + 1, 1.0)];
        let direct = simulate_sdde_direct(&q, &policy, &x0, &cfg)?;
        let f = spec.reference_factor;
        let e_l = (0..=steps).map(|k| (lifted[0][k] - reference[f * k]).abs()).fold(0.0, f64::max);
        let e_d = (0..=steps)
            .map(|k| (direct.values[0][(k, 0)] - reference[f * k]).abs())
            .fold(0.0, f64::max);
        let inputs = format!("m={m};steps={steps}");
        rep.push(CaseResult::info(format!("reformulated sup error m={m}"), inputs.clone(), e_l, 0.0));
        rep.push(CaseResult::info(format!("direct sup error m={m}"), inputs, e_d, 0.0));
        errs_lift.push(e_l);
        errs_direct.push(e_d);

        let noisy = AdvertisingParams {
            grid_m: m,
            ..params.clone()
        };
        let cfg = SimConfig::new(0.0, spec.horizon, steps, paths, seed)?;
        let lifted = head_path(&noisy, &policy, &cfg)?;
        let direct = simulate_sdde_direct(&noisy, &policy, &x0, &cfg)?;
        let d = (0..paths)
            .flat_map(|p| {
                let l = &lifted[p];
                let v = &direct.values[p];
                (0..=steps).map(move |k| (l[k] - v[(k, 0)]).abs())
            })
            .fold(0.0, f64::max);
        rep.push(CaseResult::info(format!("stochastic sup difference m={m}"), format!("m={m};steps={steps};paths={paths}"), d, 0.0));
        diffs.push(d);
    }
    let last = format!("levels={:?}", &spec.levels[spec.levels.len() - 2..]);
    rep.push(CaseResult::at_least("reformulated order", last.clone(), order(&errs_lift), 0.0, SDDE_MIN_ORDER));
    rep.push(CaseResult::at_least("direct order", last, order(&errs_direct), 0.0, SDDE_MIN_ORDER));
    for w in diffs.windows(2).enumerate() {
        let (i, pair) = w;
        rep.push(CaseResult::new(
            format!("stochastic difference decreases {}->{}", spec.levels[i].0, spec.levels[i + 1].0),
            format!("paths={paths}"),
            pair[1],
            0.0,
            pair[0],
            "estimate < tolerance",
            pair[1] < pair[0],
        ));
    }
    let h: Vec<f64> = spec.levels.iter().map(|&(_, s)| spec.horizon / s as f64).collect();
    rep.series.push(PlotSeries {
        name: "reformulated_error".into(),
        x_label: "dt".into(),
        y_label: "sup error".into(),
        points: h.iter().copied().zip(errs_lift).collect(),
    });
    rep.series.push(PlotSeries {
        name: "direct_error".into(),
        x_label: "dt".into(),
        y_label: "sup error".into(),
        points: h.iter().copied().zip(errs_direct).collect(),
    });
    rep.series.push(PlotSeries {
        name: "stochastic_difference".into(),
        x_label: "dt".into(),
        y_label: "sup difference".into(),
        points: h.into_iter().zip(diffs).collect(),
    });
    Ok(rep)
}
