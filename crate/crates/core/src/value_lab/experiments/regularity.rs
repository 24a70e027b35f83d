use super::common::{build_prepared, default_law, floor};
use crate::dynamics::noise::counter_key;
use crate::dynamics::{for_each_path, run_particle_path, Representation, SimConfig, SystemSpec};
use crate::error::{Error, Result};
use crate::hamiltonian::{ControlPolicy, CostAccumulator, CostSpec, StateCost};
use crate::measures::{sample_atoms, InitialLaw};
use crate::models::Model;
use crate::value_lab::oracle::{costate_feedback, oracle_adjoint_linear};
use crate::value_lab::report::{mean_and_se, CaseResult, ExperimentReport};
use crate::{Matrix, Vector};

#[derive(Debug, Clone, PartialEq)]
pub struct RegularitySpec {
    pub n_list: Vec<usize>,
    pub pairs: usize,
    pub lambda: f64,
    /// Curvature of the quadratic terminal term of the convex variant.
    pub curvature: f64,
    pub law: Option<InitialLaw>,
}

impl Default for RegularitySpec {
    fn default() -> Self {
        Self {
            n_list: vec![2, 8, 32],
            pairs: 50,
            lambda: 0.5,
            curvature: 1.0,
            law: None,
        }
    }
}

/// Gradient of the expected cost with respect to the initial mean when the
/// controls do not depend on the state: `g_N = tau`,
/// `g_k = dt l + Phi^T g_{k+1}` with `Phi = exp(dt A) (I + dt (S + M))`.
pub fn mean_gradient(system: &SystemSpec, cost: &CostSpec, cfg: &SimConfig) -> Result<Vector> {
    let dim = system.dim();
    let (rs, rm, _) = cost
        .running
        .affine_parts(dim)
        .ok_or_else(|| Error::Nonlinear("running state cost is not affine".into()))?;
    let (ts, tm, _) = cost
        .terminal
        .affine_parts(dim)
        .ok_or_else(|| Error::Nonlinear("terminal cost is not affine".into()))?;
    let dt = cfg.dt();
    let prop = system.bundle.propagator(dt)?.into_owned();
    let phi = prop * (Matrix::identity(dim, dim) + (&system.drift_self + &system.drift_mean) * dt);
    let phi_t = phi.transpose();
    let ell = (rs + rm) * dt;
    let mut g = ts + tm;
    for _ in 0..cfg.steps {
        g = &ell + &phi_t * g;
    }
    Ok(g)
}

/// `(Phi^T)^N c` with `Phi = exp(dt A) (I + dt coupling)`.
fn transported(system: &SystemSpec, c: &Vector, coupling: &Matrix, cfg: &SimConfig) -> Result<Vector> {
    let dim = system.dim();
    let prop = system.bundle.propagator(cfg.dt())?.into_owned();
    let phi_t = (prop * (Matrix::identity(dim, dim) + coupling * cfg.dt())).transpose();
    let mut g = c.clone();
    for _ in 0..cfg.steps {
        g = &phi_t * g;
    }
    Ok(g)
}

/// Smallest `C` with `|c . x| <= C |x|_-1` for all `x`: `|A^* W^-1 c|`.
pub fn dual_lipschitz(system: &SystemSpec, c: &Vector) -> Result<f64> {
    let w = system.bundle.space.weight_diag();
    let riesz = c.component_div(&w);
    system.bundle.norm(&(system.bundle.a_adjoint() * riesz))
}

fn convex_variant(cost: &CostSpec, direction: Vector, curvature: f64) -> Result<CostSpec> {
    let dim = direction.len();
    let (on_state, on_mean, constant) = cost
        .terminal
        .affine_parts(dim)
        .ok_or_else(|| Error::Nonlinear("terminal cost is not affine".into()))?;
    let mut c = cost.clone();
    c.terminal = StateCost::Quadratic {
        on_state,
        on_mean,
        constant,
        direction,
        curvature,
    };
    Ok(c)
}

/// Per-path costs of several cost specifications along the same paths.
fn path_costs_multi(
    system: &SystemSpec,
    costs: &[&CostSpec],
    policy: &ControlPolicy,
    x0: &Matrix,
    cfg: &SimConfig,
) -> Result<Vec<Vec<f64>>> {
    let prop = system.bundle.propagator(cfg.dt())?.into_owned();
    let per_path = for_each_path(cfg.paths, |p| {
        let mut acc: Vec<CostAccumulator> = costs
            .iter()
            .map(|c| CostAccumulator::new(c, cfg.dt(), Representation::Particles))
            .collect();
        run_particle_path(system, policy, x0, cfg, &prop, p, &mut acc)?;
        Ok(acc.iter().map(|a| a.total()).collect::<Vec<f64>>())
    })?;
    Ok((0..costs.len()).map(|c| per_path.iter().map(|v| v[c]).collect()).collect())
}

struct PairOutcome {
    dist: f64,
    /// Mean and SE of the midpoint defect, linear and convex variants.
    defect: [(f64, f64); 2],
    /// Mean and SE of `v(x) - v(y)` for the linear cost.
    diff: (f64, f64),
}

fn combine(a: &[f64], b: &[f64], c: &[f64], f: impl Fn(f64, f64, f64) -> f64) -> Result<(f64, f64)> {
    let d: Vec<f64> = (0..a.len()).map(|i| f(a[i], b[i], c[i])).collect();
    mean_and_se(&d)
}

/// Midpoint defects and Lipschitz ratios of the policy value in the `|.|_-1`
/// norm over random pairs of particle configurations, under common random
/// numbers, for the linear cost and a convex terminal variant.
pub fn exp_regularity_probe(model: &Model, spec: &RegularitySpec, cfg: &SimConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let lam = spec.lambda;
    if !(lam > 0.0 && lam < 1.0) {
        return Err(Error::InvalidParameter(format!("lambda must lie in (0, 1), got {lam}")));
    }
    if spec.pairs == 0 || spec.n_list.is_empty() || spec.n_list.contains(&0) {
        return Err(Error::InvalidParameter("need pairs >= 1 and positive n".into()));
    }
    if !(spec.curvature >= 0.0) {
        return Err(Error::InvalidParameter("curvature must be >= 0".into()));
    }
    let (system, cost) = build_prepared(model, cfg.dt())?;
    let direction = model.output_functional()?;
    let convex = convex_variant(&cost, direction.clone(), spec.curvature)?;
    let space = system.bundle.space.clone();
    let law = spec.law.clone().unwrap_or_else(default_law);
    let probe = sample_atoms(&law, &space, 1, cfg.seed)?;
    let sol = oracle_adjoint_linear(&system, &cost, &probe, cfg)?;
    let policy = costate_feedback(&system, &cost, &sol);

    let lip = dual_lipschitz(&system, &mean_gradient(&system, &cost, cfg)?)?;
    // the convex term is kappa/2 (c . X_i(T))^2 per particle; X_i(T) - Y_i(T)
    // splits into a deviation moved by exp(dt A)(I + dt S) and a mean moved by
    // exp(dt A)(I + dt (S + M)), so the defect is at most
    // lambda (1 - lambda) kappa (L_dev^2 + L_mean^2) |x - y|^2
    let l_dev = dual_lipschitz(&system, &transported(&system, &direction, &system.drift_self, cfg)?)?;
    let coupling = &system.drift_self + &system.drift_mean;
    let l_mean = dual_lipschitz(&system, &transported(&system, &direction, &coupling, cfg)?)?;
    let semiconcavity = spec.curvature * (l_dev * l_dev + l_mean * l_mean);

    let mut rep = ExperimentReport::new("regularity");
    rep.input("model", model.name());
    rep.input("n_list", format!("{:?}", spec.n_list));
    rep.input("pairs", spec.pairs);
    rep.input("lambda", lam);
    rep.input("curvature", spec.curvature);
    rep.push(CaseResult::info("Lipschitz bound |A* W^-1 g|", "linear cost", lip, 0.0));
    rep.push(CaseResult::info("semiconcavity bound", "convex variant", semiconcavity, 0.0));

    for &n in &spec.n_list {
        let outcomes: Vec<PairOutcome> = (0..spec.pairs as u64)
            .map(|p| {
                let xs = sample_atoms(&law, &space, n, counter_key(&[cfg.seed, n as u64, p, 0]))?;
                let ys = sample_atoms(&law, &space, n, counter_key(&[cfg.seed, n as u64, p, 1]))?;
                let x = Matrix::from_columns(&xs);
                let y = Matrix::from_columns(&ys);
                let mid = &x * lam + &y * (1.0 - lam);
                let dist = ((0..n)
                    .map(|i| system.bundle.dual_norm(&(x.column(i) - y.column(i))).map(|d| d * d))
                    .sum::<Result<f64>>()?
                    / n as f64)
                    .sqrt();
                let costs = [&cost, &convex];
                let vx = path_costs_multi(&system, &costs, &policy, &x, cfg)?;
                let vy = path_costs_multi(&system, &costs, &policy, &y, cfg)?;
                let vm = path_costs_multi(&system, &costs, &policy, &mid, cfg)?;
                let defect = |c: usize| combine(&vx[c], &vy[c], &vm[c], |a, b, m| lam * a + (1.0 - lam) * b - m);
                Ok(PairOutcome {
                    dist,
                    defect: [defect(0)?, defect(1)?],
                    diff: combine(&vx[0], &vy[0], &vy[0], |a, b, _| a - b)?,
                })
            })
            .collect::<Result<_>>()?;
        let inputs = format!("n={n};pairs={};paths={};steps={}", spec.pairs, cfg.paths, cfg.steps);
        let scale = lam * (1.0 - lam);

        // linear cost: |defect| <= 3 SE + floor on every pair
        let worst = outcomes
            .iter()
            .max_by(|a, b| {
                let ea = a.defect[0].0.abs() - 3.0 * a.defect[0].1;
                let eb = b.defect[0].0.abs() - 3.0 * b.defect[0].1;
                ea.total_cmp(&eb)
            })
            .unwrap();
        let (d, se) = worst.defect[0];
        rep.push(CaseResult::at_most(
            format!("linear |defect| n={n}"),
            inputs.clone(),
            d.abs(),
            se,
            3.0 * se + floor(d),
        ));

        // convex variant: defect >= -3 SE on every pair
        let worst = outcomes
            .iter()
            .min_by(|a, b| (a.defect[1].0 + 3.0 * a.defect[1].1).total_cmp(&(b.defect[1].0 + 3.0 * b.defect[1].1)))
            .unwrap();
        let (d, se) = worst.defect[1];
        rep.push(CaseResult::at_least(
            format!("convex defect n={n}"),
            inputs.clone(),
            d,
            se,
            -(3.0 * se + floor(d)),
        ));

        // convex variant: defect <= C lambda (1 - lambda) |x - y|^2 + 3 SE
        let excess = |o: &PairOutcome| o.defect[1].0 - 3.0 * o.defect[1].1 - semiconcavity * scale * o.dist * o.dist;
        let worst = outcomes.iter().max_by(|a, b| excess(a).total_cmp(&excess(b))).unwrap();
        let (d, se) = worst.defect[1];
        let bound = semiconcavity * scale * worst.dist * worst.dist;
        rep.push(CaseResult::at_most(
            format!("convex defect bound n={n}"),
            inputs.clone(),
            d,
            se,
            bound + 3.0 * se + floor(d),
        ));
        let fitted = outcomes
            .iter()
            .filter(|o| o.dist > 0.0)
            .map(|o| o.defect[1].0 / (scale * o.dist * o.dist))
            .fold(0.0, f64::max);
        rep.push(CaseResult::info(format!("fitted semiconcavity n={n}"), inputs.clone(), fitted, 0.0));

        // Lipschitz ratio against the n-independent bound
        let ratio = |o: &PairOutcome| (o.diff.0.abs() / o.dist, o.diff.1 / o.dist);
        let worst = outcomes
            .iter()
            .filter(|o| o.dist > 0.0)
            .max_by(|a, b| {
                let (ra, sa) = ratio(a);
                let (rb, sb) = ratio(b);
                (ra - 3.0 * sa).total_cmp(&(rb - 3.0 * sb))
            })
            .unwrap();
        let (r, rse) = ratio(worst);
        rep.push(CaseResult::at_most(
            format!("Lipschitz ratio n={n}"),
            inputs,
            r,
            rse,
            lip + 3.0 * rse + floor(lip),
        ));
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::AdvertisingParams;
    use crate::value_lab::estimate::path_costs;

    fn model() -> Model {
        Model::Advertising(AdvertisingParams {
            grid_m: 11,
            ..Default::default()
        })
    }

    #[test]
    fn probe_passes_on_the_benchmark() {
        let spec = RegularitySpec {
            n_list: vec![2, 4],
            pairs: 6,
            ..Default::default()
        };
        let cfg = SimConfig::new(0.0, 1.0, 10, 40, 2).unwrap();
        let rep = exp_regularity_probe(&model(), &spec, &cfg).unwrap();
        assert!(rep.all_pass(), "{}", rep.summary());
    }

    #[test]
    fn gradient_predicts_value_differences() {
        let (system, cost) = build_prepared(&model(), 0.1).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 10, 4, 2).unwrap();
        let x = vec![Vector::from_element(12, 1.0)];
        let sol = oracle_adjoint_linear(&system, &cost, &x, &cfg).unwrap();
        let pol = costate_feedback(&system, &cost, &sol);
        let dx = Vector::from_fn(12, |j, _| 0.1 * (j as f64).sin());
        let y = vec![&x[0] + &dx];
        let a = path_costs(&system, &cost, &pol, &x, &cfg).unwrap();
        let b = path_costs(&system, &cost, &pol, &y, &cfg).unwrap();
        let g = mean_gradient(&system, &cost, &cfg).unwrap();
        for (u, v) in a.iter().zip(&b) {
            assert!((v - u - g.dot(&dx)).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_points_have_zero_defect() {
        let (system, cost) = build_prepared(&model(), 0.1).unwrap();
        let cfg = SimConfig::new(0.0, 1.0, 10, 8, 2).unwrap();
        let x = Matrix::from_element(12, 3, 0.8);
        let pol = ControlPolicy::constant(Vector::from_element(1, 0.3), cost.cone).unwrap();
        let v = path_costs_multi(&system, &[&cost], &pol, &x, &cfg).unwrap();
        let mid = &x * 0.5 + &x * 0.5;
        let m = path_costs_multi(&system, &[&cost], &pol, &mid, &cfg).unwrap();
        let (d, se) = combine(&v[0], &v[0], &m[0], |a, b, c| 0.5 * a + 0.5 * b - c).unwrap();
        assert_eq!((d, se), (0.0, 0.0));
    }
}
