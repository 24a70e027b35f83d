use super::common::{build_prepared, floor, random_policy, sweep_law};
use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::hamiltonian::ControlPolicy;
use crate::measures::{sample_atoms, wasserstein, EmpiricalMeasure, InitialLaw, Metric};
use crate::models::Model;
use crate::value_lab::estimate::path_costs;
use crate::value_lab::oracle::{costate_feedback, oracle_adjoint_linear};
use crate::value_lab::report::{mean_and_se, paired_difference, CaseResult, ExperimentReport, PlotSeries};

/// Largest common refinement used to compare measures of different sizes.
const MAX_COUPLING_ATOMS: usize = 4096;

#[derive(Debug, Clone, PartialEq)]
pub enum SweepPolicy {
    /// Co-state feedback of the linear-cost problem.
    Benchmark,
    /// State-dependent random feedback drawn from the given seed.
    Random(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n_list: Vec<usize>,
    /// Defaults to the two-profile mixture.
    pub law: Option<InitialLaw>,
    pub policy: SweepPolicy,
    /// Monotonicity is only required from this `n` on.
    pub monotone_from: usize,
    /// Seed of the `n_max` rerun.
    pub rerun_seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            n_list: vec![2, 4, 8, 16, 32, 64, 128],
            law: None,
            policy: SweepPolicy::Benchmark,
            monotone_from: 8,
            rerun_seed: 0x0dd5_eed,
        }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

/// W2 between empirical measures of sizes `n` and `m`, through the common
/// refinement of size `lcm(n, m)`.
pub fn wasserstein_unequal(
    bundle: &crate::space_ops::GeneratorBundle,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    metric: Metric,
) -> Result<f64> {
    let (n, m) = (mu.len(), nu.len());
    let l = n / gcd(n, m) * m;
    if l > MAX_COUPLING_ATOMS {
        return Err(Error::Unsupported(format!(
            "common refinement of {n} and {m} atoms has {l} atoms (limit {MAX_COUPLING_ATOMS})"
        )));
    }
    wasserstein(bundle, &mu.replicate(l / n), &nu.replicate(l / m), 2.0, metric)
}

/// Particle values `v_n` along nested samples of one law, their distance to
/// `v_{n_max}` and the Wasserstein distance of the initial measures.
pub fn exp_convergence_sweep(model: &Model, spec: &SweepSpec, cfg: &SimConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let mut ns = spec.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    if ns.len() < 2 || ns[0] == 0 {
        return Err(Error::InvalidParameter("need at least two distinct positive n".into()));
    }
    let n_max = *ns.last().unwrap();
    let (system, cost) = build_prepared(model, cfg.dt())?;
    let space = &system.bundle.space;
    let law = spec.law.clone().unwrap_or_else(|| sweep_law(space));
    let atoms = sample_atoms(&law, space, n_max, cfg.seed)?;
    let policy: ControlPolicy = match spec.policy {
        SweepPolicy::Benchmark => {
            let sol = oracle_adjoint_linear(&system, &cost, &atoms, cfg)?;
            costate_feedback(&system, &cost, &sol)
        }
        SweepPolicy::Random(seed) => random_policy(&system, cost.cone, seed),
    };

    let mut rep = ExperimentReport::new("converge");
    rep.input("model", model.name());
    rep.input("n_list", format!("{ns:?}"));
    rep.input("policy", format!("{:?}", spec.policy));
    rep.input("law", law.label());

    let samples: Vec<Vec<f64>> = ns
        .iter()
        .map(|&n| path_costs(&system, &cost, &policy, &atoms[..n], cfg))
        .collect::<Result<_>>()?;
    let top = samples.last().unwrap();
    let mu_max = EmpiricalMeasure::new(atoms.clone())?;

    let mut gaps = Vec::with_capacity(ns.len());
    let mut dists = Vec::with_capacity(ns.len());
    for (i, &n) in ns.iter().enumerate() {
        let (v, se) = mean_and_se(&samples[i])?;
        let inputs = format!("n={n};paths={};steps={}", cfg.paths, cfg.steps);
        rep.push(CaseResult::info(format!("v n={n}"), inputs.clone(), v, se));
        let (d, dse) = paired_difference(&samples[i], top)?;
        gaps.push((d.abs(), dse, v));
        rep.push(CaseResult::info(format!("|v_n - v_max| n={n}"), inputs.clone(), d.abs(), dse));
        let mu = EmpiricalMeasure::new(atoms[..n].to_vec())?;
        let d2 = wasserstein_unequal(&system.bundle, &mu, &mu_max, Metric::Strong)?;
        dists.push(d2);
        rep.push(CaseResult::info(format!("d2 n={n}"), inputs, d2, 0.0));
    }

    for w in 0..ns.len() - 1 {
        let (a, b) = (w, w + 1);
        if ns[a] < spec.monotone_from || ns[b] == n_max {
            continue;
        }
        let tol = gaps[a].0 + 2.0 * gaps[a].1.max(gaps[b].1) + floor(gaps[b].2);
        rep.push(CaseResult::new(
            format!("monotone gap n={}->{}", ns[a], ns[b]),
            format!("n_a={};n_b={}", ns[a], ns[b]),
            gaps[b].0,
            gaps[b].1,
            tol,
            "gap(n_b) <= gap(n_a) + 2 SE + floor",
            gaps[b].0 <= tol,
        ));
    }
    for w in 0..ns.len() - 1 {
        let (a, b) = (w, w + 1);
        if ns[b] == n_max {
            continue;
        }
        rep.push(CaseResult::new(
            format!("d2 decreasing n={}->{}", ns[a], ns[b]),
            format!("n_a={};n_b={}", ns[a], ns[b]),
            dists[b],
            0.0,
            dists[a],
            "d2(n_b) < d2(n_a)",
            dists[b] < dists[a],
        ));
    }

    let rerun = path_costs(&system, &cost, &policy, &atoms, &cfg.with_seed(spec.rerun_seed))?;
    let (v1, s1) = mean_and_se(top)?;
    let (v2, s2) = mean_and_se(&rerun)?;
    let se = (s1 * s1 + s2 * s2).sqrt();
    rep.push(CaseResult::at_most(
        format!("rerun n={n_max}"),
        format!("seed={};rerun_seed={}", cfg.seed, spec.rerun_seed),
        (v1 - v2).abs(),
        se,
        3.0 * se + floor(v1),
    ));

    rep.series.push(PlotSeries {
        name: "value_gap".into(),
        x_label: "n".into(),
        y_label: "|v_n - v_max|".into(),
        points: ns.iter().zip(&gaps).map(|(&n, g)| (n as f64, g.0)).collect(),
    });
    rep.series.push(PlotSeries {
        name: "d2".into(),
        x_label: "n".into(),
        y_label: "d2(mu_n, mu_max)".into(),
        points: ns.iter().zip(&dists).map(|(&n, d)| (n as f64, *d)).collect(),
    });
    rep.note("convergence is checked at the sampled initial data only; uniformity over moment-bounded sets is not tested");
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::AdvertisingParams;
    use crate::Vector;

    fn model() -> Model {
        Model::Advertising(AdvertisingParams {
            grid_m: 11,
            ..Default::default()
        })
    }

    #[test]
    fn mixture_sweep_passes() {
        let spec = SweepSpec {
            n_list: vec![2, 4, 8, 16, 32],
            ..Default::default()
        };
        let cfg = SimConfig::new(0.0, 1.0, 10, 200, 4).unwrap();
        let rep = exp_convergence_sweep(&model(), &spec, &cfg).unwrap();
        assert!(rep.all_pass(), "{}", rep.summary());
    }

    #[test]
    fn point_mass_gives_equal_values() {
        let spec = SweepSpec {
            n_list: vec![1, 3, 6],
            law: Some(InitialLaw::PointMass(Vector::from_element(12, 0.7))),
            ..Default::default()
        };
        let cfg = SimConfig::new(0.0, 1.0, 10, 50, 4).unwrap();
        let rep = exp_convergence_sweep(&model(), &spec, &cfg).unwrap();
        let v: Vec<f64> = rep.cases.iter().filter(|c| c.id.starts_with("v n=")).map(|c| c.estimate).collect();
        for x in &v {
            assert!((x - v[0]).abs() < 1e-12 * (1.0 + v[0].abs()));
        }
        let d: Vec<f64> = rep.cases.iter().filter(|c| c.id.starts_with("d2 n=")).map(|c| c.estimate).collect();
        assert!(d.iter().all(|x| *x == 0.0));
    }

    #[test]
    fn unequal_wasserstein_of_replicas_is_zero() {
        let (system, _) = build_prepared(&model(), 0.1).unwrap();
        let a = vec![Vector::from_element(12, 1.0), Vector::from_element(12, 2.0)];
        let mu = EmpiricalMeasure::new(a.clone()).unwrap();
        let nu = EmpiricalMeasure::new(vec![a[0].clone(), a[1].clone(), a[0].clone(), a[1].clone()]).unwrap();
        assert!(wasserstein_unequal(&system.bundle, &mu, &nu, Metric::Strong).unwrap() < 1e-14);
    }
}
