use super::common::{build_prepared, default_profiles, floor};
use crate::dynamics::SimConfig;
use crate::error::{Error, Result};
use crate::models::{AdvertisingParams, Model};
use crate::value_lab::estimate::path_costs;
use crate::value_lab::oracle::{advertising_feedback, oracle_adjoint_linear, oracle_open_loop, CoarseSpec};
use crate::value_lab::report::{mean_and_se, paired_difference, CaseResult, ExperimentReport};
use crate::Vector;

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSpec {
    pub n: usize,
    pub coarse: CoarseSpec,
    /// Gain of the deliberately suboptimal feedback.
    pub mis_gain: f64,
    /// Initial state of every particle; defaults to the constant profile.
    pub x0: Option<Vector>,
}

impl Default for FeedbackSpec {
    fn default() -> Self {
        Self {
            n: 1,
            coarse: CoarseSpec {
                grid: (0..9).map(|i| 0.25 * i as f64).collect(),
                intervals: 3,
            },
            mis_gain: 1.5,
            x0: None,
        }
    }
}

/// Closed-form feedback against the exhaustive open-loop search and the
/// adjoint oracle, all on common random numbers.
pub fn exp_feedback_vs_bruteforce(
    params: &AdvertisingParams,
    spec: &FeedbackSpec,
    cfg: &SimConfig,
) -> Result<ExperimentReport> {
    cfg.validate()?;
    if spec.n == 0 {
        return Err(Error::InvalidParameter("n must be >= 1".into()));
    }
    let model = Model::Advertising(params.clone());
    let (system, cost) = build_prepared(&model, cfg.dt())?;
    let x = spec
        .x0
        .clone()
        .unwrap_or_else(|| default_profiles(&system.bundle.space)[0].clone());
    let x0 = vec![x; spec.n];

    let sol = oracle_adjoint_linear(&system, &cost, &x0, cfg)?;
    let fb = advertising_feedback(&sol, spec.n, params.e0, params.control_weight);
    let fb_samples = path_costs(&system, &cost, &fb, &x0, cfg)?;
    let (fb_v, fb_se) = mean_and_se(&fb_samples)?;
    let brute = oracle_open_loop(&system, &cost, &x0, &spec.coarse, cfg)?;
    let mis = fb.scaled(spec.mis_gain)?;
    let mis_samples = path_costs(&system, &cost, &mis, &x0, cfg)?;

    let mut rep = ExperimentReport::new("feedback-opt");
    rep.input("n", spec.n);
    rep.input("grid", format!("{:?}", spec.coarse.grid));
    rep.input("intervals", spec.coarse.intervals);
    rep.input("mis_gain", spec.mis_gain);
    let base = format!("n={};paths={};steps={}", spec.n, cfg.paths, cfg.steps);

    rep.push(CaseResult::info("feedback value", base.clone(), fb_v, fb_se));
    rep.push(CaseResult::info("brute-force value", base.clone(), brute.best.mean, brute.best.std_error));
    rep.push(CaseResult::info("adjoint value", base.clone(), sol.value, 0.0));
    rep.push(CaseResult::info("adjoint value (continuous time)", base.clone(), sol.value_continuous, 0.0));
    rep.push(CaseResult::info("grid gap", base.clone(), brute.grid_gap, 0.0));

    let (d, dse) = paired_difference(&fb_samples, &brute.best_samples)?;
    rep.push(CaseResult::at_most(
        "feedback <= brute force",
        base.clone(),
        d,
        dse,
        brute.grid_gap + 3.0 * dse + floor(fb_v),
    ));
    rep.push(CaseResult::at_most(
        "|feedback - adjoint|",
        base.clone(),
        (fb_v - sol.value).abs(),
        fb_se,
        3.0 * fb_se + floor(sol.value),
    ));
    let (c, cse) = (brute.best.mean - sol.value, brute.best.std_error);
    rep.push(CaseResult::at_least(
        "brute force >= adjoint",
        base.clone(),
        c,
        cse,
        -(brute.grid_gap + 3.0 * cse + floor(sol.value)),
    ));
    let (w, wse) = paired_difference(&mis_samples, &fb_samples)?;
    let tol = 3.0 * wse + floor(fb_v);
    rep.push(CaseResult::new(
        format!("gain x{} is worse", spec.mis_gain),
        base,
        w,
        wse,
        tol,
        "estimate > tolerance",
        w > tol,
    ));
    rep.note(format!("best open-loop controls per interval: {:?}", brute.best_controls));
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> (FeedbackSpec, SimConfig) {
        let spec = FeedbackSpec {
            coarse: CoarseSpec {
                grid: vec![0.0, 0.5, 1.0, 1.5, 2.0],
                intervals: 2,
            },
            ..Default::default()
        };
        (spec, SimConfig::new(0.0, 1.0, 10, 500, 9).unwrap())
    }

    #[test]
    fn default_benchmark_passes() {
        let (spec, cfg) = small();
        let p = AdvertisingParams {
            grid_m: 11,
            ..Default::default()
        };
        let rep = exp_feedback_vs_bruteforce(&p, &spec, &cfg).unwrap();
        assert!(rep.all_pass(), "{}", rep.summary());
    }

    #[test]
    fn zero_control_channel_makes_all_coincide() {
        let (spec, cfg) = small();
        let p = AdvertisingParams {
            grid_m: 11,
            e0: 0.0,
            ..Default::default()
        };
        let rep = exp_feedback_vs_bruteforce(&p, &spec, &cfg).unwrap();
        let get = |id: &str| rep.cases.iter().find(|c| c.id == id).unwrap().estimate;
        let fb = get("feedback value");
        assert!((fb - get("brute-force value")).abs() < 1e-12);
        let se = rep.cases.iter().find(|c| c.id == "feedback value").unwrap().std_error;
        assert!((fb - get("adjoint value")).abs() <= 3.0 * se);
    }
}
