//! Dispatch of one configured experiment and the exit-code contract.

use std::fs;
use std::path::{Path, PathBuf};

use mfc_core::measures::sample_atoms;
use mfc_core::value_lab::{
    costate_feedback, default_law, exp_convergence_sweep, exp_diagnose, exp_feedback_vs_bruteforce,
    exp_lifting_identity, exp_regularity_probe, exp_sdde_check, exp_truncation, exp_wasserstein_oracle,
    oracle_adjoint_linear, ExperimentReport, FeedbackSpec, LiftingSpec, RegularitySpec, SddeSpec, SweepPolicy,
    SweepSpec,
};
use mfc_core::{AdvertisingParams, ControlPolicy, Model, VintageParams};

use crate::config::{ExperimentConfig, LawChoice, RunConfig};
use crate::output;

/// All declared tolerances hold.
pub const EXIT_PASS: i32 = 0;
/// The run failed before producing a report.
pub const EXIT_ERROR: i32 = 1;
/// The report was produced and at least one case is outside tolerance.
pub const EXIT_TOLERANCE: i32 = 2;

/// Path trajectories written by `--dump-paths` are capped at this many paths.
pub const DUMP_PATHS: usize = 16;

/// Command-line overrides of the `[output]` section.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub outdir: Option<PathBuf>,
    pub dump_paths: bool,
    /// Worker threads; `None` keeps the default pool.
    pub workers: Option<usize>,
}

fn advertising(model: &Model) -> Result<&AdvertisingParams, String> {
    match model {
        Model::Advertising(p) => Ok(p),
        Model::Vintage(_) => Err("this experiment runs on the advertising model".into()),
    }
}

/// Run the configured experiment.
pub fn execute(cfg: &RunConfig) -> Result<ExperimentReport, String> {
    let e = |err: mfc_core::Error| err.to_string();
    let sim = &cfg.sim;
    let model = &cfg.model;
    match &cfg.experiment {
        ExperimentConfig::LiftCheck {
            n_list,
            policy_seed,
            negative_control,
        } => {
            let spec = LiftingSpec {
                n_list: n_list.clone(),
                law: None,
                policy_seed: *policy_seed,
                negative_control: *negative_control,
            };
            exp_lifting_identity(model, &spec, sim).map_err(e)
        }
        ExperimentConfig::Converge {
            n_list,
            law,
            random_policy,
            monotone_from,
            rerun_seed,
        } => {
            let spec = SweepSpec {
                n_list: n_list.clone(),
                law: match law {
                    LawChoice::Mixture => None,
                    LawChoice::Gaussian => Some(default_law()),
                },
                policy: random_policy.map_or(SweepPolicy::Benchmark, SweepPolicy::Random),
                monotone_from: *monotone_from,
                rerun_seed: *rerun_seed,
            };
            exp_convergence_sweep(model, &spec, sim).map_err(e)
        }
        ExperimentConfig::FeedbackOpt { n, coarse, mis_gain } => {
            let spec = FeedbackSpec {
                n: *n,
                coarse: coarse.clone(),
                mis_gain: *mis_gain,
                x0: None,
            };
            exp_feedback_vs_bruteforce(advertising(model)?, &spec, sim).map_err(e)
        }
        ExperimentConfig::Regularity {
            n_list,
            pairs,
            lambda,
            curvature,
        } => {
            let spec = RegularitySpec {
                n_list: n_list.clone(),
                pairs: *pairs,
                lambda: *lambda,
                curvature: *curvature,
                law: None,
            };
            exp_regularity_probe(model, &spec, sim).map_err(e)
        }
        ExperimentConfig::Diagnose { models, samples } => {
            let list: Vec<Model> = models
                .iter()
                .map(|name| match (name.as_str(), model) {
                    (n, m) if n == m.name() => m.clone(),
                    ("advertising", _) => Model::Advertising(AdvertisingParams::default()),
                    _ => Model::Vintage(VintageParams::default()),
                })
                .collect();
            exp_diagnose(&list, sim.dt(), *samples, sim.seed).map_err(e)
        }
        ExperimentConfig::OracleCompare {
            instances,
            max_n,
            truncation_samples,
            c_p,
        } => {
            let mut rep = ExperimentReport::new("oracle-compare");
            rep.absorb("wasserstein ", exp_wasserstein_oracle(*instances, *max_n, sim.seed).map_err(e)?);
            rep.absorb("truncation ", exp_truncation(model, *c_p, *truncation_samples, sim.seed).map_err(e)?);
            rep.input("instances", instances);
            rep.input("max_n", max_n);
            rep.input("truncation_samples", truncation_samples);
            rep.input("c_p", c_p);
            Ok(rep)
        }
        ExperimentConfig::SddeCheck {
            levels,
            reference_factor,
            control,
        } => {
            let spec = SddeSpec {
                levels: levels.clone(),
                horizon: sim.horizon,
                reference_factor: *reference_factor,
                control: *control,
            };
            exp_sdde_check(advertising(model)?, &spec, sim.paths, sim.seed).map_err(e)
        }
    }
}

fn first_n(cfg: &RunConfig) -> usize {
    match &cfg.experiment {
        ExperimentConfig::LiftCheck { n_list, .. }
        | ExperimentConfig::Converge { n_list, .. }
        | ExperimentConfig::Regularity { n_list, .. } => n_list.last().copied().unwrap_or(1),
        ExperimentConfig::FeedbackOpt { n, .. } => *n,
        _ => 1,
    }
}

/// Particle trajectories of the model under its benchmark feedback (zero
/// control when the costs are not affine), written as long-format CSV.
pub fn dump_paths(cfg: &RunConfig, dir: &Path) -> Result<(), String> {
    let e = |err: mfc_core::Error| err.to_string();
    let (mut system, cost, _) = cfg.model.build().map_err(e)?;
    let sim = cfg.sim.with_paths(cfg.sim.paths.min(DUMP_PATHS));
    system.prepare(sim.dt()).map_err(e)?;
    let x0 = sample_atoms(&default_law(), &system.bundle.space, first_n(cfg), sim.seed).map_err(e)?;
    let policy = match oracle_adjoint_linear(&system, &cost, &x0, &sim) {
        Ok(sol) => costate_feedback(&system, &cost, &sol),
        Err(_) => ControlPolicy::zero(system.control_dim(), cost.cone).map_err(e)?,
    };
    let bundle = mfc_core::simulate_particles(&system, &policy, &x0, &sim).map_err(e)?;
    let file = fs::File::create(dir.join("paths.csv")).map_err(|err| err.to_string())?;
    bundle
        .write_csv(std::io::BufWriter::new(file))
        .map_err(|err| err.to_string())
}

fn in_pool<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, String> {
    match workers {
        None => Ok(f()),
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w)
            .build()
            .map(|pool| pool.install(f))
            .map_err(|err| err.to_string()),
    }
}

/// Execute, write every output file and return the exit code.
pub fn run(cfg: &RunConfig, over: &Overrides) -> i32 {
    let dir = over.outdir.clone().unwrap_or_else(|| cfg.output.dir.clone());
    if let Err(err) = fs::create_dir_all(&dir) {
        eprintln!("error: cannot create {}: {err}", dir.display());
        return EXIT_ERROR;
    }
    let summary = dir.join("summary.txt");
    let fail = |msg: String| {
        eprintln!("error: {msg}");
        if let Err(err) = output::write_error_summary(&summary, cfg, &msg) {
            eprintln!("error: cannot write {}: {err}", summary.display());
        }
        EXIT_ERROR
    };
    let started = std::time::Instant::now();
    let report = match in_pool(over.workers, || execute(cfg)) {
        Ok(Ok(r)) => r,
        Ok(Err(msg)) | Err(msg) => return fail(msg),
    };
    let written = (|| -> std::io::Result<()> {
        output::write_report_csv(&dir.join("report.csv"), cfg, &report)?;
        output::write_summary(&summary, cfg, &report)?;
        if cfg.output.plots {
            for s in &report.series {
                output::write_plot(&dir, s)?;
            }
        }
        Ok(())
    })();
    if let Err(err) = written {
        return fail(format!("cannot write report: {err}"));
    }
    if over.dump_paths || cfg.output.dump_paths {
        if let Err(msg) = in_pool(over.workers, || dump_paths(cfg, &dir)).and_then(|r| r) {
            return fail(format!("path dump failed: {msg}"));
        }
    }
    let failures = report.failures().len();
    eprintln!(
        "{}: {} cases, {failures} outside tolerance, {:.1} s; outputs in {}",
        cfg.experiment.kind(),
        report.cases.len(),
        started.elapsed().as_secs_f64(),
        dir.display()
    );
    if failures == 0 {
        EXIT_PASS
    } else {
        EXIT_TOLERANCE
    }
}

/// Parse `MFC_WORKERS`; unset or empty means the default pool.
pub fn workers_from_env(value: Option<&str>) -> Result<Option<usize>, String> {
    match value.map(str::trim) {
        None | Some("") => Ok(None),
        Some(v) => match v.parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(format!("MFC_WORKERS must be a positive integer, got `{v}`")),
        },
    }
}
