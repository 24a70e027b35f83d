//! Sectioned `key = value` run configuration.
//!
//! ```text
//! [model]
//! name = advertising
//! sigma0 = 0.2
//!
//! [sim]
//! T = 1
//! steps = 50
//! paths = 1000
//! seed = 1
//!
//! [experiment]
//! kind = lift-check
//! n_list = "1,2,5,10"
//!
//! [output]
//! dir = out
//! ```
//!
//! Blank lines and lines starting with `#` or `;` are ignored. Values may be
//! wrapped in double quotes. Every key not set explicitly takes its default,
//! and the full effective configuration is echoed in the run summary.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use mfc_core::models::Kernel;
use mfc_core::value_lab::CoarseSpec;
use mfc_core::{AdvertisingParams, Model, SimConfig, VintageParams};
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("line {line}: expected `[section]` or `key = value`, got `{text}`")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown section [{name}]")]
    UnknownSection { line: usize, name: String },
    #[error("line {line}: key `{key}` outside of any section")]
    NoSection { line: usize, key: String },
    #[error("line {line}: duplicate key `{key}` in [{section}]")]
    Duplicate { line: usize, section: String, key: String },
    #[error("line {line}: unknown key `{key}` in [{section}]")]
    UnknownKey { line: usize, section: String, key: String },
    #[error("line {line}: `{key}` expects {expected}, got `{value}`")]
    Type {
        line: usize,
        key: String,
        expected: &'static str,
        value: String,
    },
    #[error("missing required key `{key}` in [{section}]")]
    Missing { section: String, key: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
}

pub type Result<T> = std::result::Result<T, ConfigError>;

/// Which model the `[model]` section selected.
#[derive(Debug, Clone, PartialEq)]
pub enum LawChoice {
    Mixture,
    Gaussian,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExperimentConfig {
    LiftCheck {
        n_list: Vec<usize>,
        policy_seed: u64,
        negative_control: bool,
    },
    Converge {
        n_list: Vec<usize>,
        law: LawChoice,
        random_policy: Option<u64>,
        monotone_from: usize,
        rerun_seed: u64,
    },
    FeedbackOpt {
        n: usize,
        coarse: CoarseSpec,
        mis_gain: f64,
    },
    Regularity {
        n_list: Vec<usize>,
        pairs: usize,
        lambda: f64,
        curvature: f64,
    },
    Diagnose {
        models: Vec<String>,
        samples: usize,
    },
    OracleCompare {
        instances: usize,
        max_n: usize,
        truncation_samples: usize,
        c_p: f64,
    },
    SddeCheck {
        levels: Vec<(usize, usize)>,
        reference_factor: usize,
        control: f64,
    },
}

impl ExperimentConfig {
    pub fn kind(&self) -> &'static str {
        match self {
            ExperimentConfig::LiftCheck { .. } => "lift-check",
            ExperimentConfig::Converge { .. } => "converge",
            ExperimentConfig::FeedbackOpt { .. } => "feedback-opt",
            ExperimentConfig::Regularity { .. } => "regularity",
            ExperimentConfig::Diagnose { .. } => "diagnose",
            ExperimentConfig::OracleCompare { .. } => "oracle-compare",
            ExperimentConfig::SddeCheck { .. } => "sdde-check",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OutputConfig {
    pub dir: PathBuf,
    pub dump_paths: bool,
    pub plots: bool,
}

/// A fully validated run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub model: Model,
    pub sim: SimConfig,
    pub experiment: ExperimentConfig,
    pub output: OutputConfig,
    /// Effective settings as `(section, key, value, defaulted)` in a fixed order.
    pub echo: Vec<(String, String, String, bool)>,
}

impl RunConfig {
    /// SHA-256 of the effective model, sim and experiment settings.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for (s, k, v, _) in &self.echo {
            if s != "output" {
                h.update(format!("{s}.{k}={v}\n").as_bytes());
            }
        }
        h.finalize().iter().fold(String::new(), |mut acc, b| {
            let _ = write!(acc, "{b:02x}");
            acc
        })
    }

    /// The echo rendered as sections, defaults marked.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut current = "";
        for (s, k, v, d) in &self.echo {
            if s != current {
                let _ = writeln!(out, "[{s}]");
                current = s;
            }
            let _ = writeln!(out, "{k} = {v}{}", if *d { "  (default)" } else { "" });
        }
        out
    }
}

struct Entry {
    line: usize,
    value: String,
    used: bool,
}

/// Entries of one section, consumed by typed getters.
struct Section {
    name: String,
    entries: BTreeMap<String, Entry>,
    echo: Vec<(String, String, String, bool)>,
}

impl Section {
    fn new(name: &str, entries: BTreeMap<String, Entry>) -> Self {
        Self {
            name: name.into(),
            entries,
            echo: Vec::new(),
        }
    }

    fn raw(&mut self, key: &str) -> Option<(usize, String)> {
        self.entries.get_mut(key).map(|e| {
            e.used = true;
            (e.line, e.value.clone())
        })
    }

    fn get<T>(
        &mut self,
        key: &str,
        default: T,
        expected: &'static str,
        parse: impl Fn(&str) -> Option<T>,
        show: impl Fn(&T) -> String,
    ) -> Result<T> {
        let (v, defaulted) = match self.raw(key) {
            Some((line, text)) => match parse(&text) {
                Some(v) => (v, false),
                None => {
                    return Err(ConfigError::Type {
                        line,
                        key: key.into(),
                        expected,
                        value: text,
                    })
                }
            },
            None => (default, true),
        };
        self.echo.push((self.name.clone(), key.into(), show(&v), defaulted));
        Ok(v)
    }

    fn f64(&mut self, key: &str, default: f64) -> Result<f64> {
        self.get(key, default, "a number", |s| s.parse().ok().filter(|v: &f64| v.is_finite()), |v| v.to_string())
    }

    fn usize(&mut self, key: &str, default: usize) -> Result<usize> {
        self.get(key, default, "a nonnegative integer", |s| s.parse().ok(), |v| v.to_string())
    }

    fn u64(&mut self, key: &str, default: u64) -> Result<u64> {
        self.get(key, default, "a nonnegative integer", |s| s.parse().ok(), |v| v.to_string())
    }

    fn bool(&mut self, key: &str, default: bool) -> Result<bool> {
        self.get(key, default, "true or false", parse_bool, |v| v.to_string())
    }

    fn n_list(&mut self, key: &str, default: &[usize]) -> Result<Vec<usize>> {
        self.get(key, default.to_vec(), "a comma-separated list of positive integers", parse_n_list, |v| join(v))
    }

    fn f64_list(&mut self, key: &str, default: &[f64]) -> Result<Vec<f64>> {
        self.get(key, default.to_vec(), "a comma-separated list of numbers", parse_f64_list, |v| join(v))
    }

    fn kernel(&mut self, key: &str, default: Kernel) -> Result<Kernel> {
        self.get(
            key,
            default,
            "zero, constant:<v>, ramp_up:<v>, ramp_down:<v> or table:<v1,v2,...>",
            parse_kernel,
            show_kernel,
        )
    }

    fn word(&mut self, key: &str, default: &str, choices: &'static [&'static str]) -> Result<String> {
        self.get(
            key,
            default.to_string(),
            "one of the documented choices",
            |s| choices.contains(&s).then(|| s.to_string()),
            |v| v.clone(),
        )
        .map_err(|e| match e {
            ConfigError::Type { line, key, value, .. } => ConfigError::Invalid(format!(
                "line {line}: `{key}` must be one of {}, got `{value}`",
                choices.join(", ")
            )),
            e => e,
        })
    }

    fn required_word(&mut self, key: &str, choices: &'static [&'static str]) -> Result<String> {
        if !self.entries.contains_key(key) {
            return Err(ConfigError::Missing {
                section: self.name.clone(),
                key: key.into(),
            });
        }
        let v = self.word(key, "", choices)?;
        if let Some(last) = self.echo.last_mut() {
            last.3 = false;
        }
        Ok(v)
    }

    /// Reject keys that no getter asked for.
    fn finish(self, echo: &mut Vec<(String, String, String, bool)>) -> Result<()> {
        if let Some((key, e)) = self
            .entries
            .iter()
            .filter(|(_, e)| !e.used)
            .min_by_key(|(_, e)| e.line)
        {
            return Err(ConfigError::UnknownKey {
                line: e.line,
                section: self.name,
                key: key.clone(),
            });
        }
        echo.extend(self.echo);
        Ok(())
    }
}

fn join<T: ToString>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn parse_bool(s: &str) -> Option<bool> {
    match s {
        "true" | "yes" | "1" => Some(true),
        "false" | "no" | "0" => Some(false),
        _ => None,
    }
}

/// `"2,4,8"` to an ascending list without duplicates.
pub fn parse_n_list(s: &str) -> Option<Vec<usize>> {
    let mut v: Vec<usize> = s
        .split(',')
        .map(|t| t.trim().parse::<usize>().ok().filter(|n| *n > 0))
        .collect::<Option<_>>()?;
    v.sort_unstable();
    v.dedup();
    Some(v)
}

fn parse_f64_list(s: &str) -> Option<Vec<f64>> {
    s.split(',')
        .map(|t| t.trim().parse::<f64>().ok().filter(|v| v.is_finite()))
        .collect()
}

fn parse_kernel(s: &str) -> Option<Kernel> {
    let (name, arg) = match s.split_once(':') {
        Some((n, a)) => (n.trim(), Some(a.trim())),
        None => (s.trim(), None),
    };
    let num = || arg.and_then(|a| a.parse::<f64>().ok()).filter(|v| v.is_finite());
    match name {
        "zero" if arg.is_none() => Some(Kernel::Zero),
        "constant" => num().map(Kernel::Constant),
        "ramp_up" => num().map(|scale| Kernel::RampUp { scale }),
        "ramp_down" => num().map(|scale| Kernel::RampDown { scale }),
        "table" => arg.and_then(parse_f64_list).map(Kernel::Table),
        _ => None,
    }
}

fn show_kernel(k: &Kernel) -> String {
    match k {
        Kernel::Zero => "zero".into(),
        Kernel::Constant(c) => format!("constant:{c}"),
        Kernel::RampUp { scale } => format!("ramp_up:{scale}"),
        Kernel::RampDown { scale } => format!("ramp_down:{scale}"),
        Kernel::Table(v) => format!("table:{}", join(v)),
    }
}

fn parse_levels(s: &str) -> Option<Vec<(usize, usize)>> {
    s.split(',')
        .map(|t| {
            let (m, k) = t.trim().split_once(':')?;
            Some((m.trim().parse().ok()?, k.trim().parse().ok()?))
        })
        .collect()
}

const SECTIONS: [&str; 4] = ["model", "sim", "experiment", "output"];
const MODELS: &[&str] = &["advertising", "vintage"];
const KINDS: &[&str] = &[
    "lift-check",
    "converge",
    "feedback-opt",
    "regularity",
    "diagnose",
    "oracle-compare",
    "sdde-check",
];

fn split_sections(text: &str) -> Result<BTreeMap<String, BTreeMap<String, Entry>>> {
    let mut out: BTreeMap<String, BTreeMap<String, Entry>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let t = raw.trim();
        if t.is_empty() || t.starts_with('#') || t.starts_with(';') {
            continue;
        }
        if let Some(name) = t.strip_prefix('[').and_then(|r| r.strip_suffix(']')) {
            let name = name.trim();
            if !SECTIONS.contains(&name) {
                return Err(ConfigError::UnknownSection {
                    line,
                    name: name.into(),
                });
            }
            out.entry(name.into()).or_default();
            current = Some(name.into());
            continue;
        }
        let Some((k, v)) = t.split_once('=') else {
            return Err(ConfigError::Syntax { line, text: t.into() });
        };
        let key = k.trim().to_string();
        if key.is_empty() {
            return Err(ConfigError::Syntax { line, text: t.into() });
        }
        let mut value = v.trim();
        if value.len() >= 2 && value.starts_with('"') && value.ends_with('"') {
            value = &value[1..value.len() - 1];
        }
        let Some(section) = &current else {
            return Err(ConfigError::NoSection { line, key });
        };
        let map = out.get_mut(section).expect("section registered");
        if map.contains_key(&key) {
            return Err(ConfigError::Duplicate {
                line,
                section: section.clone(),
                key,
            });
        }
        map.insert(
            key,
            Entry {
                line,
                value: value.trim().to_string(),
                used: false,
            },
        );
    }
    Ok(out)
}

fn advertising(s: &mut Section) -> Result<AdvertisingParams> {
    let d = AdvertisingParams::default();
    Ok(AdvertisingParams {
        b0: s.f64("b0", d.b0)?,
        c0: s.f64("c0", d.c0)?,
        e0: s.f64("e0", d.e0)?,
        sigma0: s.f64("sigma0", d.sigma0)?,
        d: s.f64("d", d.d)?,
        eta1: s.kernel("eta1", d.eta1)?,
        chi1: s.kernel("chi1", d.chi1)?,
        alpha: s.f64("alpha", d.alpha)?,
        beta: s.f64("beta", d.beta)?,
        gamma_t: s.f64("gamma_t", d.gamma_t)?,
        delta_t: s.f64("delta_t", d.delta_t)?,
        kappa_t: s.f64("kappa_t", d.kappa_t)?,
        control_weight: s.f64("control_weight", d.control_weight)?,
        grid_m: s.usize("grid_m", d.grid_m)?,
    })
}

fn vintage(s: &mut Section) -> Result<VintageParams> {
    let d = VintageParams::default();
    Ok(VintageParams {
        theta_max: s.f64("theta_max", d.theta_max)?,
        delta: s.f64("delta", d.delta)?,
        delta_bar: s.f64("delta_bar", d.delta_bar)?,
        eta: s.kernel("eta", d.eta)?,
        alpha: s.f64("alpha", d.alpha)?,
        gamma_t: s.f64("gamma_t", d.gamma_t)?,
        control_weight: s.f64("control_weight", d.control_weight)?,
        grid_m: s.usize("grid_m", d.grid_m)?,
        noise_rank: s.usize("noise_rank", d.noise_rank)?,
        noise_scale: s.f64("noise_scale", d.noise_scale)?,
    })
}

fn experiment(s: &mut Section) -> Result<ExperimentConfig> {
    let kind = s.required_word("kind", KINDS)?;
    Ok(match kind.as_str() {
        "lift-check" => ExperimentConfig::LiftCheck {
            n_list: s.n_list("n_list", &[1, 2, 5, 10])?,
            policy_seed: s.u64("policy_seed", 7)?,
            negative_control: s.bool("negative_control", true)?,
        },
        "converge" => {
            let n_list = s.n_list("n_list", &[2, 4, 8, 16, 32, 64, 128])?;
            let law = match s.word("law", "mixture", &["mixture", "gaussian"])?.as_str() {
                "mixture" => LawChoice::Mixture,
                _ => LawChoice::Gaussian,
            };
            let policy = s.word("policy", "benchmark", &["benchmark", "random"])?;
            let seed = s.u64("policy_seed", 7)?;
            ExperimentConfig::Converge {
                n_list,
                law,
                random_policy: (policy == "random").then_some(seed),
                monotone_from: s.usize("monotone_from", 8)?,
                rerun_seed: s.u64("rerun_seed", 0x0dd5_eed)?,
            }
        }
        "feedback-opt" => ExperimentConfig::FeedbackOpt {
            n: s.usize("n", 1)?,
            coarse: CoarseSpec {
                grid: s.f64_list("grid", &[0.0, 0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 1.75, 2.0])?,
                intervals: s.usize("intervals", 3)?,
            },
            mis_gain: s.f64("mis_gain", 1.5)?,
        },
        "regularity" => ExperimentConfig::Regularity {
            n_list: s.n_list("n_list", &[2, 8, 32])?,
            pairs: s.usize("pairs", 50)?,
            lambda: s.f64("lambda", 0.5)?,
            curvature: s.f64("curvature", 1.0)?,
        },
        "diagnose" => {
            let models: Vec<String> = s.get(
                "models",
                vec!["advertising".to_string(), "vintage".to_string()],
                "a comma-separated list of advertising, vintage",
                |v| {
                    v.split(',')
                        .map(|t| {
                            let t = t.trim();
                            MODELS.contains(&t).then(|| t.to_string())
                        })
                        .collect()
                },
                |v| v.join(","),
            )?;
            ExperimentConfig::Diagnose {
                models,
                samples: s.usize("samples", 1000)?,
            }
        }
        "oracle-compare" => ExperimentConfig::OracleCompare {
            instances: s.usize("instances", 200)?,
            max_n: s.usize("max_n", 7)?,
            truncation_samples: s.usize("truncation_samples", 1000)?,
            c_p: s.f64("c_p", 2.0)?,
        },
        _ => ExperimentConfig::SddeCheck {
            levels: s.get(
                "levels",
                vec![(11, 20), (21, 40), (41, 80)],
                "a comma-separated list of grid:steps pairs",
                parse_levels,
                |v| v.iter().map(|(m, k)| format!("{m}:{k}")).collect::<Vec<_>>().join(","),
            )?,
            reference_factor: s.usize("reference_factor", 10)?,
            control: s.f64("control", 0.5)?,
        },
    })
}

/// Parse and validate a configuration text.
pub fn parse_str(text: &str) -> Result<RunConfig> {
    let mut sections = split_sections(text)?;
    let mut take = |name: &str| Section::new(name, sections.remove(name).unwrap_or_default());
    let mut echo = Vec::new();

    let mut m = take("model");
    let name = m.required_word("name", MODELS)?;
    let model = if name == "advertising" {
        Model::Advertising(advertising(&mut m)?)
    } else {
        Model::Vintage(vintage(&mut m)?)
    };
    m.finish(&mut echo)?;

    let mut s = take("sim");
    let t0 = s.f64("t0", 0.0)?;
    let horizon = s.f64("T", 1.0)?;
    let steps = s.usize("steps", 50)?;
    let paths = s.usize("paths", 1000)?;
    let seed = s.u64("seed", 1)?;
    s.finish(&mut echo)?;
    let sim = SimConfig::new(t0, horizon, steps, paths, seed).map_err(|e| ConfigError::Invalid(e.to_string()))?;

    let mut e = take("experiment");
    let experiment = experiment(&mut e)?;
    e.finish(&mut echo)?;

    let mut o = take("output");
    let dir = o.get("dir", PathBuf::from("out"), "a path", |v| Some(PathBuf::from(v)), |p| p.display().to_string())?;
    let output = OutputConfig {
        dir,
        dump_paths: o.bool("dump_paths", false)?,
        plots: o.bool("plots", true)?,
    };
    o.finish(&mut echo)?;

    let cfg = RunConfig {
        model,
        sim,
        experiment,
        output,
        echo,
    };
    validate(&cfg)?;
    Ok(cfg)
}

fn validate(cfg: &RunConfig) -> Result<()> {
    cfg.model.build().map_err(|e| ConfigError::Invalid(e.to_string()))?;
    let bad = |m: String| Err(ConfigError::Invalid(m));
    match &cfg.experiment {
        ExperimentConfig::Regularity { lambda, pairs, .. } => {
            if !(*lambda > 0.0 && *lambda < 1.0) {
                return bad(format!("lambda must lie in (0, 1), got {lambda}"));
            }
            if *pairs == 0 {
                return bad("pairs must be >= 1".into());
            }
        }
        ExperimentConfig::FeedbackOpt { n, coarse, .. } => {
            if !matches!(cfg.model, Model::Advertising(_)) {
                return bad("feedback-opt runs on the advertising model".into());
            }
            if *n == 0 || coarse.intervals == 0 {
                return bad("n and intervals must be >= 1".into());
            }
        }
        ExperimentConfig::SddeCheck { levels, reference_factor, .. } => {
            if !matches!(cfg.model, Model::Advertising(_)) {
                return bad("sdde-check runs on the advertising model".into());
            }
            if levels.len() < 2 || *reference_factor == 0 {
                return bad("sdde-check needs two or more levels and reference_factor >= 1".into());
            }
        }
        ExperimentConfig::Converge { n_list, .. } if n_list.len() < 2 => {
            return bad("converge needs at least two values in n_list".into());
        }
        ExperimentConfig::OracleCompare { max_n, .. } if *max_n == 0 || *max_n > 8 => {
            return bad(format!("max_n must lie in 1..=8, got {max_n}"));
        }
        _ => {}
    }
    Ok(())
}

/// Read and parse a configuration file.
pub fn parse_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_str(&text)
}
