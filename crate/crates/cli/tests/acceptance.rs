//! Acceptance criteria 1-9, one PASS/FAIL line each.
//!
//! Every experiment is run through the `mfc` binary at criterion scale with
//! one worker, then again with three workers; criteria 1-8 read the first
//! run's report.csv and criterion 9 compares the two byte for byte.

use std::path::Path;
use std::process::Command;

struct Row {
    id: String,
    estimate: f64,
    tolerance: f64,
    pass: bool,
}

struct Run {
    exit: Option<i32>,
    csv: Vec<u8>,
    rows: Vec<Row>,
}

impl Run {
    fn rows_with(&self, prefix: &str) -> Vec<&Row> {
        self.rows.iter().filter(|r| r.id.starts_with(prefix)).collect()
    }

    fn row(&self, id: &str) -> Option<&Row> {
        self.rows.iter().find(|r| r.id == id)
    }
}

const LIFT: &str = "
[model]
name = advertising
[sim]
T = 1
steps = 50
paths = 1000
seed = 1
[experiment]
kind = lift-check
n_list = 1,2,5,10
";

const ORACLE: &str = "
[model]
name = advertising
[sim]
seed = 3
[experiment]
kind = oracle-compare
instances = 200
max_n = 7
truncation_samples = 1000
c_p = 2
";

const DIAGNOSE: &str = "
[model]
name = advertising
[sim]
T = 1
steps = 50
[experiment]
kind = diagnose
models = advertising,vintage
";

const FEEDBACK: &str = "
[model]
name = advertising
grid_m = 21
[sim]
T = 1
steps = 30
paths = 10000
seed = 5
[experiment]
kind = feedback-opt
n = 1
grid = 0,0.25,0.5,0.75,1,1.25,1.5,1.75,2
intervals = 3
mis_gain = 1.5
";

const CONVERGE: &str = "
[model]
name = advertising
grid_m = 21
[sim]
T = 1
steps = 25
paths = 2000
seed = 2
[experiment]
kind = converge
n_list = 2,4,8,16,32,64,128
law = mixture
";

const SDDE: &str = "
[model]
name = advertising
[sim]
T = 2
paths = 50
seed = 11
[experiment]
kind = sdde-check
levels = 11:20,21:40,41:80
reference_factor = 10
";

const REGULARITY: &str = "
[model]
name = advertising
grid_m = 21
[sim]
T = 1
steps = 20
paths = 200
seed = 4
[experiment]
kind = regularity
n_list = 2,8,32
pairs = 50
lambda = 0.5
";

fn run(root: &Path, name: &str, config: &str, workers: usize) -> Run {
    let dir = root.join(format!("{name}-w{workers}"));
    std::fs::create_dir_all(&dir).unwrap();
    let cfg = dir.join("run.cfg");
    std::fs::write(&cfg, config).unwrap();
    let out = dir.join("out");
    let status = Command::new(env!("CARGO_BIN_EXE_mfc"))
        .arg("run")
        .arg(&cfg)
        .arg("--outdir")
        .arg(&out)
        .env("MFC_WORKERS", workers.to_string())
        .status()
        .expect("mfc binary runs");
    let csv = std::fs::read(out.join("report.csv")).unwrap_or_default();
    let mut rows = Vec::new();
    let mut reader = csv::Reader::from_reader(csv.as_slice());
    for rec in reader.records() {
        let rec = rec.unwrap();
        rows.push(Row {
            id: rec[0].to_string(),
            estimate: rec[2].parse().unwrap(),
            tolerance: rec[4].parse().unwrap(),
            pass: &rec[5] == "true",
        });
    }
    Run {
        exit: status.code(),
        csv,
        rows,
    }
}

/// All listed rows exist and pass.
fn rows_pass(run: &Run, ids: &[String]) -> Result<(), String> {
    for id in ids {
        match run.row(id) {
            None => return Err(format!("missing row `{id}`")),
            Some(r) if !r.pass => {
                return Err(format!("`{id}`: estimate {} vs tolerance {}", r.estimate, r.tolerance))
            }
            _ => {}
        }
    }
    Ok(())
}

fn prefix_pass(run: &Run, prefix: &str, expected: usize) -> Result<(), String> {
    let rows = run.rows_with(prefix);
    if rows.len() != expected {
        return Err(format!("expected {expected} `{prefix}` rows, found {}", rows.len()));
    }
    match rows.iter().find(|r| !r.pass) {
        Some(r) => Err(format!("`{}`: estimate {} vs tolerance {}", r.id, r.estimate, r.tolerance)),
        None => Ok(()),
    }
}

fn exit_ok(run: &Run) -> Result<(), String> {
    match run.exit {
        Some(0) => Ok(()),
        other => Err(format!("exit status {other:?}")),
    }
}

fn ids(items: &[&str], ns: &[usize]) -> Vec<String> {
    items
        .iter()
        .flat_map(|i| ns.iter().map(move |n| format!("{i} n={n}")))
        .collect()
}

fn main() {
    let tmp = tempfile::tempdir().unwrap();
    let configs = [
        ("lift-check", LIFT),
        ("oracle-compare", ORACLE),
        ("diagnose", DIAGNOSE),
        ("feedback-opt", FEEDBACK),
        ("converge", CONVERGE),
        ("sdde-check", SDDE),
        ("regularity", REGULARITY),
    ];
    let first: Vec<Run> = configs.iter().map(|(n, c)| run(tmp.path(), n, c, 1)).collect();
    let get = |name: &str| &first[configs.iter().position(|(n, _)| *n == name).unwrap()];

    let mut results: Vec<(u32, &str, Result<(), String>)> = Vec::new();

    let lift = get("lift-check");
    results.push((
        1,
        "lifting identity, n in {1,2,5,10}, 1e3 paths, 50 steps, < 1e-10",
        exit_ok(lift).and_then(|_| {
            let mut want = ids(&["state", "cost"], &[1, 2, 5, 10]);
            want.push("negative control n=10".into());
            rows_pass(lift, &want)
        }),
    ));

    let oracle = get("oracle-compare");
    results.push((
        2,
        "Wasserstein assignment = permutation brute force, 200 instances, strong and dual",
        exit_ok(oracle).and_then(|_| prefix_pass(oracle, "wasserstein ", 4)),
    ));

    let diag = get("diagnose");
    let checks = ["dissipativity_margin", "contraction_norm", "semigroup_error", "weak_b_min_eig"];
    let diag_ids: Vec<String> = ["advertising", "vintage"]
        .iter()
        .flat_map(|m| checks.iter().map(move |c| format!("{m} {c}")))
        .collect();
    results.push((
        3,
        "operator diagnostics for both models at 1e-9",
        exit_ok(diag).and_then(|_| rows_pass(diag, &diag_ids)),
    ));

    results.push((
        4,
        "Hamiltonian truncation, 1e3 co-states, K vs 10K within 1e-8",
        exit_ok(oracle).and_then(|_| prefix_pass(oracle, "truncation ", 5)),
    ));

    let fb = get("feedback-opt");
    results.push((
        5,
        "feedback vs brute force and adjoint oracle, n=1, 3 intervals, 9-point grid, 1e4 paths",
        exit_ok(fb).and_then(|_| {
            rows_pass(
                fb,
                &[
                    "feedback <= brute force".into(),
                    "|feedback - adjoint|".into(),
                    "gain x1.5 is worse".into(),
                ],
            )
        }),
    ));

    let conv = get("converge");
    results.push((
        6,
        "convergence sweep, n up to 128, 2e3 paths: monotone gap and decreasing d2",
        exit_ok(conv).and_then(|_| {
            prefix_pass(conv, "monotone gap ", 3)?;
            prefix_pass(conv, "d2 decreasing ", 5)?;
            rows_pass(conv, &["rerun n=128".into()])
        }),
    ));

    let sdde = get("sdde-check");
    results.push((
        7,
        "delay reformulation: order >= 0.7 and shrinking stochastic difference",
        exit_ok(sdde).and_then(|_| {
            rows_pass(sdde, &["reformulated order".into(), "direct order".into()])?;
            prefix_pass(sdde, "stochastic difference decreases ", 2)
        }),
    ));

    let reg = get("regularity");
    results.push((
        8,
        "regularity probes, 50 pairs, lambda 0.5, n in {2,8,32}",
        exit_ok(reg).and_then(|_| {
            rows_pass(
                reg,
                &ids(&["linear |defect|", "convex defect", "convex defect bound", "Lipschitz ratio"], &[2, 8, 32]),
            )
        }),
    ));

    let mut det = Ok(());
    for ((name, cfg), a) in configs.iter().zip(&first) {
        let b = run(tmp.path(), name, cfg, 3);
        if a.csv.is_empty() || a.csv != b.csv {
            det = Err(format!("{name}: report.csv differs between 1 and 3 workers"));
            break;
        }
    }
    results.push((9, "byte-identical report.csv across reruns and worker counts", det));

    let mut failed = 0;
    for (n, what, r) in &results {
        match r {
            Ok(()) => println!("AC{n} PASS {what}"),
            Err(why) => {
                failed += 1;
                println!("AC{n} FAIL {what}: {why}");
            }
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
