//! Report files: `report.csv`, `summary.txt`, plot data and path dumps.

use std::fs;
use std::io;
use std::path::Path;

use mfc_core::value_lab::{CaseResult, ExperimentReport, PlotSeries};

use crate::config::RunConfig;

/// Column order of `report.csv`.
pub const REPORT_COLUMNS: [&str; 6] = ["case_id", "inputs", "estimate", "std_error", "tolerance", "pass"];

fn num(v: f64) -> String {
    // shortest round-trip representation, identical on every platform
    v.to_string()
}

/// First row of every report: identifies the configuration and seed.
pub fn run_row(cfg: &RunConfig) -> CaseResult {
    CaseResult::new(
        "run",
        format!(
            "experiment={};model={};config_sha256={};seed={}",
            cfg.experiment.kind(),
            cfg.model.name(),
            cfg.fingerprint(),
            cfg.sim.seed
        ),
        f64::NAN,
        f64::NAN,
        f64::NAN,
        "identification",
        true,
    )
}

pub fn write_report_csv(path: &Path, cfg: &RunConfig, report: &ExperimentReport) -> io::Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(REPORT_COLUMNS)?;
    for c in std::iter::once(&run_row(cfg)).chain(&report.cases) {
        w.write_record([
            c.id.as_str(),
            c.inputs.as_str(),
            &num(c.estimate),
            &num(c.std_error),
            &num(c.tolerance),
            if c.pass { "true" } else { "false" },
        ])?;
    }
    w.flush()
}

fn header(cfg: &RunConfig, status: &str) -> String {
    format!(
        "mfc run: {}\nstatus: {status}\nconfig_sha256: {}\nseed: {}\n\neffective configuration:\n{}\n",
        cfg.experiment.kind(),
        cfg.fingerprint(),
        cfg.sim.seed,
        cfg.render()
    )
}

pub fn write_summary(path: &Path, cfg: &RunConfig, report: &ExperimentReport) -> io::Result<()> {
    let failed = report.failures().len();
    let status = if failed == 0 {
        "PASS".to_string()
    } else {
        format!("FAIL ({failed} of {} cases outside tolerance)", report.cases.len())
    };
    fs::write(path, header(cfg, &status) + &report.summary())
}

pub fn write_error_summary(path: &Path, cfg: &RunConfig, error: &str) -> io::Result<()> {
    fs::write(path, header(cfg, "ERROR") + &format!("error: {error}\n"))
}

/// `plot_<name>.csv` with the series' axis labels as header.
pub fn write_plot(dir: &Path, s: &PlotSeries) -> io::Result<()> {
    let mut w = csv::Writer::from_path(dir.join(format!("plot_{}.csv", s.name)))?;
    w.write_record([s.x_label.as_str(), s.y_label.as_str()])?;
    for (x, y) in &s.points {
        w.write_record([num(*x), num(*y)])?;
    }
    w.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_str;

    #[test]
    fn csv_layout() {
        let cfg = parse_str("[model]\nname = advertising\n[experiment]\nkind = diagnose\n").unwrap();
        let mut rep = ExperimentReport::new("diagnose");
        rep.push(CaseResult::at_most("a, with comma", "x=1;y=[1, 2]", 0.5, 0.0, 1.0));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("report.csv");
        write_report_csv(&p, &cfg, &rep).unwrap();
        let text = fs::read_to_string(&p).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("case_id,inputs,estimate,std_error,tolerance,pass"));
        assert!(lines.next().unwrap().starts_with("run,experiment=diagnose;model=advertising;config_sha256="));
        assert_eq!(lines.next(), Some("\"a, with comma\",\"x=1;y=[1, 2]\",0.5,0,1,true"));
    }
}
