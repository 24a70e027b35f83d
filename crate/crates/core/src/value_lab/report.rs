use std::fmt::Write as _;

use crate::error::{Error, Result};

/// Monte Carlo estimate of a cost or value.
#[derive(Debug, Clone, PartialEq)]
pub struct ValueEstimate {
    pub mean: f64,
    /// Sample standard deviation over `sqrt(paths)`.
    pub std_error: f64,
    pub paths: usize,
    pub seed: u64,
    pub fingerprint: String,
}

impl ValueEstimate {
    pub fn from_samples(samples: &[f64], seed: u64, fingerprint: impl Into<String>) -> Result<Self> {
        let (mean, std_error) = mean_and_se(samples)?;
        Ok(Self {
            mean,
            std_error,
            paths: samples.len(),
            seed,
            fingerprint: fingerprint.into(),
        })
    }
}

/// Sample mean and standard error (zero for a single sample), summed in
/// index order.
pub fn mean_and_se(samples: &[f64]) -> Result<(f64, f64)> {
    if samples.is_empty() {
        return Err(Error::InvalidParameter("no samples".into()));
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    if samples.len() == 1 {
        return Ok((mean, 0.0));
    }
    let var = samples.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    Ok((mean, (var / n).sqrt()))
}

/// Mean and standard error of `a_i - b_i` under common random numbers.
pub fn paired_difference(a: &[f64], b: &[f64]) -> Result<(f64, f64)> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            got: b.len(),
            context: "paired samples",
        });
    }
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    mean_and_se(&d)
}

/// One row of a report; `pass` always refers to `tolerance` via `rule`.
#[derive(Debug, Clone, PartialEq)]
pub struct CaseResult {
    pub id: String,
    pub inputs: String,
    pub estimate: f64,
    pub std_error: f64,
    pub tolerance: f64,
    /// Human-readable statement of the check, e.g. `estimate < tolerance`.
    pub rule: String,
    pub pass: bool,
}

impl CaseResult {
    pub fn new(
        id: impl Into<String>,
        inputs: impl Into<String>,
        estimate: f64,
        std_error: f64,
        tolerance: f64,
        rule: impl Into<String>,
        pass: bool,
    ) -> Self {
        Self {
            id: id.into(),
            inputs: inputs.into(),
            estimate,
            std_error,
            tolerance,
            rule: rule.into(),
            pass,
        }
    }

    /// Pass iff `estimate <= tolerance`.
    pub fn at_most(
        id: impl Into<String>,
        inputs: impl Into<String>,
        estimate: f64,
        std_error: f64,
        tolerance: f64,
    ) -> Self {
        let pass = estimate <= tolerance;
        Self::new(id, inputs, estimate, std_error, tolerance, "estimate <= tolerance", pass)
    }

    /// Pass iff `estimate >= tolerance`.
    pub fn at_least(
        id: impl Into<String>,
        inputs: impl Into<String>,
        estimate: f64,
        std_error: f64,
        tolerance: f64,
    ) -> Self {
        let pass = estimate >= tolerance;
        Self::new(id, inputs, estimate, std_error, tolerance, "estimate >= tolerance", pass)
    }

    /// Informational row: always passes, tolerance is NaN.
    pub fn info(id: impl Into<String>, inputs: impl Into<String>, estimate: f64, std_error: f64) -> Self {
        Self::new(id, inputs, estimate, std_error, f64::NAN, "reported only", true)
    }
}

/// `(x, y)` data for a plot.
#[derive(Debug, Clone, PartialEq)]
pub struct PlotSeries {
    pub name: String,
    pub x_label: String,
    pub y_label: String,
    pub points: Vec<(f64, f64)>,
}

/// Outcome of one experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub kind: String,
    pub inputs: Vec<(String, String)>,
    pub cases: Vec<CaseResult>,
    pub notes: Vec<String>,
    pub series: Vec<PlotSeries>,
    /// Wall-clock seconds; never written to report files.
    pub runtime_secs: f64,
}

impl ExperimentReport {
    pub fn new(kind: impl Into<String>) -> Self {
        Self {
            kind: kind.into(),
            inputs: Vec::new(),
            cases: Vec::new(),
            notes: Vec::new(),
            series: Vec::new(),
            runtime_secs: 0.0,
        }
    }

    pub fn input(&mut self, key: &str, value: impl ToString) {
        self.inputs.push((key.to_string(), value.to_string()));
    }

    pub fn push(&mut self, case: CaseResult) {
        self.cases.push(case);
    }

    pub fn note(&mut self, s: impl Into<String>) {
        self.notes.push(s.into());
    }

    pub fn all_pass(&self) -> bool {
        self.cases.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> Vec<&CaseResult> {
        self.cases.iter().filter(|c| !c.pass).collect()
    }

    /// Append all cases, notes and series of `other`, prefixing case ids.
    pub fn absorb(&mut self, prefix: &str, other: ExperimentReport) {
        for mut c in other.cases {
            c.id = format!("{prefix}{}", c.id);
            self.cases.push(c);
        }
        self.notes.extend(other.notes);
        self.series.extend(other.series);
        self.runtime_secs += other.runtime_secs;
    }

    /// Plain-text summary (without runtime).
    pub fn summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "experiment: {}", self.kind);
        for (k, v) in &self.inputs {
            let _ = writeln!(s, "  {k} = {v}");
        }
        let passed = self.cases.iter().filter(|c| c.pass).count();
        let _ = writeln!(s, "cases: {passed}/{} pass", self.cases.len());
        for c in &self.cases {
            let _ = writeln!(
                s,
                "  [{}] {}: estimate {:.6e} (se {:.3e}) vs tolerance {:.6e}; {}",
                if c.pass { "PASS" } else { "FAIL" },
                c.id,
                c.estimate,
                c.std_error,
                c.tolerance,
                c.rule
            );
        }
        for n in &self.notes {
            let _ = writeln!(s, "note: {n}");
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_error() {
        let (m, se) = mean_and_se(&[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(m, 2.5);
        assert!((se - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_and_se(&[3.0]).unwrap(), (3.0, 0.0));
        assert!(mean_and_se(&[]).is_err());
    }

    #[test]
    fn paired_se_cancels_common_noise() {
        let a = [1.0, 5.0, -3.0, 2.0];
        let b: Vec<f64> = a.iter().map(|x| x - 0.5).collect();
        let (d, se) = paired_difference(&a, &b).unwrap();
        assert_eq!(d, 0.5);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn report_pass_logic() {
        let mut r = ExperimentReport::new("x");
        r.push(CaseResult::at_most("a", "", 1.0, 0.0, 2.0));
        assert!(r.all_pass());
        r.push(CaseResult::at_least("b", "", 1.0, 0.0, 2.0));
        assert!(!r.all_pass());
        assert_eq!(r.failures().len(), 1);
        assert!(r.summary().contains("[FAIL] b"));
    }
}
