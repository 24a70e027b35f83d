use super::assignment::{assignment, assignment_cost};
use crate::error::{ensure_dim, Error, Result};
use crate::space_ops::GeneratorBundle;
use crate::{Matrix, Vector};

/// Which norm a distance or moment is measured in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    /// The `H` norm.
    Strong,
    /// The weaker norm `|x|_-1 = |A^-1 x|`.
    Dual,
}

impl Metric {
    pub fn norm(self, bundle: &GeneratorBundle, x: &[f64]) -> f64 {
        match self {
            Metric::Strong => bundle.space.norm_slice(x),
            Metric::Dual => bundle.dual_norm_slice(x),
        }
    }
}

/// `(1/n) sum_i delta_{x_i}` over the discretized space.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMeasure {
    atoms: Vec<Vector>,
}

impl EmpiricalMeasure {
    pub fn new(atoms: Vec<Vector>) -> Result<Self> {
        let first = atoms
            .first()
            .ok_or_else(|| Error::InvalidParameter("empirical measure needs at least one atom".into()))?;
        let dim = first.len();
        for a in &atoms {
            ensure_dim(dim, a.len(), "atom")?;
        }
        Ok(Self { atoms })
    }

    /// Atoms taken from the columns of an ensemble matrix.
    pub fn from_columns(states: &Matrix) -> Result<Self> {
        Self::new(states.column_iter().map(|c| c.into_owned()).collect())
    }

    pub fn dirac(x: Vector) -> Self {
        Self { atoms: vec![x] }
    }

    pub fn atoms(&self) -> &[Vector] {
        &self.atoms
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.atoms[0].len()
    }

    pub fn mean(&self) -> Vector {
        let mut m = Vector::zeros(self.dim());
        for a in &self.atoms {
            m += a;
        }
        m / self.len() as f64
    }

    /// Each atom repeated `k` times, consecutively.
    pub fn replicate(&self, k: usize) -> Self {
        let atoms = self
            .atoms
            .iter()
            .flat_map(|a| std::iter::repeat_n(a.clone(), k))
            .collect();
        Self { atoms }
    }
}

fn check_r(r: f64) -> Result<()> {
    if (1.0..=2.0).contains(&r) {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("moment order r must lie in [1, 2], got {r}")))
    }
}

/// `((1/n) sum |x_i|^r)^(1/r)` in the chosen metric.
pub fn moment(bundle: &GeneratorBundle, mu: &EmpiricalMeasure, r: f64, metric: Metric) -> Result<f64> {
    check_r(r)?;
    ensure_dim(bundle.dim(), mu.dim(), "measure vs space")?;
    let n = mu.len() as f64;
    let s: f64 = mu
        .atoms
        .iter()
        .map(|a| metric.norm(bundle, a.as_slice()).powf(r))
        .sum();
    Ok((s / n).powf(1.0 / r))
}

/// Wasserstein-r distance between two empirical measures with the same
/// number of atoms: the minimum over permutations, found by optimal
/// assignment on the matrix of `|x_i - y_j|^r`.
pub fn wasserstein(
    bundle: &GeneratorBundle,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    r: f64,
    metric: Metric,
) -> Result<f64> {
    check_r(r)?;
    if mu.len() != nu.len() {
        return Err(Error::Unsupported(format!(
            "wasserstein distance between measures of different sizes ({} vs {})",
            mu.len(),
            nu.len()
        )));
    }
    let cost = transport_costs(bundle, mu, nu, r, metric)?;
    let perm = assignment(&cost);
    Ok((assignment_cost(&cost, &perm) / mu.len() as f64).powf(1.0 / r))
}

/// Matrix of `|x_i - y_j|^r` in the chosen metric.
pub fn transport_costs(
    bundle: &GeneratorBundle,
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    r: f64,
    metric: Metric,
) -> Result<Matrix> {
    ensure_dim(bundle.dim(), mu.dim(), "measure vs space")?;
    ensure_dim(bundle.dim(), nu.dim(), "measure vs space")?;
    Ok(Matrix::from_fn(mu.len(), nu.len(), |i, j| {
        let diff = &mu.atoms[i] - &nu.atoms[j];
        metric.norm(bundle, diff.as_slice()).powf(r)
    }))
}
