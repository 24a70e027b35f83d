use std::sync::Arc;

use crate::error::{ensure_dim, Error, Result};
use crate::space_ops::GeneratorBundle;
use crate::{Matrix, Vector};

/// Affine controlled dynamics
/// `dx = (A x + S x + M mean(mu) + e q) dt + sigma dW`.
#[derive(Debug, Clone)]
pub struct SystemSpec {
    pub bundle: Arc<GeneratorBundle>,
    /// `S`, the per-particle linear drift.
    pub drift_self: Matrix,
    /// `M`, the coupling through the ensemble mean.
    pub drift_mean: Matrix,
    /// `e`, one column per control channel.
    pub control_map: Matrix,
    /// `sigma`, one column per Brownian coordinate.
    pub noise_map: Matrix,
}

impl SystemSpec {
    pub fn new(
        bundle: GeneratorBundle,
        drift_self: Matrix,
        drift_mean: Matrix,
        control_map: Matrix,
        noise_map: Matrix,
    ) -> Result<Self> {
        let dim = bundle.dim();
        for (m, what) in [
            (&drift_self, "drift_self"),
            (&drift_mean, "drift_mean"),
        ] {
            ensure_dim(dim, m.nrows(), what)?;
            ensure_dim(dim, m.ncols(), what)?;
        }
        ensure_dim(dim, control_map.nrows(), "control_map rows")?;
        ensure_dim(dim, noise_map.nrows(), "noise_map rows")?;
        if control_map.ncols() == 0 {
            return Err(Error::InvalidParameter("at least one control channel is required".into()));
        }
        if noise_map.ncols() == 0 {
            return Err(Error::InvalidParameter("noise rank must be >= 1".into()));
        }
        for m in [&drift_self, &drift_mean, &control_map, &noise_map] {
            if !m.iter().all(|v| v.is_finite()) {
                return Err(Error::InvalidParameter("system matrices must be finite".into()));
            }
        }
        Ok(Self {
            bundle: Arc::new(bundle),
            drift_self,
            drift_mean,
            control_map,
            noise_map,
        })
    }

    pub fn dim(&self) -> usize {
        self.bundle.dim()
    }

    pub fn control_dim(&self) -> usize {
        self.control_map.ncols()
    }

    pub fn noise_rank(&self) -> usize {
        self.noise_map.ncols()
    }

    /// Cache `exp(dt A)` in the shared bundle (clones it if shared).
    pub fn prepare(&mut self, dt: f64) -> Result<()> {
        Arc::make_mut(&mut self.bundle).prepare(&[dt])
    }

    /// `f(x, mean, q) = S x + M mean + e q`.
    pub fn drift(&self, x: &Vector, mean: &Vector, q: &Vector) -> Result<Vector> {
        ensure_dim(self.dim(), x.len(), "state")?;
        ensure_dim(self.dim(), mean.len(), "mean")?;
        ensure_dim(self.control_dim(), q.len(), "control")?;
        Ok(&self.drift_self * x + &self.drift_mean * mean + &self.control_map * q)
    }

    /// `A + S + M`, the generator of the mean when controls vanish.
    pub fn mean_generator(&self) -> Matrix {
        &self.bundle.a + &self.drift_self + &self.drift_mean
    }
}

/// Time grid, Monte Carlo size and base seed of a simulation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimConfig {
    pub t0: f64,
    pub horizon: f64,
    pub steps: usize,
    pub paths: usize,
    pub seed: u64,
}

impl SimConfig {
    pub fn new(t0: f64, horizon: f64, steps: usize, paths: usize, seed: u64) -> Result<Self> {
        let cfg = Self {
            t0,
            horizon,
            steps,
            paths,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.t0.is_finite() && self.horizon.is_finite() && 0.0 <= self.t0 && self.t0 < self.horizon) {
            return Err(Error::InvalidParameter(format!(
                "need 0 <= t0 < T, got t0 = {}, T = {}",
                self.t0, self.horizon
            )));
        }
        if self.steps == 0 {
            return Err(Error::InvalidParameter("steps must be >= 1".into()));
        }
        if self.paths == 0 {
            return Err(Error::InvalidParameter("paths must be >= 1".into()));
        }
        Ok(())
    }

    pub fn dt(&self) -> f64 {
        (self.horizon - self.t0) / self.steps as f64
    }

    pub fn time(&self, k: usize) -> f64 {
        if k == self.steps {
            self.horizon
        } else {
            self.t0 + k as f64 * self.dt()
        }
    }

    pub fn with_paths(mut self, paths: usize) -> Self {
        self.paths = paths;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}
