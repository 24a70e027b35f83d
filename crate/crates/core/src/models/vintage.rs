use std::f64::consts::PI;

use super::kernel::Kernel;
use crate::dynamics::SystemSpec;
use crate::error::{Error, Result};
use crate::hamiltonian::{ControlCone, ControlCost, CostSpec, StateCost};
use crate::space_ops::{assemble_generator, build_vintage_space, GeneratorBundle};
use crate::{Matrix, Vector};

/// Age-structured capital `x(theta)` on `[0, Theta]`:
///
/// `dx = (-dx/dtheta - delta x - delta_bar mean + q) ds + sigma dW`, `x(0) = 0`
///
/// with output `<eta, x>`, running cost `-alpha <eta, x> + int weight q^2 / 2`
/// and terminal cost `-gamma_t <eta, x>`.
#[derive(Debug, Clone, PartialEq)]
pub struct VintageParams {
    pub theta_max: f64,
    pub delta: f64,
    pub delta_bar: f64,
    pub eta: Kernel,
    pub alpha: f64,
    pub gamma_t: f64,
    pub control_weight: f64,
    pub grid_m: usize,
    /// Number of sine modes driven by the common noise.
    pub noise_rank: usize,
    pub noise_scale: f64,
}

impl Default for VintageParams {
    fn default() -> Self {
        Self {
            theta_max: 1.0,
            delta: 0.1,
            delta_bar: 0.05,
            eta: Kernel::RampDown { scale: 1.0 },
            alpha: 1.0,
            gamma_t: 0.5,
            control_weight: 1.0,
            grid_m: 41,
            noise_rank: 2,
            noise_scale: 0.05,
        }
    }
}

impl VintageParams {
    /// Check sign constraints; returns `eta` on the age grid.
    pub fn validate(&self) -> Result<Vec<f64>> {
        for (name, v) in [
            ("theta_max", self.theta_max),
            ("delta", self.delta),
            ("delta_bar", self.delta_bar),
            ("alpha", self.alpha),
            ("gamma_t", self.gamma_t),
            ("control_weight", self.control_weight),
            ("noise_scale", self.noise_scale),
        ] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        let fail = |m: String| Err(Error::Assumption(m));
        if self.theta_max <= 0.0 {
            return fail(format!("maximal age must be > 0, got {}", self.theta_max));
        }
        if self.delta <= 0.0 {
            return fail(format!("depreciation delta must be > 0, got {}", self.delta));
        }
        if self.delta_bar < 0.0 {
            return fail(format!("mean coupling delta_bar must be >= 0, got {}", self.delta_bar));
        }
        if self.control_weight <= 0.0 {
            return fail(format!("control cost weight must be > 0, got {}", self.control_weight));
        }
        if self.noise_rank == 0 {
            return Err(Error::InvalidParameter("noise rank must be >= 1".into()));
        }
        if self.noise_scale < 0.0 {
            return fail(format!("noise scale must be >= 0, got {}", self.noise_scale));
        }
        let space = build_vintage_space(self.theta_max, self.grid_m)?;
        let last = space.grid_len() - 1;
        self.eta.validate("eta", &space.grid, 1.0, last)
    }

    pub fn build(&self) -> Result<(SystemSpec, CostSpec, GeneratorBundle)> {
        build_vintage(self)
    }

    /// `C = |A^* eta|`, so that `|<eta, x>| <= C |x|_-1`.
    pub fn output_bound(&self) -> Result<f64> {
        let eta = Vector::from_vec(self.validate()?);
        let bundle = assemble_generator(build_vintage_space(self.theta_max, self.grid_m)?, self.delta)?;
        bundle.norm(&(bundle.a_adjoint() * eta))
    }
}

pub fn build_vintage(p: &VintageParams) -> Result<(SystemSpec, CostSpec, GeneratorBundle)> {
    let eta = p.validate()?;
    let space = build_vintage_space(p.theta_max, p.grid_m)?;
    let bundle = assemble_generator(space.clone(), p.delta)?;
    let dim = bundle.dim();
    let s = Matrix::zeros(dim, dim);
    let mut m = Matrix::zeros(dim, dim);
    m.fill_diagonal(-p.delta_bar);
    let e = Matrix::identity(dim, dim);
    let norm = (2.0 / p.theta_max).sqrt();
    let sigma = Matrix::from_fn(dim, p.noise_rank, |i, j| {
        let k = (j + 1) as f64;
        norm * (k * PI * space.grid[i] / p.theta_max).sin() * p.noise_scale / k
    });
    let system = SystemSpec::new(bundle.clone(), s, m, e, sigma)?;

    let output = Vector::from_fn(dim, |j, _| eta[j] * space.weights[j]);
    let cost = CostSpec::new(
        StateCost::affine(-p.alpha * &output, Vector::zeros(dim), 0.0),
        ControlCost::Quadratic {
            weight: p.control_weight,
        },
        Vector::from_vec(space.weights.clone()),
        StateCost::affine(-p.gamma_t * &output, Vector::zeros(dim), 0.0),
        ControlCone::Nonnegative,
    )?;
    cost.check_dim(dim)?;
    Ok((system, cost, bundle))
}
