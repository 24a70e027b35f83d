//! The advertising-with-delay and vintage-capital applications.

mod advertising;
mod kernel;
mod vintage;

pub use advertising::{build_advertising, AdvertisingParams};
pub use kernel::Kernel;
pub use vintage::{build_vintage, VintageParams};

use crate::dynamics::SystemSpec;
use crate::error::Result;
use crate::hamiltonian::CostSpec;
use crate::space_ops::{build_delay_space, build_vintage_space, GeneratorBundle};
use crate::Vector;

/// Either application, with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Advertising(AdvertisingParams),
    Vintage(VintageParams),
}

impl Model {
    pub fn name(&self) -> &'static str {
        match self {
            Model::Advertising(_) => "advertising",
            Model::Vintage(_) => "vintage",
        }
    }

    pub fn build(&self) -> Result<(SystemSpec, CostSpec, GeneratorBundle)> {
        match self {
            Model::Advertising(p) => p.build(),
            Model::Vintage(p) => p.build(),
        }
    }

    /// Bound `C` with `|output(x)| <= C |x|_-1` for the model's state cost
    /// functional (goodwill head or weighted capital output).
    pub fn output_bound(&self) -> Result<f64> {
        match self {
            Model::Advertising(p) => p.head_bound(),
            Model::Vintage(p) => p.output_bound(),
        }
    }

    /// Plain-coordinate coefficients `c` of the output functional `c . x`
    /// bounded by [`Model::output_bound`].
    pub fn output_functional(&self) -> Result<Vector> {
        match self {
            Model::Advertising(p) => {
                let space = build_delay_space(p.d, p.grid_m)?;
                let mut v = Vector::zeros(space.dim);
                v[0] = 1.0;
                Ok(v)
            }
            Model::Vintage(p) => {
                let eta = p.validate()?;
                let space = build_vintage_space(p.theta_max, p.grid_m)?;
                Ok(Vector::from_fn(space.dim, |j, _| eta[j] * space.weights[j]))
            }
        }
    }
}
