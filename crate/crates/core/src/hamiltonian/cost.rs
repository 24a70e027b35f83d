use std::fmt;
use std::sync::Arc;

use super::policy::ControlCone;
use crate::error::{ensure_dim, Error, Result};
use crate::Vector;

pub type StateFn = Arc<dyn Fn(&[f64], &[f64]) -> f64 + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function of `(x, mean)` used for running and terminal state costs.
///
/// Coefficient vectors act through the plain dot product, so quadrature
/// weights must already be folded into them.
#[derive(Clone)]
pub enum StateCost {
    Zero,
    Constant(f64),
    Affine {
        on_state: Vector,
        on_mean: Vector,
        constant: f64,
    },
    /// Affine part plus `curvature / 2 * <direction, x>^2`.
    Quadratic {
        on_state: Vector,
        on_mean: Vector,
        constant: f64,
        direction: Vector,
        curvature: f64,
    },
    General(StateFn),
}

impl fmt::Debug for StateCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StateCost::Zero => write!(f, "Zero"),
            StateCost::Constant(c) => write!(f, "Constant({c})"),
            StateCost::Affine { constant, .. } => write!(f, "Affine {{ constant: {constant}, .. }}"),
            StateCost::Quadratic { curvature, .. } => write!(f, "Quadratic {{ curvature: {curvature}, .. }}"),
            StateCost::General(_) => write!(f, "General"),
        }
    }
}

fn dot(a: &Vector, x: &[f64]) -> f64 {
    a.iter().zip(x).map(|(a, x)| a * x).sum()
}

impl StateCost {
    pub fn affine(on_state: Vector, on_mean: Vector, constant: f64) -> Self {
        StateCost::Affine {
            on_state,
            on_mean,
            constant,
        }
    }

    pub fn eval(&self, x: &[f64], mean: &[f64]) -> f64 {
        match self {
            StateCost::Zero => 0.0,
            StateCost::Constant(c) => *c,
            StateCost::Affine {
                on_state,
                on_mean,
                constant,
            } => dot(on_state, x) + dot(on_mean, mean) + constant,
            StateCost::Quadratic {
                on_state,
                on_mean,
                constant,
                direction,
                curvature,
            } => {
                let y = dot(direction, x);
                dot(on_state, x) + dot(on_mean, mean) + constant + 0.5 * curvature * y * y
            }
            StateCost::General(f) => f(x, mean),
        }
    }

    /// Gradients with respect to `x` and `mean` when the cost is affine.
    pub fn affine_parts(&self, dim: usize) -> Option<(Vector, Vector, f64)> {
        match self {
            StateCost::Zero => Some((Vector::zeros(dim), Vector::zeros(dim), 0.0)),
            StateCost::Constant(c) => Some((Vector::zeros(dim), Vector::zeros(dim), *c)),
            StateCost::Affine {
                on_state,
                on_mean,
                constant,
            } => Some((on_state.clone(), on_mean.clone(), *constant)),
            StateCost::Quadratic {
                on_state,
                on_mean,
                constant,
                curvature,
                ..
            } if *curvature == 0.0 => Some((on_state.clone(), on_mean.clone(), *constant)),
            _ => None,
        }
    }

    pub(crate) fn check_dim(&self, dim: usize) -> Result<()> {
        match self {
            StateCost::Affine { on_state, on_mean, .. } => {
                ensure_dim(dim, on_state.len(), "state cost coefficients")?;
                ensure_dim(dim, on_mean.len(), "state cost mean coefficients")
            }
            StateCost::Quadratic {
                on_state,
                on_mean,
                direction,
                curvature,
                ..
            } => {
                ensure_dim(dim, on_state.len(), "state cost coefficients")?;
                ensure_dim(dim, on_mean.len(), "state cost mean coefficients")?;
                ensure_dim(dim, direction.len(), "state cost direction")?;
                if !curvature.is_finite() {
                    return Err(Error::InvalidParameter("curvature must be finite".into()));
                }
                Ok(())
            }
            _ => Ok(()),
        }
    }
}

/// Per-channel control cost `c(q)`.
#[derive(Clone)]
pub enum ControlCost {
    /// `weight / 2 * q^2`.
    Quadratic { weight: f64 },
    /// Any convex function with growth constants
    /// `-c1 + c2 q^2 <= f(q) <= c1 + c3 q^2`.
    Convex { f: ScalarFn, c1: f64, c2: f64, c3: f64 },
}

impl fmt::Debug for ControlCost {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ControlCost::Quadratic { weight } => write!(f, "Quadratic {{ weight: {weight} }}"),
            ControlCost::Convex { c1, c2, c3, .. } => {
                write!(f, "Convex {{ c1: {c1}, c2: {c2}, c3: {c3} }}")
            }
        }
    }
}

impl ControlCost {
    pub fn half_square() -> Self {
        ControlCost::Quadratic { weight: 1.0 }
    }

    pub fn eval(&self, q: f64) -> f64 {
        match self {
            ControlCost::Quadratic { weight } => 0.5 * weight * q * q,
            ControlCost::Convex { f, .. } => f(q),
        }
    }

    /// `(C1, C2, C3)`.
    pub fn coercivity(&self) -> (f64, f64, f64) {
        match self {
            ControlCost::Quadratic { weight } => (0.0, 0.5 * weight, 0.5 * weight),
            ControlCost::Convex { c1, c2, c3, .. } => (*c1, *c2, *c3),
        }
    }

    /// Check the recorded growth constants on `[-radius, radius]`.
    pub fn check_coercivity(&self, radius: f64) -> Result<()> {
        let (c1, c2, c3) = self.coercivity();
        if !(c1 >= 0.0 && c2 > 0.0 && c3 > 0.0 && c1.is_finite() && c2.is_finite() && c3.is_finite()) {
            return Err(Error::Coercivity(format!(
                "constants must satisfy C1 >= 0, C2 > 0, C3 > 0 (got {c1}, {c2}, {c3})"
            )));
        }
        if c2 > c3 {
            return Err(Error::Coercivity(format!("C2 = {c2} exceeds C3 = {c3}")));
        }
        if let ControlCost::Convex { .. } = self {
            let samples = 1024;
            let r = radius.max(1.0);
            for i in 0..=samples {
                let q = -r + 2.0 * r * i as f64 / samples as f64;
                let v = self.eval(q);
                let lo = -c1 + c2 * q * q;
                let hi = c1 + c3 * q * q;
                let slack = 1e-12 * (1.0 + hi.abs());
                if !v.is_finite() || v < lo - slack || v > hi + slack {
                    return Err(Error::Coercivity(format!(
                        "cost {v} at q = {q} outside [{lo}, {hi}]"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Full cost specification `l(x, mu, q) = running(x, mean) + sum_j nu_j c(q_j)`
/// and terminal cost `U_T(x, mean)`.
#[derive(Clone, Debug)]
pub struct CostSpec {
    pub running: StateCost,
    pub control: ControlCost,
    /// Quadrature weight `nu_j` of each control channel.
    pub channel_weights: Vector,
    pub terminal: StateCost,
    pub cone: ControlCone,
}

impl CostSpec {
    pub fn new(
        running: StateCost,
        control: ControlCost,
        channel_weights: Vector,
        terminal: StateCost,
        cone: ControlCone,
    ) -> Result<Self> {
        if channel_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::InvalidParameter("channel weights must be > 0".into()));
        }
        control.check_coercivity(1.0)?;
        Ok(Self {
            running,
            control,
            channel_weights,
            terminal,
            cone,
        })
    }

    pub fn control_dim(&self) -> usize {
        self.channel_weights.len()
    }

    pub fn check_dim(&self, dim: usize) -> Result<()> {
        self.running.check_dim(dim)?;
        self.terminal.check_dim(dim)
    }

    pub fn control_cost(&self, q: &[f64]) -> f64 {
        self.channel_weights
            .iter()
            .zip(q)
            .map(|(nu, q)| nu * self.control.eval(*q))
            .sum()
    }

    pub fn running_cost(&self, x: &[f64], mean: &[f64], q: &[f64]) -> f64 {
        self.running.eval(x, mean) + self.control_cost(q)
    }

    pub fn terminal_cost(&self, x: &[f64], mean: &[f64]) -> f64 {
        self.terminal.eval(x, mean)
    }

    /// True when running and terminal state costs are affine.
    pub fn is_affine(&self, dim: usize) -> bool {
        self.running.affine_parts(dim).is_some() && self.terminal.affine_parts(dim).is_some()
    }
}
