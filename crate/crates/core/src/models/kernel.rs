use crate::error::{ensure_dim, Error, Result};

/// A scalar function on the grid of a model's function part.
#[derive(Debug, Clone, PartialEq)]
pub enum Kernel {
    Zero,
    Constant(f64),
    /// `scale * (s - a) / (b - a)` on `[a, b]`: vanishes at the left end.
    RampUp { scale: f64 },
    /// `scale * (b - s) / (b - a)` on `[a, b]`: vanishes at the right end.
    RampDown { scale: f64 },
    /// Values at the grid nodes, linearly interpolated in between.
    Table(Vec<f64>),
}

impl Kernel {
    /// Value at `s` for a function on `[a, b]` tabulated on `grid`.
    pub fn eval(&self, s: f64, a: f64, b: f64) -> f64 {
        match self {
            Kernel::Zero => 0.0,
            Kernel::Constant(c) => *c,
            Kernel::RampUp { scale } => scale * (s - a) / (b - a),
            Kernel::RampDown { scale } => scale * (b - s) / (b - a),
            Kernel::Table(v) => {
                let m = v.len();
                if m == 1 {
                    return v[0];
                }
                let u = ((s - a) / (b - a)).clamp(0.0, 1.0) * (m - 1) as f64;
                let j = (u.floor() as usize).min(m - 2);
                let f = u - j as f64;
                (1.0 - f) * v[j] + f * v[j + 1]
            }
        }
    }

    /// Values at the nodes of `grid` (which spans `[a, b]`).
    pub fn values(&self, grid: &[f64]) -> Result<Vec<f64>> {
        if let Kernel::Table(v) = self {
            ensure_dim(grid.len(), v.len(), "kernel table length")?;
            return Ok(v.clone());
        }
        let (a, b) = (grid[0], grid[grid.len() - 1]);
        let mut out: Vec<f64> = grid.iter().map(|&s| self.eval(s, a, b)).collect();
        // exact zeros at the pinned end
        match self {
            Kernel::RampUp { .. } => out[0] = 0.0,
            Kernel::RampDown { .. } => *out.last_mut().unwrap() = 0.0,
            _ => {}
        }
        Ok(out)
    }

    /// Check a sign constraint and a pinned endpoint on the grid.
    pub(crate) fn validate(&self, name: &str, grid: &[f64], sign: f64, pinned: usize) -> Result<Vec<f64>> {
        let v = self.values(grid)?;
        for (j, x) in v.iter().enumerate() {
            if !x.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} is not finite at node {j}")));
            }
            if sign * x < 0.0 {
                let rel = if sign < 0.0 { "<= 0" } else { ">= 0" };
                return Err(Error::Assumption(format!("{name} must be {rel}; got {x} at node {j}")));
            }
        }
        if v[pinned] != 0.0 {
            return Err(Error::Assumption(format!(
                "{name} must vanish at s = {}; got {}",
                grid[pinned], v[pinned]
            )));
        }
        Ok(v)
    }
}
