use std::borrow::Cow;
use std::collections::BTreeMap;

use super::expm::expm;
use super::space::{SpaceKind, SpaceSpec};
use crate::error::{ensure_dim, Error, Result};
use crate::{Matrix, Vector};

/// The discretized generator together with everything derived from it.
///
/// Immutable once assembled, apart from [`GeneratorBundle::prepare`], which
/// fills the propagator cache before a simulation starts.
#[derive(Debug, Clone)]
pub struct GeneratorBundle {
    pub space: SpaceSpec,
    pub a: Matrix,
    pub a_inv: Matrix,
    /// `B = (A^-1)^* A^-1`, adjoint taken in the weighted inner product.
    pub b: Matrix,
    pub c0: f64,
    propagators: BTreeMap<u64, Matrix>,
}

/// Assemble the upwind generator for a space.
///
/// * delay: `A x = (-x^0, d/dxi x^1)`, forward differences; the node at
///   `xi = 0` relaxes towards `x^0` over half a cell, which encodes the
///   domain condition `x^1(0) = x^0`.
/// * vintage: `A x = -dx/dtheta - decay x`, backward differences with a
///   zero ghost value at the inflow boundary.
/// * euclid: `A = -decay I`, requires `decay > 0`.
pub fn assemble_generator(space: SpaceSpec, decay: f64) -> Result<GeneratorBundle> {
    if !(decay.is_finite() && decay >= 0.0) {
        return Err(Error::InvalidParameter(format!("decay must be >= 0, got {decay}")));
    }
    let n = space.dim;
    let mut a = Matrix::zeros(n, n);
    match space.kind {
        SpaceKind::Delay => {
            let m = space.grid_len();
            let h = space.spacing();
            a[(0, 0)] = -1.0;
            for j in 0..m - 1 {
                let row = 1 + j;
                a[(row, row)] = -1.0 / h;
                a[(row, row + 1)] = 1.0 / h;
            }
            let last = m;
            a[(last, last)] = -2.0 / h;
            a[(last, 0)] = 2.0 / h;
        }
        SpaceKind::Vintage => {
            let h = space.spacing();
            for j in 0..space.grid_len() {
                a[(j, j)] = -1.0 / h - decay;
                if j > 0 {
                    a[(j, j - 1)] = 1.0 / h;
                }
            }
        }
        SpaceKind::Euclid => {
            if decay <= 0.0 {
                return Err(Error::Assembly(
                    "euclidean generator -decay*I needs decay > 0 to be invertible".into(),
                ));
            }
            a.fill_diagonal(-decay);
        }
    }
    GeneratorBundle::from_matrix(space, a, 0.0)
}

impl GeneratorBundle {
    /// Wrap an arbitrary generator matrix; computes `A^-1` and `B`.
    pub fn from_matrix(space: SpaceSpec, a: Matrix, c0: f64) -> Result<Self> {
        ensure_dim(space.dim, a.nrows(), "generator rows")?;
        ensure_dim(space.dim, a.ncols(), "generator columns")?;
        if !(c0.is_finite() && c0 >= 0.0) {
            return Err(Error::InvalidParameter(format!("c0 must be >= 0, got {c0}")));
        }
        let a_inv = a
            .clone()
            .lu()
            .try_inverse()
            .ok_or_else(|| Error::Assembly("discretized generator is singular".into()))?;
        if !a_inv.iter().all(|v| v.is_finite()) {
            return Err(Error::Assembly("generator inverse is not finite".into()));
        }
        let b = space.adjoint(&a_inv) * &a_inv;
        Ok(Self {
            space,
            a,
            a_inv,
            b,
            c0,
            propagators: BTreeMap::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.space.dim
    }

    /// Cache `exp(dt A)` for each listed step.
    pub fn prepare(&mut self, steps: &[f64]) -> Result<()> {
        for &dt in steps {
            let key = dt.to_bits();
            if !self.propagators.contains_key(&key) {
                let e = self.compute_propagator(dt)?;
                self.propagators.insert(key, e);
            }
        }
        Ok(())
    }

    fn compute_propagator(&self, dt: f64) -> Result<Matrix> {
        if !(dt.is_finite() && dt >= 0.0) {
            return Err(Error::InvalidParameter(format!("time step must be >= 0, got {dt}")));
        }
        expm(&(&self.a * dt))
    }

    /// `exp(dt A)`, from the cache when [`prepare`](Self::prepare) saw `dt`.
    pub fn propagator(&self, dt: f64) -> Result<Cow<'_, Matrix>> {
        match self.propagators.get(&dt.to_bits()) {
            Some(e) => Ok(Cow::Borrowed(e)),
            None => self.compute_propagator(dt).map(Cow::Owned),
        }
    }

    /// `A^*` in the weighted inner product.
    pub fn a_adjoint(&self) -> Matrix {
        self.space.adjoint(&self.a)
    }

    pub fn inner(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.space.inner(x, y)
    }

    pub fn norm(&self, x: &Vector) -> Result<f64> {
        self.space.norm(x)
    }

    /// `|x|_-1 = |A^-1 x|`.
    pub fn dual_norm(&self, x: &Vector) -> Result<f64> {
        self.space.check(x)?;
        Ok(self.dual_norm_slice(x.as_slice()))
    }

    pub(crate) fn dual_norm_slice(&self, x: &[f64]) -> f64 {
        let y = &self.a_inv * nalgebra::DVectorView::from_slice(x, x.len());
        self.space.norm_slice(y.as_slice())
    }

    /// Operator norm of `A^-1` in the weighted norm; bounds `|x|_-1 <= C |x|`.
    pub fn a_inv_norm(&self) -> f64 {
        self.space.to_euclidean(&self.a_inv).singular_values().max()
    }
}
