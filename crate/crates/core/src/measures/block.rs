//! Block-constant random variables on `(0, 1)`: the lift of an `n`-tuple of
//! states to `L^2((0,1); H)`.

use super::empirical::EmpiricalMeasure;
use crate::error::{ensure_dim, Error, Result};
use crate::space_ops::SpaceSpec;
use crate::{Matrix, Vector};

/// `X = sum_i x_i 1_{((i-1)/n, i/n)}`; column `i` holds the value on block `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockFunction {
    pub values: Matrix,
}

impl BlockFunction {
    pub fn from_matrix(values: Matrix) -> Result<Self> {
        if values.ncols() == 0 {
            return Err(Error::InvalidParameter("block function needs at least one block".into()));
        }
        Ok(Self { values })
    }

    pub fn partition_size(&self) -> usize {
        self.values.ncols()
    }

    pub fn dim(&self) -> usize {
        self.values.nrows()
    }

    /// Lebesgue measure of each block.
    pub fn block_length(&self) -> f64 {
        1.0 / self.partition_size() as f64
    }

    pub fn block(&self, i: usize) -> Vector {
        self.values.column(i).into_owned()
    }

    /// Value at `omega` in `(0, 1)`.
    pub fn eval(&self, omega: f64) -> Vector {
        let n = self.partition_size();
        let i = ((omega * n as f64).floor() as usize).min(n - 1);
        self.block(i)
    }

    /// `int_0^1 phi(X(omega)) d omega`, summed block by block.
    pub fn integrate<F: FnMut(usize, nalgebra::DVectorView<'_, f64>) -> f64>(&self, mut phi: F) -> f64 {
        let len = self.block_length();
        let mut acc = 0.0;
        for (i, col) in self.values.column_iter().enumerate() {
            acc += len * phi(i, col);
        }
        acc
    }

    /// `E[X] = int_0^1 X(omega) d omega`.
    pub fn expectation(&self) -> Vector {
        let len = self.block_length();
        let mut acc = Vector::zeros(self.dim());
        for col in self.values.column_iter() {
            acc.axpy(len, &col, 1.0);
        }
        acc
    }

    /// `||X||_{L^2((0,1); H)}`.
    pub fn l2_norm(&self, space: &SpaceSpec) -> Result<f64> {
        ensure_dim(space.dim, self.dim(), "block function vs space")?;
        let sq = self.integrate(|_, col| {
            let n = space.norm_slice(col.as_slice());
            n * n
        });
        Ok(sq.sqrt())
    }

    /// The same function on a partition `k` times finer.
    pub fn refine(&self, k: usize) -> Self {
        let n = self.partition_size();
        let values = Matrix::from_fn(self.dim(), n * k, |r, c| self.values[(r, c / k)]);
        Self { values }
    }
}

/// Lift `(x_1, ..., x_n)` to the block function `X_n^x`.
pub fn lift(atoms: &[Vector]) -> Result<BlockFunction> {
    let first = atoms
        .first()
        .ok_or_else(|| Error::InvalidParameter("cannot lift an empty atom list".into()))?;
    for a in atoms {
        ensure_dim(first.len(), a.len(), "atom")?;
    }
    BlockFunction::from_matrix(Matrix::from_columns(atoms))
}

/// Law of `X` under Lebesgue measure on `(0, 1)`.
pub fn pushforward(x: &BlockFunction) -> EmpiricalMeasure {
    EmpiricalMeasure::from_columns(&x.values).expect("block functions are never empty")
}

/// Orthogonal projection onto functions constant on the `target` blocks:
/// each target value is the mean of the source blocks it covers.
pub fn block_average(x: &BlockFunction, target: usize) -> Result<BlockFunction> {
    let n = x.partition_size();
    if target == 0 || n % target != 0 {
        return Err(Error::InvalidParameter(format!(
            "partition of size {n} cannot be averaged onto {target} blocks"
        )));
    }
    let k = n / target;
    let mut values = Matrix::zeros(x.dim(), target);
    for t in 0..target {
        let mut acc = Vector::zeros(x.dim());
        for s in 0..k {
            acc += x.values.column(t * k + s);
        }
        values.set_column(t, &(acc / k as f64));
    }
    Ok(BlockFunction { values })
}
