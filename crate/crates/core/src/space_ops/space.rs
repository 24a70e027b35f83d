use crate::error::{ensure_dim, Error, Result};
use crate::{Matrix, Vector};

/// Which model family a discretized space belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpaceKind {
    /// `R x L^2([-d, 0])`: a pointwise head plus a history segment.
    Delay,
    /// `L^2([0, Theta])`: age-structured capital density.
    Vintage,
    /// Plain `R^k` with the Euclidean inner product.
    Euclid,
}

/// A discretized Hilbert space with a quadrature-weighted inner product.
///
/// Coordinates are laid out as `head_count` pointwise entries followed by
/// one entry per grid node. Head entries carry weight one.
#[derive(Debug, Clone, PartialEq)]
pub struct SpaceSpec {
    pub kind: SpaceKind,
    pub dim: usize,
    pub head_count: usize,
    pub grid: Vec<f64>,
    pub weights: Vec<f64>,
}

fn trapezoid(a: f64, b: f64, m: usize) -> (Vec<f64>, Vec<f64>) {
    let h = (b - a) / (m - 1) as f64;
    let mut grid: Vec<f64> = (0..m).map(|j| a + j as f64 * h).collect();
    grid[m - 1] = b;
    let mut weights = vec![h; m];
    weights[0] = 0.5 * h;
    weights[m - 1] = 0.5 * h;
    (grid, weights)
}

/// Space for the delay reformulation: `x = (x^0, x^1)` with `x^1` sampled on
/// a uniform grid over `[-d, 0]`.
pub fn build_delay_space(d: f64, m: usize) -> Result<SpaceSpec> {
    if !(d.is_finite() && d > 0.0) {
        return Err(Error::InvalidParameter(format!("delay length must be > 0, got {d}")));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("grid needs at least 2 nodes, got {m}")));
    }
    let (grid, weights) = trapezoid(-d, 0.0, m);
    Ok(SpaceSpec {
        kind: SpaceKind::Delay,
        dim: m + 1,
        head_count: 1,
        grid,
        weights,
    })
}

/// Space for the vintage model: a density on `[0, Theta]`.
pub fn build_vintage_space(theta_max: f64, m: usize) -> Result<SpaceSpec> {
    if !(theta_max.is_finite() && theta_max > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "maximal age must be > 0, got {theta_max}"
        )));
    }
    if m < 2 {
        return Err(Error::InvalidParameter(format!("grid needs at least 2 nodes, got {m}")));
    }
    let (grid, weights) = trapezoid(0.0, theta_max, m);
    Ok(SpaceSpec {
        kind: SpaceKind::Vintage,
        dim: m,
        head_count: 0,
        grid,
        weights,
    })
}

/// Plain Euclidean space of dimension `dim` (every coordinate is a head).
pub fn build_euclid_space(dim: usize) -> Result<SpaceSpec> {
    if dim == 0 {
        return Err(Error::InvalidParameter("euclidean dimension must be >= 1".into()));
    }
    Ok(SpaceSpec {
        kind: SpaceKind::Euclid,
        dim,
        head_count: dim,
        grid: Vec::new(),
        weights: Vec::new(),
    })
}

impl SpaceSpec {
    pub fn grid_len(&self) -> usize {
        self.grid.len()
    }

    /// Length of the function-part interval.
    pub fn interval_length(&self) -> f64 {
        match (self.grid.first(), self.grid.last()) {
            (Some(a), Some(b)) => b - a,
            _ => 0.0,
        }
    }

    /// Grid spacing (zero for Euclidean spaces).
    pub fn spacing(&self) -> f64 {
        if self.grid.len() < 2 {
            0.0
        } else {
            self.interval_length() / (self.grid.len() - 1) as f64
        }
    }

    /// Diagonal of the inner-product weight matrix.
    pub fn weight_diag(&self) -> Vector {
        let mut w = Vector::from_element(self.dim, 1.0);
        for (j, wj) in self.weights.iter().enumerate() {
            w[self.head_count + j] = *wj;
        }
        w
    }

    /// Quadrature of a grid function.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        self.weights.iter().zip(values).map(|(w, v)| w * v).sum()
    }

    pub fn check(&self, x: &Vector) -> Result<()> {
        ensure_dim(self.dim, x.len(), "state vector")
    }

    pub fn inner(&self, x: &Vector, y: &Vector) -> Result<f64> {
        self.check(x)?;
        self.check(y)?;
        Ok(self.inner_unchecked(x.as_slice(), y.as_slice()))
    }

    pub(crate) fn inner_unchecked(&self, x: &[f64], y: &[f64]) -> f64 {
        let h = self.head_count;
        let head: f64 = x[..h].iter().zip(&y[..h]).map(|(a, b)| a * b).sum();
        let tail: f64 = self
            .weights
            .iter()
            .zip(x[h..].iter().zip(&y[h..]))
            .map(|(w, (a, b))| w * a * b)
            .sum();
        head + tail
    }

    pub fn norm(&self, x: &Vector) -> Result<f64> {
        Ok(self.inner(x, x)?.sqrt())
    }

    pub(crate) fn norm_slice(&self, x: &[f64]) -> f64 {
        self.inner_unchecked(x, x).sqrt()
    }

    /// Adjoint with respect to the weighted inner product: `W^-1 M^T W`.
    pub fn adjoint(&self, m: &Matrix) -> Matrix {
        let w = self.weight_diag();
        let mut out = m.transpose();
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                out[(i, j)] *= w[j] / w[i];
            }
        }
        out
    }

    /// `W^{1/2} M W^{-1/2}`: maps a weighted-space operator to an operator on
    /// plain `R^dim` with the same spectrum and the same operator norm.
    pub fn to_euclidean(&self, m: &Matrix) -> Matrix {
        let s = self.weight_diag().map(f64::sqrt);
        let mut out = m.clone();
        for i in 0..out.nrows() {
            for j in 0..out.ncols() {
                out[(i, j)] *= s[i] / s[j];
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_node_delay_space() {
        let s = build_delay_space(1.0, 2).unwrap();
        assert_eq!(s.grid, vec![-1.0, 0.0]);
        assert_eq!(s.weights, vec![0.5, 0.5]);
        assert_eq!(s.dim, 3);
        assert_eq!(s.head_count, 1);
    }

    #[test]
    fn weight_sums_match_interval() {
        let s = build_delay_space(2.0, 5).unwrap();
        assert_eq!(s.weights.iter().sum::<f64>(), 2.0);
        let v = build_vintage_space(3.0, 4).unwrap();
        assert_eq!(v.dim, 4);
        assert!((v.weights.iter().sum::<f64>() - 3.0).abs() < 1e-12);
        assert_eq!(build_vintage_space(1.0, 2).unwrap().dim, 2);
    }

    #[test]
    fn quadrature_accuracy() {
        let s = build_delay_space(1.0, 101).unwrap();
        let sq: Vec<f64> = s.grid.iter().map(|x| x * x).collect();
        assert!((s.integrate(&sq) - 1.0 / 3.0).abs() < 1e-3);

        let v = build_vintage_space(1.0, 201).unwrap();
        let ex: Vec<f64> = v.grid.iter().map(|t| t.exp()).collect();
        assert!((v.integrate(&ex) - (std::f64::consts::E - 1.0)).abs() < 1e-4);
    }

    #[test]
    fn affine_functions_integrate_exactly() {
        let s = build_vintage_space(2.5, 17).unwrap();
        let f: Vec<f64> = s.grid.iter().map(|t| 3.0 * t - 1.25).collect();
        let exact = 1.5 * 2.5 * 2.5 - 1.25 * 2.5;
        assert!((s.integrate(&f) - exact).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(build_delay_space(0.0, 5), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_delay_space(1.0, 1), Err(Error::InvalidParameter(_))));
        assert!(matches!(build_vintage_space(-1.0, 5), Err(Error::InvalidParameter(_))));
        assert!(build_euclid_space(0).is_err());
    }

    #[test]
    fn inner_product_dimension_mismatch() {
        let s = build_delay_space(1.0, 3).unwrap();
        let x = Vector::zeros(3);
        let y = Vector::zeros(4);
        assert!(matches!(s.inner(&x, &y), Err(Error::DimensionMismatch { .. })));
    }
}
