//! Matrix exponential by scaling and squaring with a fixed [13/13] Padé
//! approximant (Higham, "The scaling and squaring method for the matrix
//! exponential revisited", 2005).

use crate::error::{Error, Result};
use crate::Matrix;

const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

const THETA13: f64 = 5.371920351148152;

fn one_norm(m: &Matrix) -> f64 {
    m.column_iter()
        .map(|c| c.iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `exp(M)` for a square matrix.
pub fn expm(m: &Matrix) -> Result<Matrix> {
    let n = m.nrows();
    if n != m.ncols() {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: m.ncols(),
            context: "expm needs a square matrix",
        });
    }
    if m.iter().all(|v| *v == 0.0) {
        return Ok(Matrix::identity(n, n));
    }
    let norm = one_norm(m);
    if !norm.is_finite() {
        return Err(Error::InvalidParameter("expm of a non-finite matrix".into()));
    }
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil().max(0.0) as u32
    } else {
        0
    };
    let a = m / 2f64.powi(squarings as i32);
    let id = Matrix::identity(n, n);
    let b = &PADE13;

    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;

    let u_inner = &a6 * (&a6 * b[13] + &a4 * b[11] + &a2 * b[9]) + &a6 * b[7] + &a4 * b[5] + &a2 * b[3] + &id * b[1];
    let u = &a * u_inner;
    let v = &a6 * (&a6 * b[12] + &a4 * b[10] + &a2 * b[8]) + &a6 * b[6] + &a4 * b[4] + &a2 * b[2] + &id * b[0];

    let p = &v + &u;
    let q = &v - &u;
    let mut r = q
        .lu()
        .solve(&p)
        .ok_or_else(|| Error::Assembly("singular Pade denominator in expm".into()))?;
    for _ in 0..squarings {
        r = &r * &r;
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn taylor(m: &Matrix, terms: usize) -> Matrix {
        let n = m.nrows();
        let mut acc = Matrix::identity(n, n);
        let mut term = Matrix::identity(n, n);
        for k in 1..terms {
            term = &term * m / k as f64;
            acc += &term;
        }
        acc
    }

    #[test]
    fn zero_gives_identity() {
        let z = Matrix::zeros(4, 4);
        assert_eq!(expm(&z).unwrap(), Matrix::identity(4, 4));
    }

    #[test]
    fn matches_taylor_for_small_matrix() {
        let m = Matrix::from_row_slice(3, 3, &[0.1, -0.3, 0.2, 0.05, -0.4, 0.0, 0.3, 0.1, -0.2]);
        let diff = (expm(&m).unwrap() - taylor(&m, 30)).abs().max();
        assert!(diff < 1e-14, "{diff}");
    }

    #[test]
    fn scaled_case_matches_diagonal_exponential() {
        let m = Matrix::from_diagonal(&nalgebra::DVector::from_vec(vec![-40.0, -3.0, 2.0]));
        let e = expm(&m).unwrap();
        for (i, l) in [-40.0f64, -3.0, 2.0].iter().enumerate() {
            assert!((e[(i, i)] - l.exp()).abs() <= 1e-13 * l.exp().max(1.0));
        }
    }

    #[test]
    fn rotation_generator() {
        let t = 2.7f64;
        let m = Matrix::from_row_slice(2, 2, &[0.0, -t, t, 0.0]);
        let e = expm(&m).unwrap();
        let want = Matrix::from_row_slice(2, 2, &[t.cos(), -t.sin(), t.sin(), t.cos()]);
        assert!((e - want).abs().max() < 1e-13);
    }

    #[test]
    fn rejects_non_square() {
        assert!(expm(&Matrix::zeros(2, 3)).is_err());
    }
}
