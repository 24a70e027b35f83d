//! Optimal assignment (Hungarian method with potentials, O(n^3)).

use crate::Matrix;

/// Minimum-cost perfect matching on a square cost matrix.
///
/// Returns `perm` with row `i` assigned to column `perm[i]`. Among equal
/// reduced costs the lowest column index wins, so results are deterministic.
pub fn assignment(cost: &Matrix) -> Vec<usize> {
    let n = cost.nrows();
    assert_eq!(n, cost.ncols(), "assignment needs a square cost matrix");
    if n == 0 {
        return Vec::new();
    }
    // 1-based arrays, column 0 is a virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut matched_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        matched_row[0] = i;
        let mut j0 = 0usize;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = matched_row[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[(i0 - 1, j - 1)] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[matched_row[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if matched_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            matched_row[j0] = matched_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[matched_row[j] - 1] = j - 1;
    }
    perm
}

/// Total cost of a permutation, summed in row order.
pub fn assignment_cost(cost: &Matrix, perm: &[usize]) -> f64 {
    perm.iter().enumerate().map(|(i, &j)| cost[(i, j)]).sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_known_instance() {
        let c = Matrix::from_row_slice(3, 3, &[4.0, 1.0, 3.0, 2.0, 0.0, 5.0, 3.0, 2.0, 2.0]);
        let p = assignment(&c);
        assert_eq!(assignment_cost(&c, &p), 5.0);
        assert_eq!(p, vec![1, 0, 2]);
    }

    #[test]
    fn identity_is_optimal_on_zero_diagonal() {
        let c = Matrix::from_fn(5, 5, |i, j| if i == j { 0.0 } else { 1.0 + (i + j) as f64 });
        assert_eq!(assignment(&c), vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn ties_resolve_deterministically() {
        let c = Matrix::from_element(4, 4, 1.0);
        let p1 = assignment(&c);
        let p2 = assignment(&c);
        assert_eq!(p1, p2);
        let mut sorted = p1.clone();
        sorted.sort();
        assert_eq!(sorted, vec![0, 1, 2, 3]);
    }
}
