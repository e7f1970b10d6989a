//! Small dense-matrix helpers shared by the channel-space modules.

use nalgebra::DMatrix;
use num_complex::Complex64;

/// Real channel-space matrix (potentials, superpotentials, sigma).
pub type RMatrix = DMatrix<f64>;
/// Complex channel-space matrix (Jost matrices, S-matrices, Jost solutions).
pub type CMatrix = DMatrix<Complex64>;

/// Relative tolerance used for every rank decision.
pub const RANK_TOLERANCE: f64 = 1e-10;

pub fn to_complex(m: &RMatrix) -> CMatrix {
    m.map(|x| Complex64::new(x, 0.0))
}

pub fn complex_diag(values: &[Complex64]) -> CMatrix {
    CMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

pub fn real_diag(values: &[f64]) -> RMatrix {
    RMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(values))
}

/// Largest absolute entry.
pub fn max_abs(m: &RMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

/// Largest entry modulus.
pub fn max_abs_c(m: &CMatrix) -> f64 {
    m.iter().fold(0.0, |acc, x| acc.max(x.norm()))
}

pub fn asymmetry(m: &RMatrix) -> f64 {
    max_abs(&(m - m.transpose()))
}

pub fn asymmetry_c(m: &CMatrix) -> f64 {
    max_abs_c(&(m - m.transpose()))
}

/// Numerical rank from singular values, relative to the largest one.
pub fn numerical_rank(m: &RMatrix, rel_tol: f64) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let sv = m.clone().singular_values();
    let largest = sv.iter().cloned().fold(0.0, f64::max);
    if largest == 0.0 {
        return 0;
    }
    sv.iter().filter(|&&s| s > rel_tol * largest).count()
}

/// Rank of the rows of `m` selected by `rows`, with tolerance relative to the
/// spectral norm of the whole matrix so that tiny rows count as vanishing.
pub fn rows_rank(m: &RMatrix, rows: &[usize], scale: f64, rel_tol: f64) -> usize {
    if rows.is_empty() || scale == 0.0 {
        return 0;
    }
    let sub = RMatrix::from_fn(rows.len(), m.ncols(), |i, j| m[(rows[i], j)]);
    let sv = sub.singular_values();
    sv.iter().filter(|&&s| s > rel_tol * scale).count()
}

pub fn spectral_norm(m: &RMatrix) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().singular_values().iter().cloned().fold(0.0, f64::max)
}

/// Reciprocal-free condition estimate `||A|| * ||A^-1||` in the max-entry norm.
pub fn condition_estimate(m: &CMatrix) -> f64 {
    match m.clone().try_inverse() {
        Some(inv) => max_abs_c(m) * max_abs_c(&inv),
        None => f64::INFINITY,
    }
}

/// `P^T M P` for a channel permutation `perm[new] = old`, i.e. the matrix
/// expressed back in the original channel order.
pub fn unpermute(m: &RMatrix, perm: &[usize]) -> RMatrix {
    let n = perm.len();
    let mut out = RMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            out[(perm[a], perm[b])] = m[(a, b)];
        }
    }
    out
}

/// Inverse of [`unpermute`]: takes a matrix in original channel order into the
/// reordered basis.
pub fn permute(m: &RMatrix, perm: &[usize]) -> RMatrix {
    let n = perm.len();
    RMatrix::from_fn(n, n, |a, b| m[(perm[a], perm[b])])
}

pub fn is_permutation(perm: &[usize], n: usize) -> bool {
    if perm.len() != n {
        return false;
    }
    let mut seen = vec![false; n];
    for &p in perm {
        if p >= n || seen[p] {
            return false;
        }
        seen[p] = true;
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_dependent_rows() {
        let m = RMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert_eq!(numerical_rank(&m, RANK_TOLERANCE), 1);
        assert_eq!(numerical_rank(&RMatrix::zeros(3, 3), RANK_TOLERANCE), 0);
        assert_eq!(numerical_rank(&RMatrix::identity(3, 3), RANK_TOLERANCE), 3);
    }

    #[test]
    fn permute_roundtrip() {
        let m = RMatrix::from_fn(3, 3, |i, j| (3 * i + j) as f64);
        let perm = [2, 0, 1];
        assert_eq!(unpermute(&permute(&m, &perm), &perm), m);
        assert!(is_permutation(&perm, 3));
        assert!(!is_permutation(&[0, 0, 1], 3));
    }
}
