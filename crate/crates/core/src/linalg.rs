//! Small dense linear algebra on top of nalgebra.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Vector = DVector<f64>;
pub type Matrix = DMatrix<f64>;

/// Relative threshold below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Singular values in decreasing order.
pub fn singular_values(m: &Matrix) -> Vec<f64> {
    if m.nrows() == 0 || m.ncols() == 0 {
        return Vec::new();
    }
    let mut s: Vec<f64> = m.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `sqrt(det(AᵀA))` for an `m × n` matrix with `n ≤ m`, computed as the
/// product of the singular values.
pub fn vol(m: &Matrix) -> Result<f64> {
    if m.ncols() > m.nrows() {
        return Err(Error::precondition(format!(
            "vol needs domain dimension ≤ codomain dimension, got {}×{}",
            m.nrows(),
            m.ncols()
        )));
    }
    if m.ncols() == 0 {
        return Ok(1.0);
    }
    Ok(singular_values(m).iter().product())
}

pub fn is_full_rank(m: &Matrix) -> bool {
    let s = singular_values(m);
    match (s.first(), s.last()) {
        (Some(&hi), Some(&lo)) => hi > 0.0 && lo > RANK_TOL * hi && s.len() == m.ncols().min(m.nrows()),
        _ => false,
    }
}

pub fn spectral_norm(m: &Matrix) -> f64 {
    singular_values(m).first().copied().unwrap_or(0.0)
}

pub fn matrix_from_rows(rows: &[Vec<f64>]) -> Result<Matrix> {
    let nrows = rows.len();
    if nrows == 0 {
        return Err(Error::precondition("matrix has no rows"));
    }
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(Error::precondition("matrix rows have different lengths"));
    }
    if rows.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::precondition("matrix has non-finite entries"));
    }
    Ok(Matrix::from_fn(nrows, ncols, |i, j| rows[i][j]))
}

pub fn matrix_to_rows(m: &Matrix) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn vector_from_slice(v: &[f64]) -> Vector {
    Vector::from_column_slice(v)
}

/// Extends the nonzero vectors in `seed` (assumed independent) to an
/// orthonormal family of `count` vectors in ℝ^dim by Gram–Schmidt against the
/// standard basis, returning only the new vectors.
pub fn orthonormal_complement(seed: &[Vector], dim: usize, count: usize) -> Vec<Vector> {
    let mut basis: Vec<Vector> = Vec::new();
    for s in seed {
        let mut v = s.clone();
        for b in &basis {
            v -= b * b.dot(&v);
        }
        let n = v.norm();
        if n > 1e-12 {
            basis.push(v / n);
        }
    }
    let mut out = Vec::new();
    for k in 0..dim {
        if out.len() == count {
            break;
        }
        let mut v = Vector::zeros(dim);
        v[k] = 1.0;
        for b in basis.iter().chain(out.iter()) {
            v -= b * b.dot(&v);
        }
        for b in basis.iter().chain(out.iter()) {
            v -= b * b.dot(&v);
        }
        let n = v.norm();
        if n > 1e-8 {
            out.push(v / n);
        }
    }
    out
}

/// Orthogonal matrix close to the identity: the Cayley transform of a skew
/// matrix whose spectral norm is `2·tan(angle/2)`, so every rotation angle is
/// at most `angle`.
pub fn cayley_rotation(skew_seed: &Matrix, angle: f64) -> Matrix {
    let n = skew_seed.nrows();
    let mut k = skew_seed - skew_seed.transpose();
    let norm = spectral_norm(&k);
    if norm < 1e-300 || angle == 0.0 {
        return Matrix::identity(n, n);
    }
    k *= 2.0 * (angle / 2.0).tan() / norm;
    let id = Matrix::identity(n, n);
    let lhs = &id - &k * 0.5;
    let rhs = &id + &k * 0.5;
    lhs.lu().solve(&rhs).unwrap_or(id)
}

pub fn determinant(m: &Matrix) -> f64 {
    m.clone().lu().determinant()
}

pub fn inverse(m: &Matrix) -> Result<Matrix> {
    if !is_full_rank(m) || m.nrows() != m.ncols() {
        return Err(Error::precondition("matrix is not invertible"));
    }
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::precondition("matrix is not invertible"))
}

/// Combinations `(i1 < i2 < … < ik)` of `0..n`, in lexicographic order.
pub fn combinations(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    if k > n {
        return out;
    }
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.clone());
        let mut i = k;
        while i > 0 && idx[i - 1] == n - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            return out;
        }
        idx[i - 1] += 1;
        for j in i..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vol_of_diagonal_and_embedding() {
        let d = Matrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 3.0]);
        assert!((vol(&d).unwrap() - 6.0).abs() < 1e-12);
        let e = Matrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 0.5, 0.0, 0.0]);
        assert!((vol(&e).unwrap() - 0.5).abs() < 1e-12);
        assert!(vol(&Matrix::zeros(2, 3)).is_err());
    }

    #[test]
    fn combinations_enumerates_binomial_count() {
        assert_eq!(combinations(5, 2).len(), 10);
        assert_eq!(combinations(4, 4), vec![vec![0, 1, 2, 3]]);
        assert_eq!(combinations(3, 1).len(), 3);
        assert!(combinations(2, 3).is_empty());
    }

    #[test]
    fn cayley_rotation_is_orthogonal_and_small() {
        let seed = Matrix::from_row_slice(3, 3, &[0.1, 0.4, -0.3, 0.2, 0.0, 0.9, -0.5, 0.3, 0.2]);
        let r = cayley_rotation(&seed, 1e-3);
        let should_be_id = r.transpose() * &r;
        assert!((should_be_id - Matrix::identity(3, 3)).norm() < 1e-12);
        assert!(spectral_norm(&(r - Matrix::identity(3, 3))) <= 1e-3 + 1e-12);
    }

    #[test]
    fn complement_is_orthonormal() {
        let u = Vector::from_vec(vec![1.0, 1.0, 0.0]);
        let c = orthonormal_complement(std::slice::from_ref(&u), 3, 2);
        assert_eq!(c.len(), 2);
        for v in &c {
            assert!((v.norm() - 1.0).abs() < 1e-12);
            assert!(v.dot(&u).abs() < 1e-12);
        }
        assert!(c[0].dot(&c[1]).abs() < 1e-12);
    }
}
