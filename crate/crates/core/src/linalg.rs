//! Small dense linear-algebra helpers shared by the design solver, rounding
//! and the least-squares estimators.
//!
//! All norms follow the generalized-inverse convention used throughout the
//! crate: `y^T A^+ y` when `y` lies in the range of `A`, `+inf` otherwise.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

/// Relative residual above which a vector is considered outside the range of
/// a positive semidefinite matrix.
pub const RANGE_TOL: f64 = 1e-8;

/// Eigenvalues below `EIG_REL_TOL * max_eig` are treated as zero.
pub const EIG_REL_TOL: f64 = 1e-12;

/// Weighted second-moment matrix `sum_i w_i x_i x_i^T` over the rows of `rows`.
pub fn weighted_gram(rows: &DMatrix<f64>, weights: &[f64]) -> DMatrix<f64> {
    debug_assert_eq!(rows.nrows(), weights.len());
    let d = rows.ncols();
    let mut a = DMatrix::zeros(d, d);
    for (i, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let x = rows.row(i);
        for r in 0..d {
            let xr = w * x[r];
            if xr == 0.0 {
                continue;
            }
            for c in 0..d {
                a[(r, c)] += xr * x[c];
            }
        }
    }
    a
}

/// Spectral pseudo-inverse of a symmetric positive semidefinite matrix.
#[derive(Clone, Debug)]
pub struct PseudoInverse {
    vectors: DMatrix<f64>,
    /// `1/sigma_i` on the numerical range, `0` on the numerical kernel.
    inv_values: DVector<f64>,
    rank: usize,
}

impl PseudoInverse {
    pub fn new(a: &DMatrix<f64>) -> Self {
        let n = a.nrows();
        if n == 0 {
            return Self {
                vectors: DMatrix::zeros(0, 0),
                inv_values: DVector::zeros(0),
                rank: 0,
            };
        }
        // Symmetrize against round-off before the eigensolver.
        let sym = (a + a.transpose()) * 0.5;
        let eig = SymmetricEigen::new(sym);
        let max_eig = eig.eigenvalues.iter().cloned().fold(0.0_f64, f64::max);
        let cutoff = max_eig * EIG_REL_TOL;
        let mut rank = 0;
        let inv_values = eig.eigenvalues.map(|v| {
            if max_eig > 0.0 && v > cutoff {
                rank += 1;
                1.0 / v
            } else {
                0.0
            }
        });
        Self {
            vectors: eig.eigenvectors,
            inv_values,
            rank,
        }
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn dim(&self) -> usize {
        self.inv_values.len()
    }

    /// `y^T A^+ y`, or `+inf` when `y` is not in the range of `A`.
    pub fn norm_sq(&self, y: &DVector<f64>) -> f64 {
        let y_norm_sq = y.norm_squared();
        if y_norm_sq == 0.0 {
            return 0.0;
        }
        let coeffs = self.vectors.tr_mul(y);
        let mut residual = 0.0;
        let mut value = 0.0;
        for (c, &inv) in coeffs.iter().zip(self.inv_values.iter()) {
            if inv == 0.0 {
                residual += c * c;
            } else {
                value += c * c * inv;
            }
        }
        if residual.sqrt() > RANGE_TOL * y_norm_sq.sqrt() {
            f64::INFINITY
        } else {
            value
        }
    }

    /// `A^+ b`.
    pub fn apply(&self, b: &DVector<f64>) -> DVector<f64> {
        let coeffs = self.vectors.tr_mul(b).component_mul(&self.inv_values);
        &self.vectors * coeffs
    }
}

/// Numerical rank of a (not necessarily square) matrix.
pub fn rank(m: &DMatrix<f64>) -> usize {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0;
    }
    let svd = m.clone().svd(false, false);
    let max_sv = svd.singular_values.iter().cloned().fold(0.0_f64, f64::max);
    if max_sv == 0.0 {
        return 0;
    }
    let tol = max_sv * 1e-10 * (m.nrows().max(m.ncols()) as f64);
    svd.singular_values.iter().filter(|&&s| s > tol).count()
}

/// Stack vectors as the rows of a matrix.
pub fn rows_to_matrix(rows: &[DVector<f64>], ncols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c])
}

/// Stack vectors as the columns of a matrix.
pub fn columns_to_matrix(cols: &[DVector<f64>], nrows: usize) -> DMatrix<f64> {
    DMatrix::from_fn(nrows, cols.len(), |r, c| cols[c][r])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pinv_norm_on_and_off_range() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let p = PseudoInverse::new(&a);
        assert_eq!(p.rank(), 1);
        assert_eq!(p.norm_sq(&DVector::from_vec(vec![1.0, 0.0])), 1.0);
        assert!(p.norm_sq(&DVector::from_vec(vec![0.0, 1.0])).is_infinite());
        assert_eq!(p.norm_sq(&DVector::zeros(2)), 0.0);
    }

    #[test]
    fn pinv_matches_inverse_when_full_rank() {
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 1.0, 3.0]);
        let inv = a.clone().try_inverse().unwrap();
        let p = PseudoInverse::new(&a);
        let y = DVector::from_vec(vec![0.3, -1.2]);
        let expect = (y.transpose() * &inv * &y)[0];
        assert!((p.norm_sq(&y) - expect).abs() < 1e-12);
        let b = DVector::from_vec(vec![1.0, 2.0]);
        assert!((p.apply(&b) - &inv * &b).norm() < 1e-12);
    }

    #[test]
    fn gram_and_rank() {
        let rows = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0]);
        let a = weighted_gram(&rows, &[0.5, 0.5, 0.0]);
        assert_eq!(a, DMatrix::from_row_slice(2, 2, &[0.5, 0.0, 0.0, 0.5]));
        assert_eq!(rank(&rows), 2);
        let flat = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert_eq!(rank(&flat), 1);
    }
}
