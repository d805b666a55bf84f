//! Dense helpers over `nalgebra` used by the solvers and certificates.

use nalgebra::{DMatrix, DVector};

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn norm_inf(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, v| m.max(v.abs()))
}

pub(crate) fn scaled(a: &[f64], s: f64) -> Vec<f64> {
    a.iter().map(|v| v * s).collect()
}

/// Row-major list of vectors as an `rows x n` matrix.
pub(crate) fn matrix_from_rows(rows: &[Vec<f64>], n: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows.len(), n, |i, j| rows[i][j])
}

/// Singular values above `rel_tol * max(sigma_max, floor)` are counted.
///
/// The floor keeps uniformly tiny gradients (as at degenerate constraint
/// points) from being promoted to full rank by a purely relative test.
pub(crate) fn rank_threshold(sigma_max: f64, rel_tol: f64, floor: f64) -> f64 {
    rel_tol * sigma_max.max(floor)
}

pub struct RowSpace {
    pub rank: usize,
    /// Orthonormal basis of the numerical row space, one vector per column.
    pub basis: DMatrix<f64>,
}

/// Numerical row space of `rows` (each of length `n`).
pub fn row_space(rows: &[Vec<f64>], n: usize, rel_tol: f64, floor: f64) -> RowSpace {
    if rows.is_empty() {
        return RowSpace {
            rank: 0,
            basis: DMatrix::zeros(n, 0),
        };
    }
    // SVD of the transpose: left singular vectors span the row space in R^n.
    let a = matrix_from_rows(rows, n).transpose();
    let svd = a.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");
    let sigma_max = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let threshold = rank_threshold(sigma_max, rel_tol, floor);
    let keep: Vec<usize> = (0..svd.singular_values.len())
        .filter(|&i| svd.singular_values[i] > threshold)
        .collect();
    let mut basis = DMatrix::zeros(n, keep.len());
    for (c, &i) in keep.iter().enumerate() {
        basis.set_column(c, &u.column(i));
    }
    RowSpace {
        rank: keep.len(),
        basis,
    }
}

impl RowSpace {
    /// Component of `v` orthogonal to the row space.
    pub fn project_out(&self, v: &[f64]) -> Vec<f64> {
        let v = DVector::from_column_slice(v);
        if self.rank == 0 {
            return v.as_slice().to_vec();
        }
        let coeffs = self.basis.transpose() * &v;
        let r = v - &self.basis * coeffs;
        r.as_slice().to_vec()
    }
}

/// Solves `(A + damping * I) x = b` for symmetric positive semidefinite `A`.
pub(crate) fn solve_damped(a: &DMatrix<f64>, b: &DVector<f64>, damping: f64) -> Option<DVector<f64>> {
    let n = a.nrows();
    let m = a + DMatrix::identity(n, n) * damping;
    if let Some(ch) = m.clone().cholesky() {
        let x = ch.solve(b);
        if x.iter().all(|v| v.is_finite()) {
            return Some(x);
        }
    }
    let x = m.svd(true, true).solve(b, 1e-14).ok()?;
    x.iter().all(|v| v.is_finite()).then_some(x)
}

/// Solves `(A + mu * D) x = b` with `D = diag(max(A_ii, 1e-200 * max_i A_ii))`.
///
/// Scaling the damping by each diagonal entry keeps directions with tiny
/// curvature (residuals whose gradients vanish at the solution) from being
/// frozen by damping sized for the stiff directions.
pub(crate) fn solve_marquardt(a: &DMatrix<f64>, b: &DVector<f64>, mu: f64) -> Option<DVector<f64>> {
    let n = a.nrows();
    let top = (0..n).fold(0.0_f64, |m, i| m.max(a[(i, i)]));
    let mut m = a.clone();
    for i in 0..n {
        m[(i, i)] += mu * a[(i, i)].max(1e-200 * top);
    }
    solve_damped(&m, b, 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_of_dependent_rows() {
        let rows = vec![vec![1.0, 2.0, 0.0], vec![2.0, 4.0, 0.0], vec![0.0, 0.0, 1.0]];
        assert_eq!(row_space(&rows, 3, 1e-10, 1.0).rank, 2);
    }

    #[test]
    fn floor_suppresses_tiny_rows() {
        let rows = vec![vec![1e-30, 0.0], vec![0.0, 2e-30]];
        assert_eq!(row_space(&rows, 2, 1e-10, 1.0).rank, 0);
        assert_eq!(row_space(&rows, 2, 1e-10, 0.0).rank, 2);
    }

    #[test]
    fn projection_removes_row_space_component() {
        let rs = row_space(&[vec![1.0, 1.0, 0.0]], 3, 1e-10, 1.0);
        let p = rs.project_out(&[2.0, 0.0, 5.0]);
        assert!((p[0] - 1.0).abs() < 1e-12 && (p[1] + 1.0).abs() < 1e-12);
        assert!((p[2] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn damped_solve_handles_singular_matrix() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        let b = DVector::from_column_slice(&[2.0, 2.0]);
        let x = solve_damped(&a, &b, 0.0).unwrap();
        assert!(((&a * &x) - &b).norm() < 1e-10);
    }
}
