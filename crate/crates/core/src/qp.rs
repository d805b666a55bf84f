//! Least-norm conic combinations by a primal active-set method.
//!
//! Solves
//!
//! ```text
//!     minimize   || sum_i z_i c_i ||
//!     subject to z >= 0,  sum_{i in N} z_i = 1
//! ```
//!
//! for columns `c_i` in `R^n` and a nonempty set `N` of normalized indices.
//! With every index normalized this is the minimum-norm point of a convex
//! hull; with only some normalized it is the distance from a polytope to a
//! convex cone, which is the shape of the Rabier subproblem.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, PartialEq)]
pub struct MinNorm {
    pub weights: Vec<f64>,
    /// `|| sum_i weights_i c_i ||`.
    pub value: f64,
    pub iterations: usize,
}

pub fn min_norm_combination(columns: &[Vec<f64>], normalized: &[bool]) -> Result<MinNorm> {
    let k = columns.len();
    if normalized.len() != k {
        return Err(Error::DimensionMismatch {
            expected: k,
            got: normalized.len(),
        });
    }
    if !normalized.iter().any(|&b| b) {
        return Err(Error::InvalidInput("at least one normalized column is required".into()));
    }
    let a: Vec<f64> = normalized.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let gram = DMatrix::from_fn(k, k, |i, j| dot(&columns[i], &columns[j]));
    // Work with the Gram matrix scaled to unit diagonal maximum so the KKT
    // systems below stay well scaled; the weights do not change.
    let scale = (0..k).fold(0.0_f64, |m, i| m.max(gram[(i, i)]));
    let h = if scale > 0.0 { gram / scale } else { gram };
    let dual_tol = 1e-13;
    let zero_tol = 1e-14;

    // Start from the shortest normalized column.
    let start = (0..k)
        .filter(|&i| normalized[i])
        .min_by(|&i, &j| h[(i, i)].total_cmp(&h[(j, j)]))
        .expect("nonempty");
    let mut z = vec![0.0; k];
    z[start] = 1.0;
    let mut free = vec![start];

    let max_iters = 50 * (k + 1);
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let Some((y, eta)) = solve_face(&h, &a, &free) else {
            break;
        };
        if y.iter().all(|&v| v >= -zero_tol) {
            for (idx, &i) in free.iter().enumerate() {
                z[i] = y[idx].max(0.0);
            }
            let hz = mat_vec(&h, &z);
            let entering = (0..k)
                .filter(|i| !free.contains(i))
                .map(|i| (i, hz[i] - eta * a[i]))
                .filter(|&(_, w)| w < -dual_tol)
                .min_by(|p, q| p.1.total_cmp(&q.1));
            match entering {
                Some((i, _)) => free.push(i),
                None => break,
            }
        } else {
            // Move toward y until the first free weight hits zero.
            let mut alpha = 1.0_f64;
            for (idx, &i) in free.iter().enumerate() {
                if y[idx] < 0.0 {
                    let denom = z[i] - y[idx];
                    if denom > 0.0 {
                        alpha = alpha.min(z[i] / denom);
                    }
                }
            }
            for (idx, &i) in free.iter().enumerate() {
                z[i] += alpha * (y[idx] - z[i]);
            }
            free.retain(|&i| z[i] > zero_tol);
            for i in 0..k {
                if !free.contains(&i) {
                    z[i] = 0.0;
                }
            }
            if !free.iter().any(|&i| normalized[i]) {
                free = vec![start];
                z = vec![0.0; k];
                z[start] = 1.0;
            }
        }
    }
    // Renormalize to remove drift in the equality constraint.
    let total: f64 = z.iter().zip(&a).map(|(v, w)| v * w).sum();
    if total > 0.0 {
        z.iter_mut().for_each(|v| *v /= total);
    }
    let value = combination_norm(columns, &z);
    Ok(MinNorm {
        weights: z,
        value,
        iterations,
    })
}

pub(crate) fn combination_norm(columns: &[Vec<f64>], weights: &[f64]) -> f64 {
    let n = columns.first().map_or(0, Vec::len);
    let mut acc = vec![0.0; n];
    for (c, &w) in columns.iter().zip(weights) {
        if w != 0.0 {
            for (a, v) in acc.iter_mut().zip(c) {
                *a += w * v;
            }
        }
    }
    dot(&acc, &acc).sqrt()
}

fn mat_vec(h: &DMatrix<f64>, z: &[f64]) -> Vec<f64> {
    (h * DVector::from_column_slice(z)).as_slice().to_vec()
}

/// Minimizes `z' H z / 2` over the face spanned by `free` subject to `a' z = 1`.
///
/// Returns the face weights and the equality multiplier. Singular faces get the
/// minimum-norm KKT solution.
fn solve_face(h: &DMatrix<f64>, a: &[f64], free: &[usize]) -> Option<(Vec<f64>, f64)> {
    let f = free.len();
    // Rescale to the face so its block is O(1) even when other columns dwarf it.
    let s = free.iter().fold(0.0_f64, |m, &i| m.max(h[(i, i)]));
    let s = if s > 0.0 { s } else { 1.0 };
    let mut kkt = DMatrix::zeros(f + 1, f + 1);
    for (r, &i) in free.iter().enumerate() {
        for (c, &j) in free.iter().enumerate() {
            kkt[(r, c)] = h[(i, j)] / s;
        }
        kkt[(r, f)] = -a[i];
        kkt[(f, r)] = a[i];
    }
    let mut rhs = DVector::zeros(f + 1);
    rhs[f] = 1.0;
    let sol = kkt.svd(true, true).solve(&rhs, 1e-13).ok()?;
    if !sol.iter().all(|v| v.is_finite()) {
        return None;
    }
    let y = sol.rows(0, f).iter().copied().collect();
    Some((y, sol[f] * s))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Exhaustive oracle: on every support, eliminate one normalized weight and
    /// solve the resulting unconstrained least-squares problem; keep
    /// nonnegative solutions and take the best value. By Caratheodory some
    /// optimal support has full-rank columns, so min-norm solves suffice.
    fn brute_force(columns: &[Vec<f64>], normalized: &[bool]) -> f64 {
        let k = columns.len();
        let n = columns[0].len();
        let mut best = f64::INFINITY;
        for mask in 1u32..(1 << k) {
            let support: Vec<usize> = (0..k).filter(|i| mask & (1 << i) != 0).collect();
            let Some(&pivot) = support.iter().find(|&&i| normalized[i]) else {
                continue;
            };
            let others: Vec<usize> = support.iter().copied().filter(|&i| i != pivot).collect();
            let base = DVector::from_column_slice(&columns[pivot]);
            let mut z = vec![0.0; k];
            if others.is_empty() {
                z[pivot] = 1.0;
            } else {
                let b = DMatrix::from_fn(n, others.len(), |r, c| {
                    let i = others[c];
                    let shift = if normalized[i] { columns[pivot][r] } else { 0.0 };
                    columns[i][r] - shift
                });
                let w = b.svd(true, true).solve(&(-&base), 1e-12).unwrap();
                let mut used = 0.0;
                for (c, &i) in others.iter().enumerate() {
                    z[i] = w[c];
                    if normalized[i] {
                        used += w[c];
                    }
                }
                z[pivot] = 1.0 - used;
            }
            if z.iter().all(|&v| v >= -1e-12) {
                best = best.min(combination_norm(columns, &z));
            }
        }
        best
    }

    #[test]
    fn segment_closest_point() {
        // hull of (5,0,0) and (0,5,0): closest point (2.5, 2.5, 0)
        let cols = vec![vec![0.0, 5.0, 0.0], vec![5.0, 0.0, 0.0]];
        let r = min_norm_combination(&cols, &[true, true]).unwrap();
        assert!((r.value - 5.0 * 2f64.sqrt() / 2.0).abs() < 1e-12);
        assert!((r.weights[0] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn cone_cancels_normalized_column() {
        // e1 minus a nonnegative multiple of e1 reaches zero
        let cols = vec![vec![1.0, 0.0], vec![-1.0, 0.0]];
        let r = min_norm_combination(&cols, &[true, false]).unwrap();
        assert!(r.value < 1e-12);
        assert!((r.weights[0] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cone_in_wrong_direction_does_not_help() {
        let cols = vec![vec![1.0, 0.0], vec![1.0, 0.0]];
        let r = min_norm_combination(&cols, &[true, false]).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn origin_in_hull() {
        let cols = vec![vec![1.0, 0.0], vec![-1.0, 1.0], vec![-1.0, -1.0]];
        let r = min_norm_combination(&cols, &[true, true, true]).unwrap();
        assert!(r.value < 1e-10);
    }

    #[test]
    fn long_column_does_not_spoil_short_face() {
        // two collinear short columns cancel; a third is four orders longer
        let cols = vec![vec![0.0, 0.0, 1.0], vec![0.0, 1e-11, -2.0], vec![-2e4, 0.0, 1.0]];
        let r = min_norm_combination(&cols, &[true, true, true]).unwrap();
        assert!(r.value < 1e-10, "{:?}", r);
        assert!((r.weights[0] - 2.0 / 3.0).abs() < 1e-9);
    }

    #[test]
    fn requires_a_normalized_column() {
        assert!(min_norm_combination(&[vec![1.0]], &[false]).is_err());
    }

    proptest! {
        #[test]
        fn matches_support_enumeration(
            cols in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..6),
            mask in prop::collection::vec(any::<bool>(), 6),
        ) {
            let k = cols.len();
            let mut normalized: Vec<bool> = mask[..k].to_vec();
            normalized[0] = true;
            let got = min_norm_combination(&cols, &normalized).unwrap();
            let want = brute_force(&cols, &normalized);
            prop_assert!(got.weights.iter().all(|&w| w >= 0.0));
            let s: f64 = got.weights.iter().zip(&normalized).filter(|p| *p.1).map(|p| p.0).sum();
            prop_assert!((s - 1.0).abs() < 1e-9);
            prop_assert!((got.value - want).abs() <= 1e-7 * (1.0 + want), "got {} want {}", got.value, want);
        }
    }
}
