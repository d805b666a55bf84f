//! Local augmented-Lagrangian solver for polynomial programs
//!
//! ```text
//!     minimize F(x)  subject to  c_i(x) = 0,  h_j(x) >= 0
//! ```
//!
//! using the Powell–Hestenes–Rockafellar penalty for inequalities. Each
//! subproblem is minimized by a regularized Newton method with exact
//! polynomial Hessians; the dimensions here are tiny, so factorizing the full
//! Hessian costs nothing next to the robustness it buys.

use nalgebra::{DMatrix, DVector};

use crate::linalg::{norm, norm_inf};
use crate::poly::{PolyFunction, Polynomial};
use crate::semialg::ConstraintSet;

#[derive(Debug, Clone)]
pub(crate) struct AlOptions {
    pub max_outer: usize,
    pub max_inner: usize,
    pub tol_feasibility: f64,
    pub tol_stationarity: f64,
    pub divergence_cap: f64,
}

impl Default for AlOptions {
    fn default() -> Self {
        AlOptions {
            max_outer: 40,
            max_inner: 200,
            tol_feasibility: 1e-10,
            tol_stationarity: 1e-10,
            divergence_cap: 1e6,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct AlResult {
    pub x: Vec<f64>,
    /// Both feasibility and Lagrangian stationarity met their tolerances.
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) enum AlFailure {
    Diverged { norm: f64 },
}

/// Adds the sphere `||x|| = r` as the scaled equality `(||x||^2 - r^2) / (2r) = 0`.
pub(crate) fn with_sphere(set: &ConstraintSet, radius: Option<f64>) -> ConstraintSet {
    let mut set = set.clone();
    if let Some(r) = radius {
        let sphere = Polynomial::sphere(set.n, r).scale(1.0 / (2.0 * r));
        set.equalities.push(PolyFunction::new(sphere));
    }
    set
}

struct State<'a> {
    objective: &'a PolyFunction,
    obj_scale: f64,
    set: &'a ConstraintSet,
    lambda: Vec<f64>,
    nu: Vec<f64>,
    rho: f64,
}

impl State<'_> {
    fn value(&self, x: &[f64]) -> f64 {
        let mut v = self.obj_scale * self.objective.value(x);
        for (c, &l) in self.set.equalities.iter().zip(&self.lambda) {
            let cv = c.value(x);
            v += l * cv + 0.5 * self.rho * cv * cv;
        }
        for (h, &nu) in self.set.inequalities.iter().zip(&self.nu) {
            let hv = h.value(x);
            let shifted = (nu - self.rho * hv).max(0.0);
            v += (shifted * shifted - nu * nu) / (2.0 * self.rho);
        }
        v
    }

    fn gradient_hessian(&self, x: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let n = x.len();
        let mut g = DVector::from_vec(self.objective.gradient_at(x)) * self.obj_scale;
        let mut h = hess_matrix(self.objective, x) * self.obj_scale;
        for (c, &l) in self.set.equalities.iter().zip(&self.lambda) {
            let cv = c.value(x);
            let dc = DVector::from_vec(c.gradient_at(x));
            let w = l + self.rho * cv;
            g += &dc * w;
            h += hess_matrix(c, x) * w + &dc * dc.transpose() * self.rho;
        }
        for (hj, &nu) in self.set.inequalities.iter().zip(&self.nu) {
            let hv = hj.value(x);
            let shifted = nu - self.rho * hv;
            if shifted > 0.0 {
                let dh = DVector::from_vec(hj.gradient_at(x));
                g -= &dh * shifted;
                h += &dh * dh.transpose() * self.rho - hess_matrix(hj, x) * shifted;
            }
        }
        debug_assert_eq!(g.len(), n);
        (g, h)
    }

    fn violation(&self, x: &[f64]) -> f64 {
        let mut v = 0.0_f64;
        for c in &self.set.equalities {
            v = v.max(c.value(x).abs());
        }
        for (h, &nu) in self.set.inequalities.iter().zip(&self.nu) {
            // complementarity-aware measure: |min(h, nu / rho)|
            v = v.max(h.value(x).min(nu / self.rho).abs());
        }
        v
    }

    fn lagrangian_gradient(&self, x: &[f64]) -> f64 {
        let mut g = DVector::from_vec(self.objective.gradient_at(x)) * self.obj_scale;
        for (c, &l) in self.set.equalities.iter().zip(&self.lambda) {
            g += DVector::from_vec(c.gradient_at(x)) * l;
        }
        for (h, &nu) in self.set.inequalities.iter().zip(&self.nu) {
            g -= DVector::from_vec(h.gradient_at(x)) * nu;
        }
        g.amax()
    }

    /// Regularized Newton with Armijo backtracking on the augmented Lagrangian.
    fn minimize(&self, x0: &[f64], tol: f64, max_iters: usize, cap: f64) -> Result<Vec<f64>, AlFailure> {
        let mut x = x0.to_vec();
        let mut fx = self.value(&x);
        for _ in 0..max_iters {
            let (g, h) = self.gradient_hessian(&x);
            if g.amax() <= tol {
                break;
            }
            let dir = newton_direction(&h, &g);
            let slope = g.dot(&dir);
            let mut t = 1.0;
            let mut moved = false;
            for _ in 0..60 {
                let trial: Vec<f64> = x.iter().zip(dir.iter()).map(|(a, d)| a + t * d).collect();
                let ft = self.value(&trial);
                if ft.is_finite() && ft <= fx + 1e-4 * t * slope {
                    moved = true;
                    x = trial;
                    fx = ft;
                    break;
                }
                t *= 0.5;
            }
            let len = norm(&x);
            if len > cap {
                return Err(AlFailure::Diverged { norm: len });
            }
            if !moved {
                break;
            }
        }
        Ok(x)
    }
}

fn hess_matrix(f: &PolyFunction, x: &[f64]) -> DMatrix<f64> {
    let rows = f.hessian_at(x);
    let n = x.len();
    DMatrix::from_fn(n, n, |i, j| rows[i][j])
}

/// `-(H + delta I)^{-1} g` with the smallest tried shift making the matrix positive definite.
fn newton_direction(h: &DMatrix<f64>, g: &DVector<f64>) -> DVector<f64> {
    let n = h.nrows();
    let scale = h.amax().max(1e-12);
    let mut delta = 0.0;
    for _ in 0..40 {
        let shifted = h + DMatrix::identity(n, n) * delta;
        if let Some(ch) = shifted.cholesky() {
            let d = -ch.solve(g);
            if d.iter().all(|v| v.is_finite()) {
                return d;
            }
        }
        delta = if delta == 0.0 { 1e-10 * scale } else { delta * 10.0 };
    }
    -g / scale
}

/// Minimizes `objective` over `set` (with optional sphere) from `x0`.
pub(crate) fn augmented_lagrangian(
    objective: &PolyFunction,
    set: &ConstraintSet,
    sphere: Option<f64>,
    x0: &[f64],
    opts: &AlOptions,
) -> Result<AlResult, AlFailure> {
    let set = with_sphere(set, sphere);
    let grad0 = norm_inf(&objective.gradient_at(x0));
    let obj_scale = 1.0 / grad0.max(1.0);
    let mut state = State {
        objective,
        obj_scale,
        set: &set,
        lambda: vec![0.0; set.equalities.len()],
        nu: vec![0.0; set.inequalities.len()],
        rho: 10.0,
    };
    let mut x = x0.to_vec();
    let mut prev_violation = f64::INFINITY;
    let mut inner_tol = 1e-3;
    let mut converged = false;
    for _ in 0..opts.max_outer {
        x = state.minimize(&x, inner_tol, opts.max_inner, opts.divergence_cap)?;
        for (c, l) in set.equalities.iter().zip(state.lambda.iter_mut()) {
            *l += state.rho * c.value(&x);
        }
        for (h, nu) in set.inequalities.iter().zip(state.nu.iter_mut()) {
            *nu = (*nu - state.rho * h.value(&x)).max(0.0);
        }
        let violation = state.violation(&x);
        let stationarity = state.lagrangian_gradient(&x);
        if violation <= opts.tol_feasibility && stationarity <= opts.tol_stationarity {
            converged = true;
            break;
        }
        if violation > opts.tol_feasibility && violation > 0.25 * prev_violation && state.rho < 1e12 {
            state.rho *= 10.0;
        }
        prev_violation = violation;
        inner_tol = (inner_tol * 0.1).max(0.1 * opts.tol_stationarity);
    }
    Ok(AlResult { x, converged })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semialg::Problem;

    fn pf(s: &str, n: usize) -> PolyFunction {
        PolyFunction::new(Polynomial::parse(s, n).unwrap())
    }

    fn set(prob: &Problem) -> ConstraintSet {
        prob.constraint_set()
    }

    #[test]
    fn unconstrained_quadratic() {
        let prob = Problem::parse(1, &["(x1 - 3)^2"], &[], &[]).unwrap();
        let r = augmented_lagrangian(&pf("(x1 - 3)^2", 1), &set(&prob), None, &[0.0], &AlOptions::default()).unwrap();
        assert!(r.converged);
        assert!((r.x[0] - 3.0).abs() < 1e-9);
    }

    #[test]
    fn equality_constrained_linear() {
        // min x1 + x2 on the unit circle: (-1,-1)/sqrt2
        let prob = Problem::parse(2, &["x1"], &["x1^2 + x2^2 - 1"], &[]).unwrap();
        let r = augmented_lagrangian(&pf("x1 + x2", 2), &set(&prob), None, &[1.0, 0.2], &AlOptions::default()).unwrap();
        assert!(r.converged);
        let e = -(0.5f64).sqrt();
        assert!((r.x[0] - e).abs() < 1e-8 && (r.x[1] - e).abs() < 1e-8);
    }

    #[test]
    fn inequality_becomes_active() {
        // min (x1 + 1)^2 subject to x1 >= 0
        let prob = Problem::parse(1, &["x1"], &[], &["x1"]).unwrap();
        let r = augmented_lagrangian(&pf("(x1 + 1)^2", 1), &set(&prob), None, &[2.0], &AlOptions::default()).unwrap();
        assert!(r.converged);
        assert!(r.x[0].abs() < 1e-9);
    }

    #[test]
    fn sphere_constraint() {
        // min x3 on the sphere of radius 10: (0, 0, -10)
        let prob = Problem::parse(3, &["x3"], &[], &[]).unwrap();
        let r = augmented_lagrangian(&pf("x3", 3), &set(&prob), Some(10.0), &[1.0, 2.0, 3.0], &AlOptions::default())
            .unwrap();
        assert!(r.converged);
        assert!((r.x[2] + 10.0).abs() < 1e-8);
    }

    #[test]
    fn unbounded_objective_diverges() {
        let prob = Problem::parse(1, &["x1"], &[], &[]).unwrap();
        let r = augmented_lagrangian(&pf("x1", 1), &set(&prob), None, &[0.0], &AlOptions::default());
        assert!(matches!(r, Err(AlFailure::Diverged { .. })));
    }
}
