//! Pointwise certificates at a feasible point: the Rabier function, tangency
//! variety membership, and the Mangasarian–Fromovitz probe.
//!
//! Constraint gradients whose size is negligible next to the objective
//! gradients are treated as zero (see [`crate::linalg::row_space`]). Without
//! that, a point a hair away from a degenerate constraint (one whose gradient
//! vanishes on `S`) would admit unbounded multipliers and a spurious zero
//! Rabier value.

use minilp::{ComparisonOp, OptimizationDirection};
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::extreal;
use crate::linalg::{dot, norm, norm_inf, row_space, scaled};
use crate::qp::min_norm_combination;
use crate::semialg::{ActiveSet, Problem};

/// Fritz–John multipliers `(tau, lambda, nu, mu)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiplierVector {
    pub tau: Vec<f64>,
    pub lambda: Vec<f64>,
    pub nu: Vec<f64>,
    pub mu: f64,
}

impl MultiplierVector {
    /// `sum tau_k grad f_k - sum lambda_i grad g_i - sum nu_j grad h_j - mu x`.
    pub fn residual(&self, prob: &Problem, x: &[f64]) -> Vec<f64> {
        let mut r = vec![0.0; prob.n()];
        let mut acc = |w: f64, v: Vec<f64>| {
            if w != 0.0 {
                r.iter_mut().zip(v).for_each(|(a, b)| *a += w * b);
            }
        };
        for (f, &t) in prob.objectives().iter().zip(&self.tau) {
            acc(t, f.gradient_at(x));
        }
        for (g, &l) in prob.equalities().iter().zip(&self.lambda) {
            acc(-l, g.gradient_at(x));
        }
        for (h, &v) in prob.inequalities().iter().zip(&self.nu) {
            acc(-v, h.gradient_at(x));
        }
        acc(-self.mu, x.to_vec());
        r
    }

    /// `sum tau + sum |lambda| + sum nu + |mu|`.
    pub fn l1_norm(&self) -> f64 {
        self.tau.iter().chain(&self.nu).sum::<f64>()
            + self.lambda.iter().map(|v| v.abs()).sum::<f64>()
            + self.mu.abs()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RabierResult {
    pub value: f64,
    /// Attaining multipliers; `mu` is always zero and `tau` lies on the simplex.
    pub minimizer: MultiplierVector,
    pub active: ActiveSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangencyResult {
    pub member: bool,
    /// Best residual norm over normalized multipliers.
    pub residual: f64,
    /// Threshold the residual was compared against (`tol_membership * scale`).
    pub threshold: f64,
    pub multipliers: MultiplierVector,
    /// `sum tau` of the witness; near zero means no objective weight survives.
    pub objective_weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfcqReport {
    pub holds: bool,
    pub gradient_rank: usize,
    pub num_equalities: usize,
    pub active: ActiveSet,
    /// Unit direction `v` with `<grad g_i, v> = 0` and `<grad h_j, v> > 0`.
    pub witness: Option<Vec<f64>>,
    /// `min_j <grad h_j, v>` over active `j` at the unit witness; `+inf` with no
    /// active inequalities; the LP optimum when no witness exists.
    #[serde(with = "extreal")]
    pub margin: f64,
    /// Optimal `s` of `max s : <grad g_i, v> = 0, <grad h_j, v> >= s, |v|_inf <= 1`.
    #[serde(with = "extreal")]
    pub lp_value: f64,
}

struct PointData {
    f_grads: Vec<Vec<f64>>,
    g_grads: Vec<Vec<f64>>,
    active: ActiveSet,
    h_grads: Vec<Vec<f64>>,
}

fn point_data(prob: &Problem, x: &[f64], cfg: &Config) -> Result<PointData> {
    let t = &cfg.tolerances;
    let rep = prob.check_feasible(x, t.feasibility, t.activity)?;
    if !rep.feasible {
        return Err(Error::Infeasible {
            equality: rep.max_equality_violation,
            inequality: rep.max_inequality_violation,
        });
    }
    let f_grads = prob.objectives().iter().map(|f| f.gradient_at(x)).collect();
    let g_grads = prob.equalities().iter().map(|g| g.gradient_at(x)).collect();
    let h_grads = rep
        .active
        .indices()
        .iter()
        .map(|&j| prob.inequalities()[j].gradient_at(x))
        .collect();
    Ok(PointData {
        f_grads,
        g_grads,
        active: rep.active,
        h_grads,
    })
}

fn objective_scale(f_grads: &[Vec<f64>]) -> f64 {
    f_grads.iter().map(|g| norm(g)).fold(1.0, f64::max)
}

/// The Rabier function
///
/// ```text
/// v(x) = inf || sum tau_k grad f_k(x) - sum lambda_i grad g_i(x) - sum nu_j grad h_j(x) ||
/// ```
///
/// over `tau` on the unit simplex, free `lambda`, and `nu >= 0` supported on
/// the active inequalities.
pub fn rabier_value(prob: &Problem, x: &[f64], cfg: &Config) -> Result<RabierResult> {
    let data = point_data(prob, x, cfg)?;
    let n = prob.n();
    let floor = objective_scale(&data.f_grads);
    let rank_tol = cfg.tolerances.rank;
    let span = row_space(&data.g_grads, n, rank_tol, floor);

    let p = prob.p();
    let mut columns: Vec<Vec<f64>> = data.f_grads.iter().map(|g| span.project_out(g)).collect();
    let mut normalized = vec![true; p];
    // Active inequalities whose projected gradient is negligible carry no multiplier.
    let mut kept = Vec::new();
    for (slot, gh) in data.h_grads.iter().enumerate() {
        let col = span.project_out(gh);
        if norm(&col) > rank_tol * floor {
            columns.push(scaled(&col, -1.0));
            normalized.push(false);
            kept.push(slot);
        }
    }
    let sol = min_norm_combination(&columns, &normalized)?;

    let tau = sol.weights[..p].to_vec();
    let mut nu = vec![0.0; prob.m()];
    for (c, &slot) in kept.iter().enumerate() {
        nu[data.active.indices()[slot]] = sol.weights[p + c];
    }
    // Recover lambda from the combination before projection.
    let mut combo = vec![0.0; n];
    for (k, g) in data.f_grads.iter().enumerate() {
        combo.iter_mut().zip(g).for_each(|(a, b)| *a += tau[k] * b);
    }
    for (slot, gh) in data.h_grads.iter().enumerate() {
        let w = nu[data.active.indices()[slot]];
        combo.iter_mut().zip(gh).for_each(|(a, b)| *a -= w * b);
    }
    let lambda = equality_multipliers(&data.g_grads, &span, &combo);
    let minimizer = MultiplierVector {
        tau,
        lambda,
        nu,
        mu: 0.0,
    };
    let value = norm(&minimizer.residual(prob, x));
    Ok(RabierResult {
        value,
        minimizer,
        active: data.active,
    })
}

/// Least-squares `lambda` with `G' lambda` equal to the row-space part of `combo`.
fn equality_multipliers(g_grads: &[Vec<f64>], span: &crate::linalg::RowSpace, combo: &[f64]) -> Vec<f64> {
    let l = g_grads.len();
    if l == 0 || span.rank == 0 {
        return vec![0.0; l];
    }
    let n = combo.len();
    let target: Vec<f64> = combo
        .iter()
        .zip(span.project_out(combo))
        .map(|(c, perp)| c - perp)
        .collect();
    let gt = nalgebra::DMatrix::from_fn(n, l, |r, c| g_grads[c][r]);
    let svd = gt.svd(true, true);
    let smax = svd.singular_values.iter().fold(0.0_f64, |m, &s| m.max(s));
    let rhs = nalgebra::DVector::from_column_slice(&target);
    match svd.solve(&rhs, smax * 1e-12) {
        Ok(sol) => sol.iter().copied().collect(),
        Err(_) => vec![0.0; l],
    }
}

/// Decides membership in the tangency variety: does a nonzero
/// `(tau, lambda, nu, mu)` with `tau, nu >= 0` and complementarity satisfy
/// `sum tau grad f - sum lambda grad g - sum nu grad h - mu x = 0`?
///
/// Multipliers are normalized by `sum tau + sum |lambda| + sum nu + |mu| = 1`;
/// each sign pattern of `(lambda, mu)` is a min-norm point of a convex hull.
pub fn tangency_membership(prob: &Problem, x: &[f64], cfg: &Config) -> Result<TangencyResult> {
    let data = point_data(prob, x, cfg)?;
    let p = prob.p();
    let l = prob.l();
    let n_active = data.h_grads.len();

    let scale = data
        .f_grads
        .iter()
        .chain(&data.g_grads)
        .chain(&data.h_grads)
        .map(|g| norm(g))
        .fold(1.0_f64.max(norm(x)), f64::max);
    let threshold = cfg.tolerances.membership * scale;

    let mut base: Vec<Vec<f64>> = data.f_grads.clone();
    base.extend(data.h_grads.iter().map(|g| scaled(g, -1.0)));

    let mut best: Option<(f64, Vec<f64>, u64)> = None;
    for pattern in 0u64..(1u64 << (l + 1)) {
        let sign = |bit: usize| if pattern & (1 << bit) != 0 { -1.0 } else { 1.0 };
        let mut columns = base.clone();
        for (i, g) in data.g_grads.iter().enumerate() {
            columns.push(scaled(g, -sign(i)));
        }
        columns.push(scaled(x, -sign(l)));
        let normalized = vec![true; columns.len()];
        let sol = min_norm_combination(&columns, &normalized)?;
        let better = best.as_ref().is_none_or(|(v, _, _)| sol.value < *v);
        if better {
            best = Some((sol.value, sol.weights, pattern));
        }
    }
    let (_, w, pattern) = best.expect("at least one sign pattern");
    let sign = |bit: usize| if pattern & (1 << bit) != 0 { -1.0 } else { 1.0 };
    let tau = w[..p].to_vec();
    let mut nu = vec![0.0; prob.m()];
    for (slot, &j) in data.active.indices().iter().enumerate() {
        nu[j] = w[p + slot];
    }
    let lambda = (0..l).map(|i| sign(i) * w[p + n_active + i]).collect();
    let mu = sign(l) * w[p + n_active + l];
    let multipliers = MultiplierVector { tau, lambda, nu, mu };
    let residual = norm(&multipliers.residual(prob, x));
    let objective_weight: f64 = multipliers.tau.iter().sum();
    let member = residual <= threshold;
    if member && objective_weight <= 1e-9 {
        log::debug!("tangency witness at |x| = {:.3e} carries no objective weight", norm(x));
    }
    Ok(TangencyResult {
        member,
        residual,
        threshold,
        multipliers,
        objective_weight,
    })
}

/// Pointwise Mangasarian–Fromovitz probe.
///
/// The qualification holds when the equality gradients have full numerical
/// rank and the LP `max s` over `|v|_inf <= 1` with `<grad g_i, v> = 0`,
/// `<grad h_j, v> >= s` (active `j`) has optimum above `tol_margin`.
pub fn mfcq_probe(prob: &Problem, x: &[f64], cfg: &Config) -> Result<MfcqReport> {
    let data = point_data(prob, x, cfg)?;
    let n = prob.n();
    let l = prob.l();
    let span = row_space(&data.g_grads, n, cfg.tolerances.rank, 1.0);
    let rank_ok = span.rank == l;

    if data.h_grads.is_empty() {
        return Ok(MfcqReport {
            holds: rank_ok,
            gradient_rank: span.rank,
            num_equalities: l,
            active: data.active,
            witness: None,
            margin: f64::INFINITY,
            lp_value: f64::INFINITY,
        });
    }

    let (lp_value, lp_direction) = margin_lp(&data.g_grads, &data.h_grads, n);
    let holds = rank_ok && lp_value > cfg.tolerances.margin;

    let mut witness = None;
    let mut margin = lp_value;
    if holds {
        // Min-norm point of the projected active gradients (Gordan's alternative).
        let cols: Vec<Vec<f64>> = data.h_grads.iter().map(|g| span.project_out(g)).collect();
        let gordan = min_norm_combination(&cols, &vec![true; cols.len()])?;
        let mut u = vec![0.0; n];
        for (c, &w) in cols.iter().zip(&gordan.weights) {
            u.iter_mut().zip(c).for_each(|(a, b)| *a += w * b);
        }
        let unit_margin = |v: &[f64]| {
            data.h_grads
                .iter()
                .map(|g| dot(g, v))
                .fold(f64::INFINITY, f64::min)
        };
        let candidate = if norm(&u) > 0.0 {
            Some(scaled(&u, 1.0 / norm(&u)))
        } else {
            None
        };
        let chosen = match candidate {
            Some(v) if unit_margin(&v) > 0.0 => v,
            _ => {
                let len = norm(&lp_direction);
                scaled(&lp_direction, 1.0 / len)
            }
        };
        margin = unit_margin(&chosen);
        witness = Some(chosen);
    }

    Ok(MfcqReport {
        holds,
        gradient_rank: span.rank,
        num_equalities: l,
        active: data.active,
        witness,
        margin,
        lp_value,
    })
}

fn margin_lp(g_grads: &[Vec<f64>], h_grads: &[Vec<f64>], n: usize) -> (f64, Vec<f64>) {
    let mut lp = minilp::Problem::new(OptimizationDirection::Maximize);
    let v: Vec<_> = (0..n).map(|_| lp.add_var(0.0, (-1.0, 1.0))).collect();
    let s = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    for g in g_grads {
        let scale = norm_inf(g);
        if scale == 0.0 {
            continue;
        }
        let expr: Vec<_> = g
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (v[i], c / scale))
            .collect();
        lp.add_constraint(expr.as_slice(), ComparisonOp::Eq, 0.0);
    }
    for h in h_grads {
        let mut expr: Vec<_> = h
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(i, c)| (v[i], *c))
            .collect();
        expr.push((s, -1.0));
        lp.add_constraint(expr.as_slice(), ComparisonOp::Ge, 0.0);
    }
    match lp.solve() {
        Ok(sol) => {
            let dir = v.iter().map(|&vi| *sol.var_value(vi)).collect();
            (sol.objective(), dir)
        }
        // v = 0, s = 0 is always feasible and s is bounded by the box.
        Err(e) => {
            log::warn!("margin LP failed: {}", e);
            (0.0, vec![0.0; n])
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    fn cfg() -> Config {
        Config::default()
    }

    #[test]
    fn rabier_on_degenerate_line_grows_linearly() {
        let prob = fixtures::degenerate_line();
        let r = rabier_value(&prob, &[0.0, 0.0, 5.0], &cfg()).unwrap();
        assert!((r.value - 5.0 * 2f64.sqrt() / 2.0).abs() < 1e-9);
        assert!((r.minimizer.tau[0] - 0.5).abs() < 1e-9);
        assert_eq!(r.minimizer.mu, 0.0);
    }

    #[test]
    fn rabier_single_linear_objective_is_gradient_norm() {
        let prob = Problem::parse(3, &["x1"], &[], &[]).unwrap();
        let r = rabier_value(&prob, &[0.3, -2.0, 7.0], &cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rabier_vanishes_at_motzkin_solution() {
        let prob = fixtures::motzkin();
        let r = rabier_value(&prob, &[1.0, 1.0], &cfg()).unwrap();
        assert!(r.value < 1e-12);
        let s: f64 = r.minimizer.tau.iter().sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rabier_uses_active_inequality_cone() {
        // f = -x1 on x1 <= 0 (h = -x1 >= 0), at the boundary: grad f = -e1, grad h = -e1
        let prob = Problem::parse(2, &["-x1"], &[], &["-x1"]).unwrap();
        let r = rabier_value(&prob, &[0.0, 4.0], &cfg()).unwrap();
        assert!(r.value < 1e-12);
        assert!((r.minimizer.nu[0] - 1.0).abs() < 1e-12);
        // interior point: the constraint is inactive
        let r = rabier_value(&prob, &[-1.0, 4.0], &cfg()).unwrap();
        assert!((r.value - 1.0).abs() < 1e-12);
        assert_eq!(r.minimizer.nu[0], 0.0);
    }

    #[test]
    fn rabier_rejects_infeasible_point() {
        let prob = fixtures::motzkin();
        assert!(matches!(rabier_value(&prob, &[-1.0, 0.0], &cfg()), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn tangency_on_degenerate_line() {
        let prob = fixtures::degenerate_line();
        let t = tangency_membership(&prob, &[0.0, 0.0, 7.0], &cfg()).unwrap();
        assert!(t.member);
        assert!((t.multipliers.l1_norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn tangency_at_critical_point() {
        let prob = Problem::parse(3, &["x1^2"], &[], &[]).unwrap();
        let t = tangency_membership(&prob, &[0.0, 0.0, 0.0], &cfg()).unwrap();
        assert!(t.member);
        assert!(t.residual < 1e-12);
    }

    #[test]
    fn tangency_fails_when_gradient_not_radial() {
        // min ||tau e1 - mu e2|| with tau + |mu| = 1 is 1/sqrt(2)
        let prob = Problem::parse(3, &["x1"], &[], &[]).unwrap();
        let t = tangency_membership(&prob, &[0.0, 1.0, 0.0], &cfg()).unwrap();
        assert!(!t.member);
        assert!((t.residual - 0.5f64.sqrt()).abs() < 1e-9);
    }

    #[test]
    fn tangency_holds_for_radial_gradient() {
        let prob = Problem::parse(2, &["x1^2 + x2^2"], &[], &[]).unwrap();
        let t = tangency_membership(&prob, &[3.0, -4.0], &cfg()).unwrap();
        assert!(t.member);
    }

    #[test]
    fn mfcq_holds_on_orthant_boundary() {
        let prob = fixtures::motzkin();
        let r = mfcq_probe(&prob, &[0.0, 3.0], &cfg()).unwrap();
        assert!(r.holds);
        assert_eq!(r.active.indices(), &[0]);
        let w = r.witness.unwrap();
        assert!((w[0] - 1.0).abs() < 1e-12 && w[1].abs() < 1e-12);
        assert!((r.margin - 1.0).abs() < 1e-12);
        assert!((r.lp_value - 1.0).abs() < 1e-9);
    }

    #[test]
    fn mfcq_fails_on_degenerate_line() {
        let prob = fixtures::degenerate_line();
        for t in [3.0, -10.0, 100.0] {
            let r = mfcq_probe(&prob, &[0.0, 0.0, t], &cfg()).unwrap();
            assert!(!r.holds);
            assert!(r.gradient_rank < 2);
            assert!(r.witness.is_none());
        }
    }

    #[test]
    fn mfcq_vacuous_without_constraints() {
        let prob = Problem::parse(2, &["x1"], &[], &[]).unwrap();
        let r = mfcq_probe(&prob, &[1.0, 1.0], &cfg()).unwrap();
        assert!(r.holds && r.gradient_rank == 0 && r.margin == f64::INFINITY);
    }

    #[test]
    fn mfcq_fails_for_opposing_active_constraints() {
        // x1 >= 0 and -x1 >= 0 at x1 = 0: no strictly feasible direction
        let prob = Problem::parse(2, &["x2"], &[], &["x1", "-x1"]).unwrap();
        let r = mfcq_probe(&prob, &[0.0, 2.0], &cfg()).unwrap();
        assert!(!r.holds);
        assert!(r.lp_value.abs() < 1e-12);
    }

    #[test]
    fn mfcq_with_equality_and_inequality() {
        // g = x3, h = x1 + x2 at origin: v = (1,1,0)/sqrt2
        let prob = Problem::parse(3, &["x1"], &["x3"], &["x1 + x2"]).unwrap();
        let r = mfcq_probe(&prob, &[0.0, 0.0, 0.0], &cfg()).unwrap();
        assert!(r.holds);
        let w = r.witness.unwrap();
        assert!(w[2].abs() < 1e-12);
        assert!((r.margin - 2f64.sqrt()).abs() < 1e-9);
    }
}
