//! The feasible set `S = {g_i = 0, h_j >= 0}`: feasibility and activity tests,
//! and Levenberg–Marquardt projection onto `S`, optionally intersected with a
//! sphere `||x|| = r` and with extra constraints such as `f(x) <= ybar`.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::linalg::{norm, solve_damped, solve_marquardt};
use crate::poly::{PolyFunction, Polynomial};
use crate::rng::{gaussian, stream};

/// A constrained vector polynomial optimization instance.
#[derive(Debug, Clone)]
pub struct Problem {
    n: usize,
    objectives: Vec<PolyFunction>,
    equalities: Vec<PolyFunction>,
    inequalities: Vec<PolyFunction>,
}

impl Problem {
    pub fn new(
        n: usize,
        objectives: Vec<Polynomial>,
        equalities: Vec<Polynomial>,
        inequalities: Vec<Polynomial>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("dimension must be positive".into()));
        }
        if objectives.is_empty() {
            return Err(Error::InvalidInput("at least one objective is required".into()));
        }
        for p in objectives.iter().chain(&equalities).chain(&inequalities) {
            Error::check_dim(n, p.num_vars())?;
        }
        let wrap = |v: Vec<Polynomial>| v.into_iter().map(PolyFunction::new).collect();
        Ok(Problem {
            n,
            objectives: wrap(objectives),
            equalities: wrap(equalities),
            inequalities: wrap(inequalities),
        })
    }

    /// Parses every member from expression strings.
    pub fn parse(
        n: usize,
        objectives: &[&str],
        equalities: &[&str],
        inequalities: &[&str],
    ) -> Result<Self> {
        let parse_all = |v: &[&str]| -> Result<Vec<Polynomial>> {
            v.iter()
                .map(|s| Polynomial::parse(s, n).map_err(Error::from))
                .collect()
        };
        Problem::new(
            n,
            parse_all(objectives)?,
            parse_all(equalities)?,
            parse_all(inequalities)?,
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of objectives.
    pub fn p(&self) -> usize {
        self.objectives.len()
    }

    /// Number of equality constraints.
    pub fn l(&self) -> usize {
        self.equalities.len()
    }

    /// Number of inequality constraints.
    pub fn m(&self) -> usize {
        self.inequalities.len()
    }

    pub fn objectives(&self) -> &[PolyFunction] {
        &self.objectives
    }

    pub fn equalities(&self) -> &[PolyFunction] {
        &self.equalities
    }

    pub fn inequalities(&self) -> &[PolyFunction] {
        &self.inequalities
    }

    pub fn objective_values(&self, x: &[f64]) -> Result<Vec<f64>> {
        Error::check_dim(self.n, x.len())?;
        Ok(self.objectives.iter().map(|f| f.value(x)).collect())
    }

    pub fn check_feasible(&self, x: &[f64], tol_feas: f64, tol_active: f64) -> Result<FeasibilityReport> {
        Error::check_dim(self.n, x.len())?;
        let eq = self
            .equalities
            .iter()
            .fold(0.0_f64, |m, g| m.max(g.value(x).abs()));
        let mut ineq = 0.0_f64;
        let mut active = Vec::new();
        for (j, h) in self.inequalities.iter().enumerate() {
            let v = h.value(x);
            ineq = ineq.max((-v).max(0.0));
            if v.abs() <= tol_active {
                active.push(j);
            }
        }
        Ok(FeasibilityReport {
            feasible: eq <= tol_feas && ineq <= tol_feas,
            max_equality_violation: eq,
            max_inequality_violation: ineq,
            active: ActiveSet(active),
        })
    }

    pub(crate) fn constraint_set(&self) -> ConstraintSet {
        ConstraintSet {
            n: self.n,
            equalities: self.equalities.clone(),
            inequalities: self.inequalities.clone(),
        }
    }
}

/// Zero-based indices of active inequalities, sorted and duplicate-free.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActiveSet(Vec<usize>);

impl ActiveSet {
    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn contains(&self, j: usize) -> bool {
        self.0.binary_search(&j).is_ok()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeasibilityReport {
    pub feasible: bool,
    pub max_equality_violation: f64,
    pub max_inequality_violation: f64,
    pub active: ActiveSet,
}

/// Constraint system handed to the projector and the local solvers.
#[derive(Debug, Clone)]
pub(crate) struct ConstraintSet {
    pub n: usize,
    pub equalities: Vec<PolyFunction>,
    pub inequalities: Vec<PolyFunction>,
}

impl ConstraintSet {
    /// Adds `ybar_k - f_k(x) >= 0` for every finite component of `ybar`.
    pub fn with_upper_bounds(mut self, prob: &Problem, ybar: &[f64]) -> Self {
        for (f, &y) in prob.objectives.iter().zip(ybar) {
            if y.is_finite() {
                let c = Polynomial::constant(prob.n, y);
                self.inequalities.push(PolyFunction::new(&c - f.poly()));
            }
        }
        self
    }

    /// Adds `f_k(x) - y_k = 0` for every finite component of `y`.
    pub fn with_values(mut self, prob: &Problem, y: &[f64]) -> Self {
        for (f, &v) in prob.objectives.iter().zip(y) {
            if v.is_finite() {
                let c = Polynomial::constant(prob.n, v);
                self.equalities.push(PolyFunction::new(f.poly() - &c));
            }
        }
        self
    }

    /// Largest violation, counting the sphere residual as `| ||x|| - r | / r`.
    pub fn violation(&self, x: &[f64], sphere: Option<f64>) -> f64 {
        let mut v = 0.0_f64;
        for g in &self.equalities {
            v = v.max(g.value(x).abs());
        }
        for h in &self.inequalities {
            v = v.max((-h.value(x)).max(0.0));
        }
        if let Some(r) = sphere {
            v = v.max((norm(x) - r).abs() / r);
        }
        v
    }

    fn residuals(&self, x: &[f64], sphere: Option<f64>) -> (Vec<f64>, Vec<Vec<f64>>) {
        let mut res = Vec::new();
        let mut jac = Vec::new();
        for g in &self.equalities {
            res.push(g.value(x));
            jac.push(g.gradient_at(x));
        }
        for h in &self.inequalities {
            let v = h.value(x);
            if v < 0.0 {
                res.push(-v);
                jac.push(h.gradient_at(x).iter().map(|d| -d).collect());
            }
        }
        if let Some(r) = sphere {
            let sq: f64 = x.iter().map(|v| v * v).sum();
            res.push((sq - r * r) / (2.0 * r));
            jac.push(x.iter().map(|v| v / r).collect());
        }
        (res, jac)
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Projection {
    pub point: Vec<f64>,
    pub violation: f64,
}

/// Damped Gauss–Newton on the stacked residual `[g; max(0,-h); (||x||^2 - r^2)/(2r)]`.
///
/// Damping is scaled per coordinate, and iteration continues until the
/// residual vanishes or stagnates, so points near constraints whose gradients
/// vanish on `S` keep tightening well past the feasibility tolerance.
pub(crate) fn gauss_newton(set: &ConstraintSet, sphere: Option<f64>, x0: &[f64], max_iters: usize) -> Projection {
    levenberg_marquardt(set, sphere, x0, max_iters, true)
}

/// Restores feasibility of a nearly feasible point while moving it as little
/// as possible: uniform damping first, then the per-coordinate pass on the
/// constraints alone (sphere dropped) for whatever residual is left.
pub(crate) fn polish(set: &ConstraintSet, sphere: Option<f64>, x0: &[f64], max_iters: usize) -> Projection {
    let first = levenberg_marquardt(set, sphere, x0, max_iters, false);
    let mut point = levenberg_marquardt(set, None, &first.point, max_iters, true).point;
    // per-coordinate damping lets weakly coupled coordinates drift; pull back to the sphere
    let mut slack = 0.0;
    if let Some(r) = sphere {
        let len = norm(&point);
        if len > 0.0 && len.is_finite() {
            point.iter_mut().for_each(|v| *v *= r / len);
        }
        // rescaling leaves a sphere residual at roundoff level
        slack = 8.0 * f64::EPSILON * r;
    }
    let violation = set.violation(&point, sphere);
    if violation <= first.violation.max(slack) {
        Projection { point, violation }
    } else {
        first
    }
}

fn levenberg_marquardt(set: &ConstraintSet, sphere: Option<f64>, x0: &[f64], max_iters: usize, per_coordinate: bool) -> Projection {
    let n = set.n;
    let mut x = x0.to_vec();
    let (mut res, mut jac) = set.residuals(&x, sphere);
    let mut cost = 0.5 * res.iter().map(|r| r * r).sum::<f64>();
    let mut mu = 1e-3;
    for _ in 0..max_iters {
        if cost == 0.0 || res.is_empty() {
            break;
        }
        let j = DMatrix::from_fn(res.len(), n, |i, k| jac[i][k]);
        let jtj = j.transpose() * &j;
        let jtr = j.transpose() * DVector::from_column_slice(&res);
        let scale = (0..n).fold(0.0_f64, |m, i| m.max(jtj[(i, i)]));
        if scale == 0.0 || !scale.is_finite() {
            break;
        }
        let mut accepted = false;
        while mu <= 1e12 {
            let step = if per_coordinate {
                solve_marquardt(&jtj, &(-&jtr), mu)
            } else {
                solve_damped(&jtj, &(-&jtr), mu * scale)
            };
            let Some(step) = step else {
                mu *= 4.0;
                continue;
            };
            let trial: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let (r_new, j_new) = set.residuals(&trial, sphere);
            let c_new = 0.5 * r_new.iter().map(|r| r * r).sum::<f64>();
            if c_new.is_finite() && c_new < cost {
                x = trial;
                res = r_new;
                jac = j_new;
                cost = c_new;
                mu = (mu / 3.0).max(1e-16);
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            break;
        }
    }
    let violation = set.violation(&x, sphere);
    Projection { point: x, violation }
}

/// Projection with randomized restarts. Restart points are drawn on the
/// sphere when one is given, else uniformly in `[-box, box]^n`.
pub(crate) fn project_with_restarts(
    set: &ConstraintSet,
    sphere: Option<f64>,
    x0: &[f64],
    cfg: &Config,
    rng: &mut ChaCha8Rng,
) -> std::result::Result<Vec<f64>, f64> {
    let tol = cfg.tolerances.feasibility;
    let iters = cfg.budgets.projection_max_iters;
    let mut best = f64::INFINITY;
    let mut start = x0.to_vec();
    for attempt in 0..=cfg.budgets.restarts {
        if attempt > 0 {
            start = random_start(set.n, sphere, cfg.budgets.start_box, rng);
        }
        let proj = gauss_newton(set, sphere, &start, iters);
        if proj.violation <= tol && proj.point.iter().all(|v| v.is_finite()) {
            return Ok(proj.point);
        }
        if proj.violation < best {
            best = proj.violation;
        }
    }
    Err(best)
}

pub(crate) fn random_start(n: usize, sphere: Option<f64>, half_width: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match sphere {
        Some(r) => {
            let mut v: Vec<f64> = (0..n).map(|_| gaussian(rng)).collect();
            let len = norm(&v).max(1e-300);
            v.iter_mut().for_each(|c| *c *= r / len);
            v
        }
        None => (0..n).map(|_| rng.gen_range(-half_width..=half_width)).collect(),
    }
}

/// A feasible point with `| ||x|| - r | <= tol_feas * r`, found locally from `x0`.
///
/// Failure only means the local search (with restarts) did not converge.
pub fn project_to_sphere_slice(prob: &Problem, radius: f64, x0: &[f64], cfg: &Config) -> Result<Vec<f64>> {
    if !(radius > 0.0) {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    Error::check_dim(prob.n, x0.len())?;
    let mut rng = stream(cfg.seed, &[0x5348, radius.to_bits()]);
    project_with_restarts(&prob.constraint_set(), Some(radius), x0, cfg, &mut rng)
        .map_err(|residual| Error::ProjectionFailed { residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RayPoint {
    pub radius: f64,
    pub x: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RaySample {
    pub points: Vec<RayPoint>,
    /// Radii where projection failed.
    pub omitted: Vec<f64>,
}

/// One feasible point per radius, warm-started along the schedule.
pub fn sample_feasible_ray(prob: &Problem, radii: &[f64], seed: u64, cfg: &Config) -> Result<RaySample> {
    validate_radii(radii)?;
    let set = prob.constraint_set();
    let mut rng = stream(seed, &[0x5241]);
    let mut points = Vec::new();
    let mut omitted = Vec::new();
    let mut prev: Option<RayPoint> = None;
    for &r in radii {
        let start = match &prev {
            Some(p) => p.x.iter().map(|v| v * r / p.radius).collect(),
            None => random_start(prob.n, Some(r), cfg.budgets.start_box, &mut rng),
        };
        match project_with_restarts(&set, Some(r), &start, cfg, &mut rng) {
            Ok(x) => {
                let p = RayPoint { radius: r, x };
                prev = Some(p.clone());
                points.push(p);
            }
            Err(_) => omitted.push(r),
        }
    }
    if points.is_empty() {
        return Err(Error::AllRadiiFailed);
    }
    if !omitted.is_empty() {
        log::debug!("feasible ray omitted {} of {} radii", omitted.len(), radii.len());
    }
    Ok(RaySample { points, omitted })
}

pub(crate) fn validate_radii(radii: &[f64]) -> Result<()> {
    if radii.is_empty() {
        return Err(Error::InvalidInput("radius schedule is empty".into()));
    }
    if radii.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
        return Err(Error::InvalidInput("radii must be positive and finite".into()));
    }
    if radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("radii must be strictly increasing".into()));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn degenerate_line_point_is_feasible_with_active_cube() {
        let prob = fixtures::degenerate_line();
        let rep = prob.check_feasible(&[0.0, 0.0, 9.0], 1e-8, 1e-6).unwrap();
        assert!(rep.feasible);
        assert_eq!(rep.active.indices(), &[0]);
    }

    #[test]
    fn orthant_interior_and_violation() {
        let prob = fixtures::motzkin();
        let rep = prob.check_feasible(&[1.0, 1.0], 1e-8, 1e-6).unwrap();
        assert!(rep.feasible && rep.active.is_empty());
        let rep = prob.check_feasible(&[-1.0, 0.0], 1e-8, 1e-6).unwrap();
        assert!(!rep.feasible);
        assert_eq!(rep.max_inequality_violation, 1.0);
        assert_eq!(rep.active.indices(), &[1]);
    }

    #[test]
    fn check_feasible_rejects_wrong_dimension() {
        let prob = fixtures::motzkin();
        assert!(matches!(
            prob.check_feasible(&[1.0], 1e-8, 1e-6),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn projects_onto_degenerate_line_slice() {
        let prob = fixtures::degenerate_line();
        let cfg = Config::default();
        let x = project_to_sphere_slice(&prob, 5.0, &[0.1, 0.1, 4.0], &cfg).unwrap();
        assert!(x[0].abs() < 1e-4 && x[1].abs() < 1e-4);
        assert!((x[2].abs() - 5.0).abs() < 1e-6);
        assert!(prob.check_feasible(&x, 1e-8, 1e-6).unwrap().feasible);
    }

    #[test]
    fn unconstrained_projection_rescales() {
        let prob = Problem::parse(3, &["x1"], &[], &[]).unwrap();
        let x = project_to_sphere_slice(&prob, 2.0, &[1.0, 0.0, 0.0], &Config::default()).unwrap();
        assert!((x[0] - 2.0).abs() < 1e-8 && x[1] == 0.0 && x[2] == 0.0);
    }

    #[test]
    fn empty_slice_fails_with_residual() {
        let prob = Problem::parse(2, &["x1"], &["x1"], &["x1 - 1"]).unwrap();
        match project_to_sphere_slice(&prob, 3.0, &[1.0, 1.0], &Config::default()) {
            Err(Error::ProjectionFailed { residual }) => assert!(residual > 0.1),
            other => panic!("expected failure, got {:?}", other),
        }
    }

    #[test]
    fn ray_on_degenerate_line() {
        let prob = fixtures::degenerate_line();
        let ray = sample_feasible_ray(&prob, &[10.0, 100.0, 1000.0], 3, &Config::default()).unwrap();
        assert_eq!(ray.points.len(), 3);
        for p in &ray.points {
            assert!(p.x[0].abs() < 1e-4 && p.x[1].abs() < 1e-4);
            assert!((p.x[2].abs() - p.radius).abs() <= 1e-8 * p.radius);
        }
    }

    #[test]
    fn ray_in_free_space_has_exact_norms() {
        let prob = Problem::parse(4, &["x1*x2"], &[], &[]).unwrap();
        let radii = [1.0, 10.0, 100.0];
        let ray = sample_feasible_ray(&prob, &radii, 11, &Config::default()).unwrap();
        for (p, r) in ray.points.iter().zip(radii) {
            assert!((norm(&p.x) - r).abs() <= 1e-10 * r);
        }
    }

    #[test]
    fn ray_on_empty_set_fails() {
        let prob = Problem::parse(2, &["x1"], &["x1"], &["x1 - 1"]).unwrap();
        let mut cfg = Config::default();
        cfg.budgets.restarts = 2;
        assert!(matches!(
            sample_feasible_ray(&prob, &[1.0, 2.0], 0, &cfg),
            Err(Error::AllRadiiFailed)
        ));
    }

    #[test]
    fn radii_must_increase() {
        assert!(validate_radii(&[1.0, 1.0]).is_err());
        assert!(validate_radii(&[0.0, 1.0]).is_err());
        assert!(validate_radii(&[1.0, 2.0]).is_ok());
    }
}
