//! Nondominated filtering, weighted-sum solving, section probing, and the
//! combined existence verdict.

use std::cmp::Ordering;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::asymptotics::{
    classify, fmt_num, ray_traces, trace_tangency, weighted_sum, Classification, ReferencePoint, Status,
    TraceRecord,
};
use crate::certificates::{mfcq_probe, rabier_value};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::nlp::{augmented_lagrangian, AlFailure, AlOptions};
use crate::rng::{simplex_point, stream};
use crate::semialg::{gauss_newton, polish, project_with_restarts, random_start, Problem};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DominanceMode {
    /// Drop values dominated by another (`y' <= y`, `y' != y`).
    Pareto,
    /// Drop values strictly dominated in every component.
    WeakPareto,
}

fn dominates(a: &[f64], b: &[f64], mode: DominanceMode) -> bool {
    match mode {
        DominanceMode::Pareto => a.iter().zip(b).all(|(x, y)| x <= y) && a.iter().zip(b).any(|(x, y)| x < y),
        DominanceMode::WeakPareto => a.iter().zip(b).all(|(x, y)| x < y),
    }
}

/// Indices (ascending) of the values not dominated under `mode`. Among exact
/// duplicates only the first occurrence survives.
///
/// Values are swept in lexicographic order; a dominator always precedes what
/// it dominates in that order, so each value is only compared against the
/// survivors so far.
pub fn nondominated_filter(values: &[Vec<f64>], mode: DominanceMode) -> Vec<usize> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&i, &j| lex(&values[i], &values[j]).then(i.cmp(&j)));
    let mut kept: Vec<usize> = Vec::new();
    for i in order {
        let v = &values[i];
        let beaten = kept
            .iter()
            .any(|&k| values[k] == *v || dominates(&values[k], v, mode));
        if !beaten {
            kept.push(i);
        }
    }
    kept.sort_unstable();
    kept
}

fn lex(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(Ordering::Equal) | None => continue,
            Some(o) => return o,
        }
    }
    Ordering::Equal
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveEntry {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub weights: Vec<f64>,
    pub rabier_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoArchive {
    pub mode: DominanceMode,
    pub entries: Vec<ArchiveEntry>,
}

impl ParetoArchive {
    pub fn new(mode: DominanceMode) -> Self {
        ParetoArchive {
            mode,
            entries: Vec::new(),
        }
    }

    /// Adds `entry` and drops whatever became dominated.
    pub fn insert(&mut self, entry: ArchiveEntry) {
        self.entries.push(entry);
        self.refilter();
    }

    fn refilter(&mut self) {
        let values: Vec<Vec<f64>> = self.entries.iter().map(|e| e.f.clone()).collect();
        let keep = nondominated_filter(&values, self.mode);
        let old = std::mem::take(&mut self.entries);
        self.entries = old
            .into_iter()
            .enumerate()
            .filter(|(i, _)| keep.binary_search(i).is_ok())
            .map(|(_, e)| e)
            .collect();
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    /// JSON list of `{x, f, weights, rabier_residual}`.
    pub fn write_json<W: Write>(&self, out: W) -> Result<()> {
        serde_json::to_writer_pretty(out, &self.entries)?;
        Ok(())
    }

    /// CSV with columns `f_1..f_p`.
    pub fn write_front_csv<W: Write>(&self, p: usize, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record((1..=p).map(|k| format!("f_{}", k)))?;
        for e in &self.entries {
            w.write_record(e.f.iter().map(|&v| fmt_num(v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scalarized {
    pub x: Vec<f64>,
    pub f: Vec<f64>,
    pub rabier: f64,
}

/// Local minimizer of `sum_k w_k f_k` over `S` from `start`.
///
/// The point must be feasible and stationary: its Rabier value may not exceed
/// `tol_stationarity`.
pub fn solve_scalarized(prob: &Problem, weights: &[f64], start: &[f64], cfg: &Config) -> Result<Scalarized> {
    Error::check_dim(prob.p(), weights.len())?;
    Error::check_dim(prob.n(), start.len())?;
    let sum: f64 = weights.iter().sum();
    if weights.iter().any(|&w| !(w >= 0.0)) || (sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidInput("weights must lie on the unit simplex".into()));
    }
    if start.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("start point must be finite".into()));
    }
    let objective = weighted_sum(prob, weights);
    let set = prob.constraint_set();
    let opts = AlOptions {
        divergence_cap: cfg.budgets.divergence_cap,
        tol_feasibility: 0.01 * cfg.tolerances.feasibility,
        ..AlOptions::default()
    };
    let res = augmented_lagrangian(&objective, &set, None, start, &opts).map_err(|e| match e {
        AlFailure::Diverged { norm } => Error::Divergence { norm },
    })?;
    if !res.converged {
        log::debug!("augmented Lagrangian hit its iteration budget; polishing anyway");
    }
    let polished = polish(&set, None, &res.x, cfg.budgets.projection_max_iters);
    if polished.violation > cfg.tolerances.feasibility {
        return Err(Error::NonConvergence {
            what: "scalarized solve (feasibility)",
            best: polished.violation,
        });
    }
    let x = polished.point;
    let rabier = match rabier_value(prob, &x, cfg) {
        Ok(r) => r.value,
        Err(Error::Infeasible { equality, inequality }) => {
            return Err(Error::NonConvergence {
                what: "scalarized solve (feasibility)",
                best: equality.max(inequality),
            })
        }
        Err(e) => return Err(e),
    };
    if rabier > cfg.tolerances.stationarity {
        return Err(Error::NonConvergence {
            what: "scalarized solve (stationarity)",
            best: rabier,
        });
    }
    let f = prob.objective_values(&x)?;
    Ok(Scalarized { x, f, rabier })
}

/// Points of the uniform simplex lattice with `grid` points per axis, in
/// lexicographic order of their integer coordinates.
pub fn simplex_lattice(p: usize, grid: usize) -> Vec<Vec<f64>> {
    if p == 1 {
        return vec![vec![1.0]];
    }
    if grid <= 1 {
        return vec![vec![1.0 / p as f64; p]];
    }
    let steps = grid - 1;
    let mut out = Vec::new();
    let mut cur = vec![0usize; p];
    fn rec(k: usize, left: usize, cur: &mut Vec<usize>, steps: usize, out: &mut Vec<Vec<f64>>) {
        let p = cur.len();
        if k == p - 1 {
            cur[k] = left;
            out.push(cur.iter().map(|&c| c as f64 / steps as f64).collect());
            return;
        }
        for c in 0..=left {
            cur[k] = c;
            rec(k + 1, left - c, cur, steps, out);
        }
    }
    rec(0, steps, &mut cur, steps, &mut out);
    out
}

/// Weighted-sum runs over the simplex lattice plus `starts` seeded random
/// weights, each from `starts` seeded start points. Stationary feasible
/// results with `f <= ybar` are merged in (weight, start) order into a
/// Pareto-mode archive.
pub fn solve_front(prob: &Problem, ybar: &ReferencePoint, grid: usize, starts: usize, seed: u64, cfg: &Config) -> Result<ParetoArchive> {
    if grid == 0 {
        return Err(Error::InvalidInput("grid must be at least 1".into()));
    }
    Error::check_dim(prob.p(), ybar.len())?;
    let mut weight_list = simplex_lattice(prob.p(), grid);
    let mut wrng = stream(seed, &[0x5746]);
    if prob.p() > 1 {
        for _ in 0..starts {
            weight_list.push(simplex_point(prob.p(), &mut wrng));
        }
    }
    let mut archive = ParetoArchive::new(DominanceMode::Pareto);
    let mut any = false;
    for (wi, w) in weight_list.iter().enumerate() {
        let mut srng = stream(seed, &[0x5354, wi as u64]);
        for _ in 0..starts.max(1) {
            let start = random_start(prob.n(), None, cfg.budgets.start_box, &mut srng);
            match solve_scalarized(prob, w, &start, cfg) {
                Ok(s) => {
                    if ybar.is_below(&s.f, cfg.tolerances.feasibility) {
                        any = true;
                        archive.insert(ArchiveEntry {
                            x: s.x,
                            f: s.f,
                            weights: w.clone(),
                            rabier_residual: s.rabier,
                        });
                    }
                }
                Err(Error::Divergence { .. } | Error::NonConvergence { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    if !any {
        return Err(Error::AllRunsFailed);
    }
    Ok(archive)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionReport {
    pub bounded_evidence: bool,
    /// `omega` with every sampled section value `>= omega` componentwise.
    pub lower_witness: Option<Vec<f64>>,
    pub samples_checked: usize,
    pub section_points: usize,
    /// A diverging trace below `ybar` along which some `f_k` runs off to `-inf`.
    pub escape_trace: Option<Vec<TraceRecord>>,
}

/// Looks for evidence that `{f(x) : x in S, f(x) <= ybar}` is bounded below.
///
/// Section points come from projecting seeded starts at three scales onto
/// `S ∩ {f <= ybar}`. Escapes come from the sphere-slice traces under the same
/// bounds: a trace escapes when some `f_k` decreases monotonically over its
/// last two decades and ends at least ten times larger in magnitude than where
/// that window began.
pub fn section_probe(prob: &Problem, ybar: &ReferencePoint, budget: usize, seed: u64, cfg: &Config) -> Result<SectionReport> {
    ybar.check(prob)?;
    if !ybar.has_finite() {
        return Err(Error::InvalidInput("section probing needs a finite reference component".into()));
    }
    if budget == 0 {
        return Err(Error::InvalidInput("section budget must be at least 1".into()));
    }
    let set = prob.constraint_set().with_upper_bounds(prob, ybar.values());
    let mut rng = stream(seed, &[0x5345]);
    let mut values: Vec<Vec<f64>> = Vec::new();
    for i in 0..budget {
        let width = cfg.budgets.start_box * 10f64.powi((i % 3) as i32);
        let start = random_start(prob.n(), None, width, &mut rng);
        let Ok(x) = project_with_restarts(&set, None, &start, cfg, &mut rng) else {
            continue;
        };
        let f = prob.objective_values(&x)?;
        if ybar.is_below(&f, cfg.tolerances.feasibility) {
            values.push(f);
        }
    }
    if values.is_empty() {
        return Err(Error::NoSectionPoint);
    }
    let p = prob.p();
    let omega: Vec<f64> = (0..p)
        .map(|k| {
            let lo = values.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min);
            lo - cfg.tolerances.margin * lo.abs().max(1.0)
        })
        .collect();

    let escape_trace = match trace_tangency(prob, ybar, &cfg.schedule.radii(), seed, cfg) {
        Ok(traces) => traces
            .into_iter()
            .map(|t| t.records)
            .find(|recs| escapes(recs)),
        Err(Error::NoRadiusConverged) => None,
        Err(e) => return Err(e),
    };
    Ok(SectionReport {
        bounded_evidence: escape_trace.is_none(),
        lower_witness: Some(omega),
        samples_checked: budget,
        section_points: values.len(),
        escape_trace,
    })
}

fn escapes(records: &[TraceRecord]) -> bool {
    let Some(last) = records.last() else {
        return false;
    };
    if records.len() < 3 {
        return false;
    }
    let start = records
        .iter()
        .position(|r| r.radius >= last.radius / 100.0)
        .unwrap_or(0);
    let window = &records[start..];
    if window.len() < 2 {
        return false;
    }
    (0..last.f_value.len()).any(|k| {
        let first = window[0].f_value[k];
        let end = last.f_value[k];
        window.windows(2).all(|w| w[1].f_value[k] < w[0].f_value[k]) && end.abs() >= 10.0 * first.abs().max(1.0)
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Existence {
    #[serde(rename = "guaranteed (evidence)")]
    GuaranteedEvidence,
    #[serde(rename = "theorem inapplicable")]
    TheoremInapplicable,
    #[serde(rename = "hypothesis unverified")]
    HypothesisUnverified,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MfcqEvidence {
    pub holds: bool,
    pub probes: usize,
    pub failures: usize,
    /// Radius of the first failing probe, if any.
    pub first_failure_radius: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExistenceReport {
    pub existence: Existence,
    /// Hypotheses that failed or could not be confirmed.
    pub reasons: Vec<String>,
    /// `ybar` matched by some feasible `f(x)` within `value_match`; `None`
    /// when every component is `+inf`.
    pub ybar_attained: Option<bool>,
    pub mfcq: MfcqEvidence,
    pub section: Option<SectionReport>,
    pub classification: Classification,
    pub archive: Option<ParetoArchive>,
    pub archive_error: Option<String>,
}

/// Locates a feasible `x` with `f(x) = ybar` on the finite components.
fn ybar_attained(prob: &Problem, ybar: &ReferencePoint, cfg: &Config) -> bool {
    let set = prob.constraint_set().with_values(prob, ybar.values());
    let mut rng = stream(cfg.seed, &[0x5941]);
    for i in 0..cfg.budgets.section_samples {
        let width = cfg.budgets.start_box * 10f64.powi((i % 3) as i32);
        let start = random_start(prob.n(), None, width, &mut rng);
        let proj = gauss_newton(&set, None, &start, cfg.budgets.projection_max_iters);
        let x = &proj.point;
        let Ok(rep) = prob.check_feasible(x, cfg.tolerances.feasibility, cfg.tolerances.activity) else {
            continue;
        };
        let Ok(f) = prob.objective_values(x) else { continue };
        let close = f
            .iter()
            .zip(ybar.values())
            .all(|(&v, &y)| !y.is_finite() || (v - y).abs() <= cfg.tolerances.value_match);
        if rep.feasible && close {
            return true;
        }
    }
    false
}

/// Combines sampled MFCQ at large radii, section boundedness, and the
/// condition verdicts into an existence report, with a weighted-sum archive
/// attached either way.
pub fn existence_verdict(prob: &Problem, ybar: &ReferencePoint, cfg: &Config) -> Result<ExistenceReport> {
    cfg.validate()?;
    ybar.check(prob)?;
    let radii = cfg.schedule.radii();
    let mut reasons = Vec::new();

    let attained = ybar.has_finite().then(|| ybar_attained(prob, ybar, cfg));
    match attained {
        Some(false) => reasons.push(format!(
            "ybar not located in f(S) within {:e}",
            cfg.tolerances.value_match
        )),
        None => reasons.push("ybar has no finite component".to_string()),
        Some(true) => {}
    }

    let mut traces: Vec<Vec<TraceRecord>> = match trace_tangency(prob, ybar, &radii, cfg.seed, cfg) {
        Ok(ts) => ts.into_iter().map(|t| t.records).collect(),
        Err(Error::NoRadiusConverged) => Vec::new(),
        Err(e) => return Err(e),
    };
    traces.extend(ray_traces(prob, ybar, &radii, cfg)?);
    traces.retain(|t| !t.is_empty());

    // MFCQ at the points of the outer half of the schedule.
    let cutoff = radii[radii.len() / 2];
    let mut mfcq = MfcqEvidence {
        holds: true,
        probes: 0,
        failures: 0,
        first_failure_radius: None,
    };
    for rec in traces.iter().flatten().filter(|r| r.radius >= cutoff) {
        match mfcq_probe(prob, &rec.point, cfg) {
            Ok(rep) => {
                mfcq.probes += 1;
                if !rep.holds {
                    mfcq.failures += 1;
                    mfcq.holds = false;
                    mfcq.first_failure_radius.get_or_insert(rec.radius);
                }
            }
            Err(Error::Infeasible { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    if mfcq.probes == 0 {
        mfcq.holds = false;
        reasons.push("no point available for MFCQ probing".to_string());
    } else if !mfcq.holds {
        reasons.push(format!("MFCQ fails at {} of {} sampled points", mfcq.failures, mfcq.probes));
    }

    let section = if ybar.has_finite() {
        match section_probe(prob, ybar, cfg.budgets.section_samples, cfg.seed, cfg) {
            Ok(s) => {
                if !s.bounded_evidence {
                    reasons.push("section is unbounded along an escape trace".to_string());
                }
                Some(s)
            }
            Err(Error::NoSectionPoint) => {
                reasons.push("no section point found".to_string());
                None
            }
            Err(e) => return Err(e),
        }
    } else {
        None
    };

    if traces.is_empty() {
        return Err(Error::EmptyTraces);
    }
    let classification = classify(prob, ybar, &traces, cfg)?;
    let any_holds = classification.verdicts.iter().any(|v| v.status == Status::HoldsEvidence);
    let all_fail = classification.verdicts.iter().all(|v| v.status == Status::FailsWitness);
    for v in &classification.verdicts {
        if v.status == Status::FailsWitness {
            reasons.push(format!("{} fails with a witness", v.condition.name()));
        }
    }
    if !any_holds && !all_fail {
        reasons.push("no condition holds on the sampled evidence".to_string());
    }

    let section_unbounded = section.as_ref().is_some_and(|s| !s.bounded_evidence);
    let existence = if (mfcq.probes > 0 && !mfcq.holds) || section_unbounded || all_fail {
        Existence::TheoremInapplicable
    } else if attained == Some(true) && mfcq.holds && section.as_ref().is_some_and(|s| s.bounded_evidence) && any_holds {
        Existence::GuaranteedEvidence
    } else {
        Existence::HypothesisUnverified
    };
    if existence == Existence::GuaranteedEvidence {
        // Condition failures do not matter once one condition holds.
        reasons.clear();
    }

    let (archive, archive_error) = match solve_front(prob, ybar, cfg.budgets.grid, cfg.budgets.starts, cfg.seed, cfg) {
        Ok(a) => (Some(a), None),
        Err(e @ Error::AllRunsFailed) => (None, Some(e.to_string())),
        Err(e) => return Err(e),
    };
    Ok(ExistenceReport {
        existence,
        reasons,
        ybar_attained: attained,
        mfcq,
        section,
        classification,
        archive,
        archive_error,
    })
}
