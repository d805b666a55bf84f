//! Evidence about sequences escaping to infinity in `S`.
//!
//! Traces follow Pareto points of `f` on the slices `S ∩ {||x|| = r}` (or
//! plain feasible rays) along a growing radius schedule. [`classify`] looks
//! for diverging traces whose values converge below `ybar` and reads off the
//! four conditions from the Rabier function, its radius-scaled version,
//! tangency membership, and boundedness of `f`.

use std::cmp::Ordering;
use std::io::Write;

use rand::RngCore;
use serde::{Deserialize, Serialize};

use crate::certificates::{mfcq_probe, rabier_value, tangency_membership};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::extreal;
use crate::linalg::norm;
use crate::nlp::{augmented_lagrangian, AlOptions};
use crate::poly::{PolyFunction, Polynomial};
use crate::rng::{simplex_point, stream};
use crate::semialg::{polish, project_with_restarts, random_start, sample_feasible_ray, validate_radii, Problem};

/// Shown next to every `holds_evidence` status.
pub const EVIDENCE_CAVEAT: &str = "holds_evidence means no witness was found along the sampled traces; \
it is not a proof that the corresponding asymptotic set is empty";

/// Upper reference values `ybar`, each finite or `+inf`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ReferencePoint {
    #[serde(with = "extreal::vec")]
    ybar: Vec<f64>,
}

impl ReferencePoint {
    pub fn new(ybar: Vec<f64>) -> Result<Self> {
        if ybar.is_empty() {
            return Err(Error::InvalidInput("reference point is empty".into()));
        }
        if ybar.iter().any(|v| v.is_nan() || *v == f64::NEG_INFINITY) {
            return Err(Error::InvalidInput(
                "reference point entries must be finite or +inf".into(),
            ));
        }
        Ok(ReferencePoint { ybar })
    }

    /// All components `+inf`.
    pub fn unbounded(p: usize) -> Self {
        ReferencePoint {
            ybar: vec![f64::INFINITY; p],
        }
    }

    pub fn values(&self) -> &[f64] {
        &self.ybar
    }

    pub fn len(&self) -> usize {
        self.ybar.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ybar.is_empty()
    }

    pub fn has_finite(&self) -> bool {
        self.ybar.iter().any(|v| v.is_finite())
    }

    /// `f <= ybar` componentwise, with slack `tol * max(1, |ybar_k|)`.
    pub fn is_below(&self, f: &[f64], tol: f64) -> bool {
        f.iter()
            .zip(&self.ybar)
            .all(|(&v, &y)| !y.is_finite() || v <= y + tol * y.abs().max(1.0))
    }

    pub(crate) fn check(&self, prob: &Problem) -> Result<()> {
        Error::check_dim(prob.p(), self.ybar.len())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub radius: f64,
    pub point: Vec<f64>,
    pub f_value: Vec<f64>,
    pub rabier: f64,
    pub scaled_rabier: f64,
    pub in_tangency: bool,
    pub below_ybar: bool,
}

/// One weighted-sum path through the radius schedule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trace {
    pub weights: Vec<f64>,
    pub records: Vec<TraceRecord>,
    /// Radii whose point was found but not below `ybar`.
    pub filtered_radii: Vec<f64>,
    /// Radii where the slice subproblem did not converge.
    pub failed_radii: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Condition {
    Proper,
    PalaisSmale,
    Cerami,
    MTame,
}

impl Condition {
    pub const ALL: [Condition; 4] = [
        Condition::Proper,
        Condition::PalaisSmale,
        Condition::Cerami,
        Condition::MTame,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Condition::Proper => "proper",
            Condition::PalaisSmale => "palais_smale",
            Condition::Cerami => "cerami",
            Condition::MTame => "m_tame",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    HoldsEvidence,
    FailsWitness,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Limit value `y` of `f` along the trace.
    pub limit: Vec<f64>,
    /// Below-`ybar` records of the diverging trace, by increasing radius.
    pub trace: Vec<TraceRecord>,
    /// Set when the failure was inferred from another condition's witness.
    pub inferred_from: Option<Condition>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub condition: Condition,
    pub status: Status,
    pub witness: Option<Witness>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    /// In the order proper, palais_smale, cerami, m_tame.
    pub verdicts: Vec<Verdict>,
    /// Some trace has at least 4 records spanning three decades of radius.
    pub covered: bool,
    /// Outcome of MFCQ probes at the outermost trace points; `None` when no
    /// probe could run.
    pub mfcq_sampled: Option<bool>,
    pub mfcq_probes: usize,
    pub caveat: String,
}

impl Classification {
    pub fn verdict(&self, c: Condition) -> &Verdict {
        self.verdicts.iter().find(|v| v.condition == c).expect("all conditions present")
    }

    pub fn status(&self, c: Condition) -> Status {
        self.verdict(c).status
    }
}

/// Builds a record at a feasible point; infeasible points are an error.
pub fn trace_record(prob: &Problem, ybar: &ReferencePoint, radius: f64, x: &[f64], cfg: &Config) -> Result<TraceRecord> {
    ybar.check(prob)?;
    let f_value = prob.objective_values(x)?;
    let rabier = rabier_value(prob, x, cfg)?.value;
    let tangency = tangency_membership(prob, x, cfg)?;
    Ok(TraceRecord {
        radius,
        point: x.to_vec(),
        below_ybar: ybar.is_below(&f_value, cfg.tolerances.feasibility),
        f_value,
        rabier,
        scaled_rabier: radius * rabier,
        in_tangency: tangency.member,
    })
}

/// Records along user-supplied points, with radius `||x||`. Infeasible points
/// are skipped.
pub fn trace_points(prob: &Problem, ybar: &ReferencePoint, points: &[Vec<f64>], cfg: &Config) -> Result<Vec<TraceRecord>> {
    let mut out = Vec::new();
    for x in points {
        match trace_record(prob, ybar, norm(x), x, cfg) {
            Ok(rec) => out.push(rec),
            Err(Error::Infeasible { .. }) => log::debug!("skipping infeasible trace point"),
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Feasible rays from `sample_feasible_ray`, one per ray seed.
pub fn ray_traces(prob: &Problem, ybar: &ReferencePoint, radii: &[f64], cfg: &Config) -> Result<Vec<Vec<TraceRecord>>> {
    validate_radii(radii)?;
    let mut out = Vec::new();
    for k in 0..cfg.budgets.rays {
        let seed = stream(cfg.seed, &[0x5259, k as u64]).next_u64();
        let sample = match sample_feasible_ray(prob, radii, seed, cfg) {
            Ok(s) => s,
            Err(Error::AllRadiiFailed) => continue,
            Err(e) => return Err(e),
        };
        let mut recs = Vec::new();
        for p in &sample.points {
            match trace_record(prob, ybar, p.radius, &p.x, cfg) {
                Ok(r) => recs.push(r),
                Err(Error::Infeasible { .. }) => {}
                Err(e) => return Err(e),
            }
        }
        out.push(recs);
    }
    Ok(out)
}

/// Pareto points of `f` on the sphere slices `S ∩ {||x|| = r}`.
///
/// Each of `budgets.weights_per_radius` seeded simplex weights drives one
/// trace: the weighted sum is minimized on every slice by the local
/// augmented-Lagrangian solver, warm-started from the previous radius. When
/// `ybar` has finite components, `f <= ybar` is imposed in the subproblem and
/// records that still end above `ybar` are dropped.
pub fn trace_tangency(
    prob: &Problem,
    ybar: &ReferencePoint,
    radii: &[f64],
    weights_seed: u64,
    cfg: &Config,
) -> Result<Vec<Trace>> {
    validate_radii(radii)?;
    ybar.check(prob)?;
    let set = prob.constraint_set().with_upper_bounds(prob, ybar.values());
    let opts = AlOptions {
        divergence_cap: cfg.budgets.divergence_cap.max(10.0 * radii[radii.len() - 1]),
        tol_feasibility: 0.01 * cfg.tolerances.feasibility,
        ..AlOptions::default()
    };
    let mut traces = Vec::new();
    let mut any = false;
    for w in 0..cfg.budgets.weights_per_radius {
        let mut rng = stream(weights_seed, &[0x5457, w as u64]);
        let weights = simplex_point(prob.p(), &mut rng);
        let objective = weighted_sum(prob, &weights);
        let mut trace = Trace {
            weights,
            records: Vec::new(),
            filtered_radii: Vec::new(),
            failed_radii: Vec::new(),
        };
        let mut prev: Option<(f64, Vec<f64>)> = None;
        for &r in radii {
            let start = match &prev {
                Some((pr, x)) => x.iter().map(|v| v * r / pr).collect(),
                None => random_start(prob.n(), Some(r), cfg.budgets.start_box, &mut rng),
            };
            let Some(x) = solve_on_slice(&objective, &set, r, &start, cfg, &opts, &mut rng) else {
                trace.failed_radii.push(r);
                continue;
            };
            prev = Some((r, x.clone()));
            match trace_record(prob, ybar, r, &x, cfg) {
                Ok(rec) if rec.below_ybar => trace.records.push(rec),
                Ok(_) => trace.filtered_radii.push(r),
                Err(Error::Infeasible { .. }) => trace.failed_radii.push(r),
                Err(e) => return Err(e),
            }
        }
        any |= !trace.records.is_empty();
        traces.push(trace);
    }
    if !any {
        return Err(Error::NoRadiusConverged);
    }
    Ok(traces)
}

pub(crate) fn weighted_sum(prob: &Problem, weights: &[f64]) -> PolyFunction {
    let mut acc = Polynomial::zero(prob.n());
    for (f, &w) in prob.objectives().iter().zip(weights) {
        if w != 0.0 {
            acc = &acc + &f.poly().scale(w);
        }
    }
    PolyFunction::new(acc)
}

fn solve_on_slice(
    objective: &PolyFunction,
    set: &crate::semialg::ConstraintSet,
    r: f64,
    start: &[f64],
    cfg: &Config,
    opts: &AlOptions,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Option<Vec<f64>> {
    let feasible = project_with_restarts(set, Some(r), start, cfg, rng).ok()?;
    let x = match augmented_lagrangian(objective, set, Some(r), &feasible, opts) {
        Ok(res) => res.x,
        Err(_) => return None,
    };
    let polished = polish(set, Some(r), &x, cfg.budgets.projection_max_iters);
    (polished.violation <= cfg.tolerances.feasibility).then_some(polished.point)
}

/// The monotone-decrease slack: values may rise by a relative `1e-6` plus an
/// absolute `1e-3 * tol_limit` between consecutive records.
fn trends_to_zero(values: &[f64], tol_limit: f64) -> bool {
    let Some(&last) = values.last() else {
        return false;
    };
    last <= tol_limit
        && values
            .windows(2)
            .all(|w| w[1] <= w[0] * (1.0 + 1e-6) + 1e-3 * tol_limit)
}

struct Candidate {
    limit: Vec<f64>,
    sub: Vec<TraceRecord>,
    window_start: usize,
}

/// A diverging, `f`-convergent, below-`ybar` subsequence of one trace.
fn candidate(records: &[TraceRecord], cfg: &Config) -> Option<Candidate> {
    let mut sub: Vec<TraceRecord> = records.iter().filter(|r| r.below_ybar).cloned().collect();
    sub.sort_by(|a, b| a.radius.total_cmp(&b.radius));
    if sub.len() < 4 {
        return None;
    }
    let last = sub.last()?;
    if last.radius < 100.0 * sub[0].radius {
        return None;
    }
    let tier = 2.max(sub.len().div_ceil(4));
    let top = &sub[sub.len() - tier..];
    let p = last.f_value.len();
    for k in 0..p {
        let (lo, hi) = top
            .iter()
            .map(|r| r.f_value[k])
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if !(hi - lo <= cfg.tolerances.cluster * last.f_value[k].abs().max(1.0)) {
            return None;
        }
    }
    let cutoff = last.radius / 100.0;
    let window_start = sub.iter().position(|r| r.radius >= cutoff).unwrap_or(0);
    Some(Candidate {
        limit: last.f_value.clone(),
        sub,
        window_start,
    })
}

fn lex_cmp(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

/// Four verdicts from the supplied traces.
///
/// A condition fails when some trace yields a diverging subsequence below
/// `ybar` with convergent `f` that also meets the condition's defining test
/// over the last two decades of radius: nothing more for properness,
/// vanishing Rabier values (Palais–Smale), vanishing scaled values (Cerami),
/// or tangency membership throughout (M-tameness). Otherwise the condition
/// holds on evidence when some trace covers three decades, and is
/// inconclusive when none does.
///
/// MFCQ is probed at the two outermost points of every trace. Failures are
/// then closed under: Cerami ⇒ Palais–Smale; M-tame ⇒ Cerami when the probes
/// all hold; anything with bounded `f` ⇒ properness.
pub fn classify(prob: &Problem, ybar: &ReferencePoint, traces: &[Vec<TraceRecord>], cfg: &Config) -> Result<Classification> {
    ybar.check(prob)?;
    if traces.iter().all(|t| t.is_empty()) {
        return Err(Error::EmptyTraces);
    }
    let covered = traces.iter().any(|t| {
        let lo = t.iter().map(|r| r.radius).fold(f64::INFINITY, f64::min);
        let hi = t.iter().map(|r| r.radius).fold(0.0, f64::max);
        t.len() >= 4 && hi >= 1e3 * lo
    });

    let mut probes = 0;
    let mut all_hold = true;
    for t in traces {
        let mut outer: Vec<&TraceRecord> = t.iter().collect();
        outer.sort_by(|a, b| b.radius.total_cmp(&a.radius));
        for rec in outer.into_iter().take(2) {
            match mfcq_probe(prob, &rec.point, cfg) {
                Ok(rep) => {
                    probes += 1;
                    all_hold &= rep.holds;
                }
                Err(Error::Infeasible { .. }) => {}
                Err(e) => return Err(e),
            }
        }
    }
    let mfcq_sampled = (probes > 0).then_some(all_hold);

    let candidates: Vec<Candidate> = traces.iter().filter_map(|t| candidate(t, cfg)).collect();
    let tol_limit = cfg.tolerances.limit;
    let mut best: [Option<(f64, &Candidate)>; 4] = [None, None, None, None];
    for c in &candidates {
        let window = &c.sub[c.window_start..];
        let last = c.sub.last().expect("nonempty");
        let rabier: Vec<f64> = window.iter().map(|r| r.rabier).collect();
        let scaled: Vec<f64> = window.iter().map(|r| r.scaled_rabier).collect();
        let hits = [
            Some(0.0),
            trends_to_zero(&rabier, tol_limit).then_some(last.rabier),
            trends_to_zero(&scaled, tol_limit).then_some(last.scaled_rabier),
            window.iter().all(|r| r.in_tangency).then_some(0.0),
        ];
        for (slot, hit) in best.iter_mut().zip(hits) {
            let Some(q) = hit else { continue };
            let better = match slot {
                None => true,
                Some((bq, bc)) => match q.total_cmp(bq) {
                    Ordering::Less => true,
                    Ordering::Greater => false,
                    Ordering::Equal => match lex_cmp(&c.limit, &bc.limit) {
                        Ordering::Equal => lex_cmp(&last.point, &bc.sub.last().expect("nonempty").point) == Ordering::Less,
                        o => o == Ordering::Less,
                    },
                },
            };
            if better {
                *slot = Some((q, c));
            }
        }
    }

    let fallback = if covered { Status::HoldsEvidence } else { Status::Inconclusive };
    let mut verdicts: Vec<Verdict> = Condition::ALL
        .iter()
        .zip(&best)
        .map(|(&condition, slot)| match slot {
            Some((_, c)) => Verdict {
                condition,
                status: Status::FailsWitness,
                witness: Some(Witness {
                    limit: c.limit.clone(),
                    trace: c.sub.clone(),
                    inferred_from: None,
                }),
            },
            None => Verdict {
                condition,
                status: fallback,
                witness: None,
            },
        })
        .collect();

    if mfcq_sampled == Some(true) {
        propagate(&mut verdicts, Condition::MTame, Condition::Cerami);
    }
    propagate(&mut verdicts, Condition::Cerami, Condition::PalaisSmale);
    for from in [Condition::PalaisSmale, Condition::Cerami, Condition::MTame] {
        let bounded = verdicts[idx(from)]
            .witness
            .as_ref()
            .is_some_and(|w| w.limit.iter().all(|v| v.is_finite()));
        if bounded {
            propagate(&mut verdicts, from, Condition::Proper);
        }
    }

    Ok(Classification {
        verdicts,
        covered,
        mfcq_sampled,
        mfcq_probes: probes,
        caveat: EVIDENCE_CAVEAT.to_string(),
    })
}

fn idx(c: Condition) -> usize {
    Condition::ALL.iter().position(|&d| d == c).expect("known condition")
}

fn propagate(verdicts: &mut [Verdict], from: Condition, to: Condition) {
    if verdicts[idx(from)].status != Status::FailsWitness || verdicts[idx(to)].status == Status::FailsWitness {
        return;
    }
    let mut witness = verdicts[idx(from)].witness.clone().expect("failure carries a witness");
    witness.inferred_from = Some(witness.inferred_from.unwrap_or(from));
    verdicts[idx(to)] = Verdict {
        condition: to,
        status: Status::FailsWitness,
        witness: Some(witness),
    };
}

/// CSV with columns `radius, x_1..x_n, f_1..f_p, rabier, scaled_rabier, in_tangency, below_ybar`.
pub fn write_trace_csv<W: Write>(records: &[TraceRecord], n: usize, p: usize, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["radius".to_string()];
    header.extend((1..=n).map(|i| format!("x_{}", i)));
    header.extend((1..=p).map(|k| format!("f_{}", k)));
    header.extend(["rabier", "scaled_rabier", "in_tangency", "below_ybar"].map(String::from));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![fmt_num(r.radius)];
        row.extend(r.point.iter().map(|&v| fmt_num(v)));
        row.extend(r.f_value.iter().map(|&v| fmt_num(v)));
        row.push(fmt_num(r.rabier));
        row.push(fmt_num(r.scaled_rabier));
        row.push(r.in_tangency.to_string());
        row.push(r.below_ybar.to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

pub(crate) fn fmt_num(v: f64) -> String {
    if v.is_finite() {
        format!("{:e}", v)
    } else if v > 0.0 {
        "+inf".into()
    } else if v < 0.0 {
        "-inf".into()
    } else {
        "nan".into()
    }
}
