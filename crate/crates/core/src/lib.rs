//! Analysis of constrained vector polynomial optimization problems
//!
//! ```text
//!     Min_{R^p_+} { f(x) : g_i(x) = 0, h_j(x) >= 0 }
//! ```
//!
//! The crate computes pointwise certificates (the Rabier function, tangency
//! variety membership, Mangasarian–Fromovitz qualification), gathers
//! sphere-tracking evidence about the asymptotic sets that decide the
//! Palais–Smale, Cerami, M-tameness, and properness conditions, and produces
//! Pareto solutions by weighted-sum scalarization.

pub mod asymptotics;
pub mod certificates;
pub mod config;
pub mod error;
pub mod extreal;
pub mod fixtures;
pub mod linalg;
pub mod nlp;
pub mod pareto;
pub mod poly;
pub mod qp;
mod rng;
pub mod semialg;

pub use asymptotics::{classify, trace_tangency, Condition, ReferencePoint, Status, TraceRecord, Verdict};
pub use certificates::{mfcq_probe, rabier_value, tangency_membership, MfcqReport, MultiplierVector, RabierResult};
pub use config::Config;
pub use error::{Error, Result};
pub use pareto::{
    existence_verdict, nondominated_filter, section_probe, solve_front, solve_scalarized, DominanceMode,
    ParetoArchive, SectionReport,
};
pub use poly::{Polynomial, PolyFunction};
pub use semialg::{project_to_sphere_slice, sample_feasible_ray, ActiveSet, FeasibilityReport, Problem};
