//! Tolerances, probe schedules, and budgets shared by every analysis.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub feasibility: f64,
    /// Inequalities with `|h_j(x)|` at or below this are treated as active.
    pub activity: f64,
    pub membership: f64,
    pub stationarity: f64,
    /// Absolute threshold for a quantity to count as having reached zero.
    pub limit: f64,
    /// Relative spread below which a tier of f-values counts as convergent.
    pub cluster: f64,
    pub rank: f64,
    pub margin: f64,
    /// Distance in f-space accepted when locating a preimage of the reference point.
    pub value_match: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            feasibility: 1e-8,
            activity: 1e-6,
            membership: 1e-7,
            stationarity: 1e-6,
            limit: 1e-4,
            cluster: 1e-3,
            rank: 1e-10,
            margin: 1e-9,
            value_match: 1e-4,
        }
    }
}

/// Geometric probe radii `base * factor^k` for `k = 0..count`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadiusSchedule {
    pub base: f64,
    pub factor: f64,
    pub count: usize,
}

impl Default for RadiusSchedule {
    fn default() -> Self {
        RadiusSchedule {
            base: 10.0,
            factor: 2.0,
            count: 14,
        }
    }
}

impl RadiusSchedule {
    pub fn radii(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.base * self.factor.powi(k as i32))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budgets {
    /// Weight vectors (one trace each) drawn for sphere tracking.
    pub weights_per_radius: usize,
    /// Lattice points per simplex axis for scalarized front solving.
    pub grid: usize,
    pub starts: usize,
    pub section_samples: usize,
    /// Random restarts when a projection fails.
    pub restarts: usize,
    pub projection_max_iters: usize,
    /// Iterate norm beyond which a local solve is declared divergent.
    pub divergence_cap: f64,
    /// Half-width of the box multi-starts are drawn from.
    pub start_box: f64,
    /// Independent feasible rays sampled for asymptotic evidence.
    pub rays: usize,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets {
            weights_per_radius: 8,
            grid: 5,
            starts: 4,
            section_samples: 32,
            restarts: 8,
            projection_max_iters: 200,
            divergence_cap: 1e6,
            start_box: 2.0,
            rays: 4,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tolerances: Tolerances,
    pub schedule: RadiusSchedule,
    pub budgets: Budgets,
    /// Root seed; every random draw in an analysis is derived from it.
    pub seed: u64,
}

impl Config {
    pub fn validate(&self) -> Result<()> {
        let t = &self.tolerances;
        let all = [
            ("feasibility", t.feasibility),
            ("activity", t.activity),
            ("membership", t.membership),
            ("stationarity", t.stationarity),
            ("limit", t.limit),
            ("cluster", t.cluster),
            ("rank", t.rank),
            ("margin", t.margin),
            ("value_match", t.value_match),
        ];
        for (name, v) in all {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidInput(format!("tolerance `{}` must be positive", name)));
            }
        }
        let s = &self.schedule;
        if s.count < 4 {
            return Err(Error::InvalidInput("radius schedule needs at least 4 radii".into()));
        }
        if !(s.base > 0.0 && s.factor > 1.0) {
            return Err(Error::InvalidInput(
                "radius schedule needs base > 0 and factor > 1".into(),
            ));
        }
        let b = &self.budgets;
        if b.grid == 0 || b.starts == 0 || b.weights_per_radius == 0 || b.section_samples == 0 {
            return Err(Error::InvalidInput("budgets must be at least 1".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_schedule_spans_the_documented_range() {
        let r = RadiusSchedule::default().radii();
        assert_eq!(r.len(), 14);
        assert_eq!(r[0], 10.0);
        assert_eq!(r[13], 81920.0);
    }

    #[test]
    fn defaults_validate() {
        Config::default().validate().unwrap();
    }

    #[test]
    fn rejects_short_schedule_and_bad_tolerance() {
        let mut c = Config::default();
        c.schedule.count = 3;
        assert!(c.validate().is_err());
        let mut c = Config::default();
        c.tolerances.rank = 0.0;
        assert!(c.validate().is_err());
    }

    #[test]
    fn partial_json_fills_defaults() {
        let c: Config = serde_json::from_str(r#"{"seed": 7, "tolerances": {"limit": 1e-3}}"#).unwrap();
        assert_eq!(c.seed, 7);
        assert_eq!(c.tolerances.limit, 1e-3);
        assert_eq!(c.tolerances.feasibility, 1e-8);
        assert_eq!(c.schedule.count, 14);
    }
}
