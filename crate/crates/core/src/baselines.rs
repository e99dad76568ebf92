//! Inverse-metric baseline `f(x) = c / x` with a Monte Carlo search over `c`.
//!
//! The search is a golden-section over `log10 c` on
//! `[log10(delta / 1000), log10(1000 t_max)]`. Every evaluation reuses the same
//! seed, so the objective is a deterministic function of `c` (common random
//! numbers). The chosen `c` is re-evaluated on a fresh stream for reporting.

use std::fmt;

use crate::error::{Error, Result};
use crate::model::{ContinuousMapping, MetricDistribution, SelectionParams, TimerRule};
use crate::search::{golden_section, grid_scan};
use crate::simulator::{estimate, SimStats, TimeConvention};

pub const DEFAULT_SEARCH_BUDGET: usize = 60;
pub const DEFAULT_TRIALS_PER_EVAL: u64 = 100_000;
pub const DEFAULT_FINAL_TRIALS: u64 = 1_000_000;
const FALLBACK_GRID: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Objective {
    MaximizeSuccess,
    MinimizeTimeAtConstraint { eta: f64 },
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Objective::MaximizeSuccess => f.write_str("max_success"),
            Objective::MinimizeTimeAtConstraint { eta } => write!(f, "min_time@{eta}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineConfig {
    pub distribution: MetricDistribution,
    pub objective: Objective,
    pub search_budget: usize,
    pub trials_per_eval: u64,
    pub final_trials: u64,
    pub seed: u64,
    pub time_convention: TimeConvention,
}

impl BaselineConfig {
    pub fn new(distribution: MetricDistribution, objective: Objective, seed: u64) -> Self {
        Self {
            distribution,
            objective,
            search_budget: DEFAULT_SEARCH_BUDGET,
            trials_per_eval: DEFAULT_TRIALS_PER_EVAL,
            final_trials: DEFAULT_FINAL_TRIALS,
            seed,
            time_convention: TimeConvention::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.search_budget < 3 {
            return Err(Error::param(
                "budget",
                format!("need at least 3 evaluations, got {}", self.search_budget),
            ));
        }
        if self.trials_per_eval < 1000 {
            return Err(Error::param(
                "trials",
                format!("need at least 1000 trials per evaluation, got {}", self.trials_per_eval),
            ));
        }
        if self.final_trials == 0 {
            return Err(Error::param("final-trials", "must be at least 1"));
        }
        if let Objective::MinimizeTimeAtConstraint { eta } = self.objective {
            if !(0.0..=1.0).contains(&eta) {
                return Err(Error::param("eta", format!("must lie in [0, 1], got {eta}")));
            }
        }
        Ok(())
    }
}

/// `c / quantile(u)`; silent when the value exceeds `t_max` (including the
/// `u = 0` end where the raw metric is zero).
pub fn inverse_mapping(c: f64, distribution: MetricDistribution, t_max: f64) -> Result<ContinuousMapping> {
    ContinuousMapping::new(TimerRule::InverseMetric { c, distribution }, t_max)
}

/// Exact interval lengths of the inverse-metric mapping after flooring its
/// timers onto the slot grid.
///
/// A timer `c/x` lands in `[j delta, (j+1) delta)` iff
/// `F(c/((j+1) delta)) < u <= F(c/(j delta))`; the last slot collects
/// `[N delta, t_max]`.
pub fn discretized_inverse_lengths(c: f64, distribution: &MetricDistribution, params: &SelectionParams) -> Vec<f64> {
    let delta = params.delta();
    let n = params.n_slots();
    let upper = |j: usize| {
        if j == 0 {
            1.0
        } else {
            distribution.cdf(c / (j as f64 * delta))
        }
    };
    (0..=n)
        .map(|j| {
            let lower = if j == n {
                distribution.cdf(c / params.t_max())
            } else {
                distribution.cdf(c / ((j + 1) as f64 * delta))
            };
            (upper(j) - lower).max(0.0)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BaselinePath {
    GoldenSection,
    /// An endpoint of the bracket beat the golden-section interior.
    GridFallback,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BaselineResult {
    pub c_star: f64,
    pub objective: Objective,
    /// Success probability or mean selection time, per the objective.
    pub value: f64,
    pub stderr: f64,
    /// Full re-evaluation at `c_star`.
    pub stats: SimStats,
    pub evaluations: usize,
    pub path: BaselinePath,
}

fn score(objective: Objective, stats: &SimStats, cap: f64) -> f64 {
    match objective {
        Objective::MaximizeSuccess => -stats.success_prob,
        Objective::MinimizeTimeAtConstraint { eta } => {
            if stats.success_prob >= eta {
                stats.mean_selection_time
            } else {
                // above every feasible time and decreasing as success improves
                cap + (1.0 + eta - stats.success_prob) * cap.max(1e-300)
            }
        }
    }
}

pub fn evaluate_c(
    config: &BaselineConfig,
    params: &SelectionParams,
    c: f64,
    trials: u64,
    seed: u64,
) -> Result<SimStats> {
    let mapping = inverse_mapping(c, config.distribution.clone(), params.t_max())?;
    estimate(&mapping, params, trials, seed, config.time_convention)
}

pub fn optimize_c(config: &BaselineConfig, params: &SelectionParams) -> Result<BaselineResult> {
    config.validate()?;
    let lo = (params.delta() * 1e-3).log10();
    let hi = (params.t_max().max(params.delta()) * 1e3).log10();
    let cap = config.time_convention.cap(params).max(params.delta());

    let mut failure: Option<Error> = None;
    let mut evaluations = 0usize;
    let mut objective_at = |log_c: f64| -> f64 {
        evaluations += 1;
        match evaluate_c(config, params, 10f64.powf(log_c), config.trials_per_eval, config.seed) {
            Ok(stats) => score(config.objective, &stats, cap),
            Err(e) => {
                failure.get_or_insert(e);
                f64::INFINITY
            }
        }
    };

    let at_lo = objective_at(lo);
    let at_hi = objective_at(hi);
    let mut best = golden_section(&mut objective_at, lo, hi, config.search_budget - 2);
    let mut path = BaselinePath::GoldenSection;
    if at_lo <= best.value || at_hi <= best.value {
        path = BaselinePath::GridFallback;
        best = grid_scan(&mut objective_at, lo, hi, FALLBACK_GRID);
    }
    if let Some(e) = failure {
        return Err(e);
    }

    let c_star = 10f64.powf(best.x);
    if let Objective::MinimizeTimeAtConstraint { eta } = config.objective {
        if best.value > cap {
            let probe = evaluate_c(config, params, c_star, config.trials_per_eval, config.seed)?;
            return Err(Error::ConstraintUnmeetable {
                eta,
                best: probe.success_prob,
            });
        }
    }

    let stats = evaluate_c(config, params, c_star, config.final_trials, config.seed.wrapping_add(1))?;
    let (value, stderr) = match config.objective {
        Objective::MaximizeSuccess => (stats.success_prob, stats.success_stderr),
        Objective::MinimizeTimeAtConstraint { .. } => (stats.mean_selection_time, stats.mean_selection_time_stderr),
    };
    Ok(BaselineResult {
        c_star,
        objective: config.objective,
        value,
        stderr,
        stats,
        evaluations,
        path,
    })
}
