//! Shared domain types: selection parameters, timer values, metric
//! distributions and metric-to-timer mappings.
//!
//! Metrics are handled on the uniform scale `u = F(x)` throughout. A raw
//! metric `x` with continuous CDF `F` enters only through
//! [`MetricDistribution::uniformize`], which makes every mapping defined on
//! `[0, 1)` applicable to any continuous metric distribution.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::sum::CompensatedSum;

/// Numerical slack allowed on `sum(alphas) <= 1`.
pub const LENGTH_SUM_SLACK: f64 = 1e-12;

/// Number of contending nodes, either finite or the large-population limit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Population {
    Finite(u32),
    Asymptotic,
}

impl Population {
    pub fn finite(self) -> Option<u32> {
        match self {
            Population::Finite(k) => Some(k),
            Population::Asymptotic => None,
        }
    }

    /// Column name for the per-slot lengths of this population.
    pub fn length_label(self) -> &'static str {
        match self {
            Population::Finite(_) => "alpha",
            Population::Asymptotic => "beta",
        }
    }
}

impl fmt::Display for Population {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Population::Finite(k) => write!(f, "{k}"),
            Population::Asymptotic => f.write_str("inf"),
        }
    }
}

impl FromStr for Population {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s.eq_ignore_ascii_case("inf") || s.eq_ignore_ascii_case("infinity") {
            return Ok(Population::Asymptotic);
        }
        let k: u32 = s
            .parse()
            .map_err(|_| Error::param("k", format!("expected a positive integer or `inf`, got `{s}`")))?;
        if k == 0 {
            return Err(Error::param("k", "must be at least 1"));
        }
        Ok(Population::Finite(k))
    }
}

/// Number of nodes `k`, vulnerability window `delta` and maximum selection
/// duration `t_max` (both in seconds), plus the derived slot count
/// `n_slots = floor(t_max / delta)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionParams {
    k: u32,
    delta: f64,
    t_max: f64,
    n_slots: usize,
}

impl SelectionParams {
    pub fn new(k: u32, delta: f64, t_max: f64) -> Result<Self> {
        if k < 1 {
            return Err(Error::param("k", "must be at least 1"));
        }
        if !(delta.is_finite() && delta > 0.0) {
            return Err(Error::param(
                "delta",
                format!("must be positive and finite, got {delta}"),
            ));
        }
        if !(t_max.is_finite() && t_max >= 0.0) {
            return Err(Error::param(
                "t_max",
                format!("must be non-negative and finite, got {t_max}"),
            ));
        }
        let quotient = (t_max / delta).floor();
        if quotient > f64::from(u32::MAX) {
            return Err(Error::param(
                "t_max",
                format!("t_max/delta = {quotient} slots is too large"),
            ));
        }
        Ok(Self {
            k,
            delta,
            t_max,
            n_slots: quotient as usize,
        })
    }

    /// Parameters in slot units: `delta = 1` and `t_max = n_slots`.
    pub fn normalized(k: u32, n_slots: usize) -> Result<Self> {
        Self::new(k, 1.0, n_slots as f64)
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_slots(&self) -> usize {
        self.n_slots
    }

    /// Same window and deadline with a different node count.
    pub fn with_k(&self, k: u32) -> Result<Self> {
        Self::new(k, self.delta, self.t_max)
    }
}

/// A timer value. `Slot(j)` is exactly `j * delta`; `At` is an arbitrary
/// time in seconds. `NoTransmit` means the node stays silent for the whole
/// selection window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Timer {
    Slot(usize),
    At(f64),
    NoTransmit,
}

impl Timer {
    /// Expiry time in seconds; `NoTransmit` is `+inf`.
    pub fn seconds(self, delta: f64) -> f64 {
        match self {
            Timer::Slot(j) => j as f64 * delta,
            Timer::At(t) => t,
            Timer::NoTransmit => f64::INFINITY,
        }
    }

    pub fn transmits(self) -> bool {
        !matches!(self, Timer::NoTransmit)
    }
}

/// A monotone non-increasing map from the uniform metric `u` in `[0, 1)` to a
/// timer value.
pub trait TimerMapping: Sync {
    fn timer(&self, u: f64) -> Timer;
}

impl<M: TimerMapping + ?Sized> TimerMapping for &M {
    fn timer(&self, u: f64) -> Timer {
        (**self).timer(u)
    }
}

pub(crate) fn validate_lengths(alphas: &[f64]) -> Result<()> {
    if alphas.is_empty() {
        return Err(Error::InvalidLengths("at least one interval is required".into()));
    }
    let mut sum = CompensatedSum::new();
    for (j, &a) in alphas.iter().enumerate() {
        if !(a.is_finite() && a >= 0.0) {
            return Err(Error::InvalidLengths(format!(
                "alpha[{j}] = {a} is not a non-negative number"
            )));
        }
        sum.add(a);
    }
    if sum.value() > 1.0 + LENGTH_SUM_SLACK {
        return Err(Error::InvalidLengths(format!("lengths sum to {} > 1", sum.value())));
    }
    Ok(())
}

/// The discrete mapping: nodes with `u` in
/// `[1 - sum_{i<=j} alpha_i, 1 - sum_{i<j} alpha_i)` fire at `j * delta`;
/// nodes below `1 - sum(alpha)` never transmit.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteMapping {
    params: SelectionParams,
    alphas: Vec<f64>,
    // lower[j] = 1 - sum_{i<=j} alpha_i, non-increasing
    lower: Vec<f64>,
}

impl DiscreteMapping {
    pub fn new(params: SelectionParams, alphas: Vec<f64>) -> Result<Self> {
        if alphas.len() != params.n_slots() + 1 {
            return Err(Error::InvalidLengths(format!(
                "expected {} lengths for N = {}, got {}",
                params.n_slots() + 1,
                params.n_slots(),
                alphas.len()
            )));
        }
        validate_lengths(&alphas)?;
        let mut cum = CompensatedSum::new();
        let lower = alphas
            .iter()
            .map(|&a| {
                cum.add(a);
                1.0 - cum.value()
            })
            .collect();
        Ok(Self { params, alphas, lower })
    }

    pub fn params(&self) -> &SelectionParams {
        &self.params
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// Probability mass of metrics that never transmit.
    pub fn no_transmit_mass(&self) -> f64 {
        self.lower.last().copied().unwrap_or(1.0).max(0.0)
    }

    /// Slot index for `u`, or `None` when the node does not transmit.
    pub fn slot(&self, u: f64) -> Option<usize> {
        let j = self.lower.partition_point(|&l| l > u);
        (j < self.lower.len()).then_some(j)
    }
}

impl TimerMapping for DiscreteMapping {
    fn timer(&self, u: f64) -> Timer {
        debug_assert!((0.0..1.0).contains(&u), "uniform metric {u} outside [0, 1)");
        match self.slot(u) {
            Some(j) => Timer::Slot(j),
            None => Timer::NoTransmit,
        }
    }
}

/// Normalized interval lengths `beta_j = k * alpha_j` in the large-`k` limit.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticMapping {
    betas: Vec<f64>,
}

impl AsymptoticMapping {
    pub fn new(betas: Vec<f64>) -> Result<Self> {
        if betas.is_empty() {
            return Err(Error::InvalidLengths("at least one interval is required".into()));
        }
        if let Some((j, b)) = betas.iter().enumerate().find(|(_, b)| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::InvalidLengths(format!("beta[{j}] = {b} is not positive")));
        }
        Ok(Self { betas })
    }

    pub fn betas(&self) -> &[f64] {
        &self.betas
    }

    pub fn n_slots(&self) -> usize {
        self.betas.len() - 1
    }

    /// Interval lengths `beta / k` for a finite population.
    pub fn scaled(&self, k: u32) -> Result<Vec<f64>> {
        let alphas: Vec<f64> = self.betas.iter().map(|b| b / f64::from(k)).collect();
        validate_lengths(&alphas)?;
        Ok(alphas)
    }
}

/// Piecewise-linear CDF used for [`MetricDistribution::Tabulated`].
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedCdf {
    points: Vec<(f64, f64)>,
}

impl TabulatedCdf {
    /// `points` are `(x, F(x))` pairs with strictly increasing `x` and `F`,
    /// and `F` inside `[0, 1]`.
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::param(
                "distribution",
                "a tabulated CDF needs at least two points",
            ));
        }
        for w in points.windows(2) {
            let ((x0, f0), (x1, f1)) = (w[0], w[1]);
            if !(x1 > x0 && f1 > f0) {
                return Err(Error::param(
                    "distribution",
                    format!("tabulated CDF must be strictly increasing, got ({x0}, {f0}) then ({x1}, {f1})"),
                ));
            }
        }
        let (f_first, f_last) = (points[0].1, points[points.len() - 1].1);
        if !(f_first >= 0.0 && f_last <= 1.0) || points.iter().any(|(x, _)| !x.is_finite()) {
            return Err(Error::param("distribution", "tabulated CDF values must lie in [0, 1]"));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// CDF value and whether `x` fell outside the table.
    fn eval(&self, x: f64) -> (f64, bool) {
        let pts = &self.points;
        let (x_first, x_last) = (pts[0].0, pts[pts.len() - 1].0);
        if x < x_first {
            return (0.0, true);
        }
        if x > x_last {
            return (1.0, true);
        }
        let i = pts.partition_point(|&(xi, _)| xi <= x).clamp(1, pts.len() - 1);
        let ((x0, f0), (x1, f1)) = (pts[i - 1], pts[i]);
        (f0 + (f1 - f0) * (x - x0) / (x1 - x0), false)
    }

    fn quantile(&self, u: f64) -> f64 {
        let pts = &self.points;
        if u <= pts[0].1 {
            return pts[0].0;
        }
        if u >= pts[pts.len() - 1].1 {
            return pts[pts.len() - 1].0;
        }
        let i = pts.partition_point(|&(_, fi)| fi <= u).clamp(1, pts.len() - 1);
        let ((x0, f0), (x1, f1)) = (pts[i - 1], pts[i]);
        x0 + (x1 - x0) * (u - f0) / (f1 - f0)
    }
}

/// Distribution of the raw suitability metric.
///
/// `Rayleigh { scale: 1.0 }` has CDF `1 - exp(-x^2 / 2)`; its mean is
/// `sqrt(pi/2)`, not 1.
#[derive(Debug, Clone, PartialEq)]
pub enum MetricDistribution {
    Uniform01,
    Exponential { mean: f64 },
    Rayleigh { scale: f64 },
    Tabulated(TabulatedCdf),
}

impl MetricDistribution {
    pub fn exponential(mean: f64) -> Result<Self> {
        if !(mean.is_finite() && mean > 0.0) {
            return Err(Error::param(
                "distribution",
                format!("exponential mean must be positive, got {mean}"),
            ));
        }
        Ok(Self::Exponential { mean })
    }

    pub fn rayleigh(scale: f64) -> Result<Self> {
        if !(scale.is_finite() && scale > 0.0) {
            return Err(Error::param(
                "distribution",
                format!("Rayleigh scale must be positive, got {scale}"),
            ));
        }
        Ok(Self::Rayleigh { scale })
    }

    pub fn tabulated(points: Vec<(f64, f64)>) -> Result<Self> {
        TabulatedCdf::new(points).map(Self::Tabulated)
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            Self::Uniform01 => x.clamp(0.0, 1.0),
            Self::Exponential { mean } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x / mean).exp_m1()
                }
            }
            Self::Rayleigh { scale } => {
                if x <= 0.0 {
                    0.0
                } else {
                    -(-x * x / (2.0 * scale * scale)).exp_m1()
                }
            }
            Self::Tabulated(table) => table.eval(x).0,
        }
    }

    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            Self::Uniform01 => u,
            Self::Exponential { mean } => -mean * (-u).ln_1p(),
            Self::Rayleigh { scale } => scale * (-2.0 * (-u).ln_1p()).sqrt(),
            Self::Tabulated(table) => table.quantile(u),
        }
    }

    /// Probability-integral transform `F(x)`. Tabulated inputs outside the
    /// table clamp to 0 or 1 and log a warning.
    pub fn uniformize(&self, raw_metric: f64) -> f64 {
        if let Self::Tabulated(table) = self {
            let (u, clamped) = table.eval(raw_metric);
            if clamped {
                log::warn!("metric {raw_metric} lies outside the tabulated CDF; clamped to {u}");
            }
            return u;
        }
        self.cdf(raw_metric)
    }

    pub fn name(&self) -> String {
        match self {
            Self::Uniform01 => "uniform".to_string(),
            Self::Exponential { mean } => format!("exp:{mean}"),
            Self::Rayleigh { scale } => format!("rayleigh:{scale}"),
            Self::Tabulated(t) => format!("table[{}]", t.points.len()),
        }
    }
}

/// Timer rule of a [`ContinuousMapping`], as a function of the uniform metric.
#[derive(Debug, Clone, PartialEq)]
pub enum TimerRule {
    /// `c / x` applied to the raw metric `x = quantile(u)`.
    InverseMetric { c: f64, distribution: MetricDistribution },
    /// Linear interpolation through `(u, seconds)` knots with increasing `u`
    /// and non-increasing timer values; held constant outside the knots.
    Interpolated(Vec<(f64, f64)>),
}

/// A continuous-valued mapping; values above `t_max` mean no transmission.
#[derive(Debug, Clone, PartialEq)]
pub struct ContinuousMapping {
    rule: TimerRule,
    t_max: f64,
}

impl ContinuousMapping {
    pub fn new(rule: TimerRule, t_max: f64) -> Result<Self> {
        if t_max.is_nan() || t_max < 0.0 {
            return Err(Error::param("t_max", format!("must be non-negative, got {t_max}")));
        }
        match &rule {
            TimerRule::InverseMetric { c, .. } => {
                if !(c.is_finite() && *c > 0.0) {
                    return Err(Error::param("c", format!("must be positive, got {c}")));
                }
            }
            TimerRule::Interpolated(knots) => {
                if knots.is_empty() {
                    return Err(Error::param("knots", "at least one knot is required"));
                }
                let ok = knots.windows(2).all(|w| w[1].0 > w[0].0 && w[1].1 <= w[0].1)
                    && knots
                        .iter()
                        .all(|&(u, t)| (0.0..=1.0).contains(&u) && t >= 0.0 && !t.is_nan());
                if !ok {
                    return Err(Error::param(
                        "knots",
                        "knots need increasing u in [0, 1] and non-increasing, non-negative timers",
                    ));
                }
            }
        }
        Ok(Self { rule, t_max })
    }

    pub fn rule(&self) -> &TimerRule {
        &self.rule
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    /// Raw rule value in seconds, before the `t_max` cut-off.
    pub fn rule_value(&self, u: f64) -> f64 {
        match &self.rule {
            TimerRule::InverseMetric { c, distribution } => c / distribution.quantile(u),
            TimerRule::Interpolated(knots) => {
                let i = knots.partition_point(|&(ui, _)| ui <= u);
                if i == 0 {
                    knots[0].1
                } else if i == knots.len() {
                    knots[knots.len() - 1].1
                } else {
                    let ((u0, t0), (u1, t1)) = (knots[i - 1], knots[i]);
                    t0 + (t1 - t0) * (u - u0) / (u1 - u0)
                }
            }
        }
    }
}

impl TimerMapping for ContinuousMapping {
    fn timer(&self, u: f64) -> Timer {
        debug_assert!((0.0..1.0).contains(&u), "uniform metric {u} outside [0, 1)");
        let t = self.rule_value(u);
        if t <= self.t_max {
            Timer::At(t)
        } else {
            Timer::NoTransmit
        }
    }
}
