//! Seeded Monte Carlo engine for the timer contention process.
//!
//! Each trial draws `k` i.i.d. uniform metrics, maps them to timers and
//! checks the vulnerability-window rule: the best node is selected iff its
//! timer fires by `t_max` and the second timer is either silent, later than
//! `t_max`, or at least `delta` later.
//!
//! Trial `i` uses its own ChaCha8 stream `(seed, i)`, and partial sums are
//! combined in a fixed chunk order, so results do not depend on how many
//! threads run the trials.

use std::fmt;
use std::io::{self, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::{SelectionParams, Timer, TimerMapping};
use crate::sum::CompensatedSum;

const CHUNK: u64 = 4096;

/// How the stop time is counted when the best node fires late or nobody
/// transmits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimeConvention {
    /// Cap at `N * delta`; matches the closed-form expected time.
    #[default]
    CapAtNSlots,
    CapAtTmax,
}

impl TimeConvention {
    pub fn cap(self, params: &SelectionParams) -> f64 {
        match self {
            TimeConvention::CapAtNSlots => params.n_slots() as f64 * params.delta(),
            TimeConvention::CapAtTmax => params.t_max(),
        }
    }
}

impl fmt::Display for TimeConvention {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TimeConvention::CapAtNSlots => "nslots",
            TimeConvention::CapAtTmax => "tmax",
        })
    }
}

impl std::str::FromStr for TimeConvention {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nslots" => Ok(TimeConvention::CapAtNSlots),
            "tmax" => Ok(TimeConvention::CapAtTmax),
            other => Err(Error::param(
                "time-convention",
                format!("expected `nslots` or `tmax`, got `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionOutcome {
    pub success: bool,
    pub stop_time: f64,
    /// Index of the selected node when `success`.
    pub winner: Option<usize>,
    /// Earliest timer.
    pub t1: Timer,
    /// Second-earliest timer.
    pub t2: Timer,
}

/// Timer `a` fires strictly before `b`.
fn earlier(a: Timer, b: Timer, delta: f64) -> bool {
    match (a, b) {
        (_, Timer::NoTransmit) => a.transmits(),
        (Timer::NoTransmit, _) => false,
        (Timer::Slot(i), Timer::Slot(j)) => i < j,
        _ => a.seconds(delta) < b.seconds(delta),
    }
}

fn fires_by_deadline(t: Timer, params: &SelectionParams) -> bool {
    match t {
        Timer::Slot(j) => j <= params.n_slots(),
        Timer::At(s) => s <= params.t_max(),
        Timer::NoTransmit => false,
    }
}

/// `second` starts at least one window after `first`. Two slots on the grid
/// are compared by index; equal times always collide.
fn clear_of_window(first: Timer, second: Timer, delta: f64) -> bool {
    match (first, second) {
        (_, Timer::NoTransmit) => true,
        (Timer::Slot(i), Timer::Slot(j)) => j > i,
        _ => second.seconds(delta) - first.seconds(delta) >= delta,
    }
}

/// Decide one contention round from given uniform metrics.
pub fn decide<M: TimerMapping + ?Sized>(
    mapping: &M,
    params: &SelectionParams,
    metrics: &[f64],
    convention: TimeConvention,
) -> SelectionOutcome {
    let delta = params.delta();
    let mut first: Option<(usize, Timer)> = None;
    let mut t2 = Timer::NoTransmit;
    let mut best_metric = (usize::MAX, f64::NEG_INFINITY);
    for (i, &u) in metrics.iter().enumerate() {
        if u > best_metric.1 {
            best_metric = (i, u);
        }
        let t = mapping.timer(u);
        match first {
            None => first = Some((i, t)),
            Some((_, t1)) if earlier(t, t1, delta) => {
                t2 = t1;
                first = Some((i, t));
            }
            Some(_) => {
                if earlier(t, t2, delta) {
                    t2 = t;
                }
            }
        }
    }
    let (winner_idx, t1) = first.unwrap_or((usize::MAX, Timer::NoTransmit));
    // a tie with the first timer lands in t2 and fails the window check below
    let cap = convention.cap(params);
    let success = fires_by_deadline(t1, params) && (!fires_by_deadline(t2, params) || clear_of_window(t1, t2, delta));
    let stop_time = if t1.transmits() {
        t1.seconds(delta).min(cap)
    } else {
        cap
    };
    let winner = success.then_some(winner_idx);
    if success {
        assert_eq!(winner_idx, best_metric.0, "selected node does not hold the best metric");
    }
    SelectionOutcome {
        success,
        stop_time,
        winner,
        t1,
        t2,
    }
}

fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// One trial with metrics drawn from `rng`.
pub fn run_trial<M: TimerMapping + ?Sized, R: Rng + ?Sized>(
    mapping: &M,
    params: &SelectionParams,
    rng: &mut R,
    convention: TimeConvention,
) -> SelectionOutcome {
    let k = params.k() as usize;
    let mut metrics = Vec::with_capacity(k);
    metrics.extend((0..k).map(|_| rng.random::<f64>()));
    decide(mapping, params, &metrics, convention)
}

/// Outcome of trial `trial` for `seed`; identical for any mapping so that
/// different mappings can be compared on common random numbers.
pub fn seeded_trial<M: TimerMapping + ?Sized>(
    mapping: &M,
    params: &SelectionParams,
    seed: u64,
    trial: u64,
    convention: TimeConvention,
) -> SelectionOutcome {
    run_trial(mapping, params, &mut trial_rng(seed, trial), convention)
}

/// Monte Carlo estimate with standard errors (`sample std / sqrt(trials)`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimStats {
    pub trials: u64,
    pub success_prob: f64,
    pub success_stderr: f64,
    pub mean_selection_time: f64,
    pub mean_selection_time_stderr: f64,
    pub seed: u64,
    pub time_convention: TimeConvention,
}

#[derive(Debug, Clone, Copy, Default)]
struct Partial {
    successes: u64,
    time: CompensatedSum,
    time_sq: CompensatedSum,
}

impl Partial {
    fn merge(mut self, other: &Partial) -> Partial {
        self.successes += other.successes;
        self.time.add(other.time.value());
        self.time_sq.add(other.time_sq.value());
        self
    }
}

fn sample_stderr(sum: f64, sum_sq: f64, n: u64) -> f64 {
    if n < 2 {
        return 0.0;
    }
    let nf = n as f64;
    let mean = sum / nf;
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (var / nf).sqrt()
}

pub fn estimate<M: TimerMapping + ?Sized>(
    mapping: &M,
    params: &SelectionParams,
    trials: u64,
    seed: u64,
    convention: TimeConvention,
) -> Result<SimStats> {
    if trials == 0 {
        return Err(Error::param("trials", "must be at least 1"));
    }
    let chunks = trials.div_ceil(CHUNK);
    let partials: Vec<Partial> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut part = Partial::default();
            let start = c * CHUNK;
            let end = (start + CHUNK).min(trials);
            let mut metrics = Vec::with_capacity(params.k() as usize);
            for i in start..end {
                let mut rng = trial_rng(seed, i);
                metrics.clear();
                metrics.extend((0..params.k()).map(|_| rng.random::<f64>()));
                let out = decide(mapping, params, &metrics, convention);
                part.successes += u64::from(out.success);
                part.time.add(out.stop_time);
                part.time_sq.add(out.stop_time * out.stop_time);
            }
            part
        })
        .collect();
    let total = partials.iter().fold(Partial::default(), Partial::merge);
    let n = trials as f64;
    let s = total.successes as f64;
    let success_prob = s / n;
    let cap = convention.cap(params);
    let mean_time = (total.time.value() / n).clamp(0.0, cap);
    Ok(SimStats {
        trials,
        success_prob,
        success_stderr: sample_stderr(s, s, trials),
        mean_selection_time: mean_time,
        mean_selection_time_stderr: sample_stderr(total.time.value(), total.time_sq.value(), trials),
        seed,
        time_convention: convention,
    })
}

fn render_timer(t: Timer, delta: f64) -> String {
    match t {
        Timer::NoTransmit => "inf".to_string(),
        other => format!("{:.16e}", other.seconds(delta)),
    }
}

/// Per-trial trace as CSV `trial,success,stop_time,t1,t2` (`inf` = silent).
pub fn write_trace<M: TimerMapping + ?Sized, W: Write>(
    mapping: &M,
    params: &SelectionParams,
    trials: u64,
    seed: u64,
    convention: TimeConvention,
    out: &mut W,
) -> io::Result<()> {
    writeln!(out, "trial,success,stop_time,t1,t2")?;
    for i in 0..trials {
        let o = seeded_trial(mapping, params, seed, i, convention);
        writeln!(
            out,
            "{i},{},{:.16e},{},{}",
            u8::from(o.success),
            o.stop_time,
            render_timer(o.t1, params.delta()),
            render_timer(o.t2, params.delta())
        )?;
    }
    Ok(())
}

/// Timer values floored onto the slot grid `{0, delta, ..., N delta}`.
///
/// Values in `[l delta, (l+1) delta)` become `l delta`, values in
/// `[N delta, t_max]` become `N delta`, and silent nodes stay silent. The
/// result is monotone whenever the input is, and already-discrete timers
/// pass through unchanged.
#[derive(Debug, Clone)]
pub struct DiscretizedMapping<M> {
    inner: M,
    params: SelectionParams,
}

impl<M: TimerMapping> DiscretizedMapping<M> {
    pub fn inner(&self) -> &M {
        &self.inner
    }
}

impl<M: TimerMapping> TimerMapping for DiscretizedMapping<M> {
    fn timer(&self, u: f64) -> Timer {
        match self.inner.timer(u) {
            Timer::At(t) if t <= self.params.t_max() => {
                let slot = (t / self.params.delta()).floor().max(0.0) as usize;
                Timer::Slot(slot.min(self.params.n_slots()))
            }
            Timer::At(_) => Timer::NoTransmit,
            Timer::Slot(j) if j <= self.params.n_slots() => Timer::Slot(j),
            Timer::Slot(_) | Timer::NoTransmit => Timer::NoTransmit,
        }
    }
}

pub fn discretize_mapping<M: TimerMapping>(mapping: M, params: SelectionParams) -> DiscretizedMapping<M> {
    DiscretizedMapping { inner: mapping, params }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ContinuousMapping, DiscreteMapping, MetricDistribution, TimerRule};

    #[test]
    fn lone_node_always_succeeds_at_zero() {
        let params = SelectionParams::normalized(1, 0).unwrap();
        let m = DiscreteMapping::new(params, vec![1.0]).unwrap();
        let s = estimate(&m, &params, 1000, 3, TimeConvention::CapAtNSlots).unwrap();
        assert_eq!(s.success_prob, 1.0);
        assert_eq!(s.mean_selection_time, 0.0);
    }

    #[test]
    fn all_zero_timers_always_collide() {
        let params = SelectionParams::normalized(2, 3).unwrap();
        let m = DiscreteMapping::new(params, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let s = estimate(&m, &params, 2000, 9, TimeConvention::CapAtNSlots).unwrap();
        assert_eq!(s.success_prob, 0.0);
    }

    #[test]
    fn tiny_window_continuous_mapping_succeeds_when_first_fires() {
        let params = SelectionParams::new(2, 1e-6, 2.0).unwrap();
        let m = ContinuousMapping::new(
            TimerRule::InverseMetric {
                c: 1.0,
                distribution: MetricDistribution::Uniform01,
            },
            2.0,
        )
        .unwrap();
        for i in 0..2000 {
            let o = seeded_trial(&m, &params, 5, i, TimeConvention::CapAtNSlots);
            assert_eq!(o.success, fires_by_deadline(o.t1, &params), "trial {i}");
        }
    }

    #[test]
    fn decide_examples() {
        let params = SelectionParams::normalized(3, 2).unwrap();
        let m = DiscreteMapping::new(params, vec![0.2, 0.3, 0.3]).unwrap();
        // slots: u >= 0.8 -> 0, [0.5, 0.8) -> 1, [0.2, 0.5) -> 2, else silent
        let o = decide(&m, &params, &[0.1, 0.9, 0.6], TimeConvention::CapAtNSlots);
        assert!(o.success);
        assert_eq!(o.winner, Some(1));
        assert_eq!((o.t1, o.t2), (Timer::Slot(0), Timer::Slot(1)));
        assert_eq!(o.stop_time, 0.0);

        let o = decide(&m, &params, &[0.55, 0.6, 0.1], TimeConvention::CapAtNSlots);
        assert!(!o.success);
        assert_eq!(o.winner, None);
        assert_eq!(o.stop_time, 1.0);

        let o = decide(&m, &params, &[0.1, 0.05, 0.15], TimeConvention::CapAtNSlots);
        assert!(!o.success);
        assert_eq!(o.t1, Timer::NoTransmit);
        assert_eq!(o.stop_time, 2.0);

        let o = decide(&m, &params, &[0.3, 0.05, 0.15], TimeConvention::CapAtNSlots);
        assert!(o.success);
        assert_eq!(o.winner, Some(0));
        assert_eq!(o.stop_time, 2.0);
    }

    #[test]
    fn window_is_inclusive_for_continuous_timers() {
        let params = SelectionParams::new(2, 0.5, 10.0).unwrap();
        let knots = vec![(0.0, 3.0), (1.0, 1.0)];
        let m = ContinuousMapping::new(TimerRule::Interpolated(knots), 10.0).unwrap();
        // u = 0.75 -> 1.5, u = 0.5 -> 2.0: gap exactly delta
        let o = decide(&m, &params, &[0.75, 0.5], TimeConvention::CapAtNSlots);
        assert!(o.success);
        let o = decide(&m, &params, &[0.75, 0.7], TimeConvention::CapAtNSlots);
        assert!(!o.success);
    }

    #[test]
    fn cap_conventions_differ_only_when_nobody_fires() {
        let params = SelectionParams::new(2, 1.0, 2.5).unwrap();
        let m = DiscreteMapping::new(params, vec![0.1, 0.1, 0.1]).unwrap();
        let a = decide(&m, &params, &[0.1, 0.2], TimeConvention::CapAtNSlots);
        let b = decide(&m, &params, &[0.1, 0.2], TimeConvention::CapAtTmax);
        assert_eq!((a.stop_time, b.stop_time), (2.0, 2.5));
    }

    #[test]
    fn estimate_is_deterministic() {
        let params = SelectionParams::normalized(5, 4).unwrap();
        let m = DiscreteMapping::new(params, vec![0.1, 0.1, 0.1, 0.1, 0.1]).unwrap();
        let a = estimate(&m, &params, 10_000, 42, TimeConvention::CapAtNSlots).unwrap();
        let b = estimate(&m, &params, 10_000, 42, TimeConvention::CapAtNSlots).unwrap();
        assert_eq!(a, b);
        let c = estimate(&m, &params, 10_000, 43, TimeConvention::CapAtNSlots).unwrap();
        assert_ne!(a.success_prob, c.success_prob);
        assert!(estimate(&m, &params, 0, 1, TimeConvention::CapAtNSlots).is_err());
    }

    #[test]
    fn parallelism_does_not_change_results() {
        let params = SelectionParams::normalized(4, 3).unwrap();
        let m = DiscreteMapping::new(params, vec![0.15, 0.15, 0.2, 0.2]).unwrap();
        let wide = estimate(&m, &params, 20_000, 7, TimeConvention::CapAtNSlots).unwrap();
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let single = pool.install(|| estimate(&m, &params, 20_000, 7, TimeConvention::CapAtNSlots).unwrap());
        assert_eq!(wide, single);
    }

    #[test]
    fn discretizing_floors_onto_grid() {
        let params = SelectionParams::new(3, 1.0, 3.5).unwrap();
        let knots = vec![(0.0, 5.0), (1.0, 0.0)];
        let m = ContinuousMapping::new(TimerRule::Interpolated(knots), 3.5).unwrap();
        let d = discretize_mapping(&m, params);
        assert_eq!(d.timer(0.95), Timer::Slot(0)); // 0.25
        assert_eq!(d.timer(0.5), Timer::Slot(2)); // 2.5
        assert_eq!(d.timer(0.32), Timer::Slot(3)); // 3.4
        assert_eq!(d.timer(0.2), Timer::NoTransmit); // 4.0
    }

    #[test]
    fn discretizing_discrete_mapping_is_identity() {
        let params = SelectionParams::normalized(3, 2).unwrap();
        let m = DiscreteMapping::new(params, vec![0.2, 0.3, 0.3]).unwrap();
        let d = discretize_mapping(&m, params);
        for i in 0..1000 {
            let u = i as f64 / 1000.0;
            assert_eq!(d.timer(u), m.timer(u));
        }
    }

    #[test]
    fn trace_has_header_and_rows() {
        let params = SelectionParams::normalized(2, 1).unwrap();
        let m = DiscreteMapping::new(params, vec![0.3, 0.3]).unwrap();
        let mut buf = Vec::new();
        write_trace(&m, &params, 5, 1, TimeConvention::CapAtNSlots, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "trial,success,stop_time,t1,t2");
        assert_eq!(lines.len(), 6);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 5));
    }
}
