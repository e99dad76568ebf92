//! Optimal timer-based selection of the best node among `k` contenders.
//!
//! Each node maps its metric to a timer and transmits when the timer expires;
//! the best node is selected if nobody else starts within the vulnerability
//! window `delta` after it, and it fires no later than `t_max`. The optimal
//! mappings use only the `N + 1` timer values `0, delta, ..., N delta` with
//! `N = floor(t_max / delta)`.
//!
//! - [`scheme1`] maximizes the success probability.
//! - [`scheme2`] minimizes the expected selection time subject to `P >= eta`.
//! - [`analysis`] evaluates any interval-length vector in closed form.
//! - [`simulator`] is a seeded, thread-count-independent Monte Carlo engine.
//! - [`baselines`] tunes the inverse-metric mapping `c / x` for comparison.

pub mod analysis;
pub mod baselines;
pub mod error;
pub mod model;
pub mod scheme1;
pub mod scheme2;
pub mod search;
pub mod simulator;
pub mod sum;
pub mod table;

pub use error::{Error, Result};
pub use model::{
    AsymptoticMapping, ContinuousMapping, DiscreteMapping, MetricDistribution, Population, SelectionParams, Timer,
    TimerMapping, TimerRule,
};
pub use simulator::{SelectionOutcome, SimStats, TimeConvention};

/// Library version recorded in generated files.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
