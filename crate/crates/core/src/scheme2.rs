//! Minimum expected selection time subject to `P >= eta`.
//!
//! For a multiplier `lambda >= 0` the auxiliary function `L = Gamma - lambda P`
//! is minimized level by level. Writing `L_{N-1}` for the previous level's
//! minimum, the first-order condition on the first interval gives
//!
//! ```text
//! alpha_0^N = (delta + lambda + L_{N-1}) / (delta + lambda k + L_{N-1})
//! ```
//!
//! with `alpha_0^0 = 1/k` and the tail rescaled from level `N - 1`, exactly as
//! in Scheme 1. Every quantity depends on `lambda` only through
//! `lambda / delta`, so all work is done in slot units and scaled back.
//! The outer search picks `lambda` so that the constraint holds with equality.

use crate::analysis;
use crate::error::{Error, Result};
use crate::model::{AsymptoticMapping, DiscreteMapping, Population, SelectionParams};
use crate::scheme1::{self, asymptotic_betas, unwrap_levels};
use crate::search::golden_section;
use crate::sum::pow_one_minus;

/// Tolerance on `|P(lambda) - eta|` that ends the bisection.
pub const ETA_TOLERANCE: f64 = 1e-9;
/// Relative bracket width that ends the bisection.
pub const BRACKET_TOLERANCE: f64 = 1e-12;
const MONOTONE_SLACK: f64 = 1e-12;
const FALLBACK_BUDGET: usize = 200;

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub population: Population,
    pub lengths: Vec<f64>,
    /// Multiplier in seconds; `+inf` for the Scheme 1 limit.
    pub lambda: f64,
    pub delta: f64,
    pub p_success: f64,
    /// Expected selection time in seconds.
    pub expected_time: f64,
    /// `expected_time - lambda * p_success` in seconds.
    pub auxiliary: f64,
}

impl Solution {
    pub fn n_slots(&self) -> usize {
        self.lengths.len() - 1
    }

    pub fn lambda_over_delta(&self) -> f64 {
        self.lambda / self.delta
    }

    pub fn gamma_over_delta(&self) -> f64 {
        self.expected_time / self.delta
    }

    pub fn no_transmit_mass(&self) -> Option<f64> {
        match self.population {
            Population::Finite(_) => Some((1.0 - self.lengths.iter().sum::<f64>()).max(0.0)),
            Population::Asymptotic => None,
        }
    }

    pub fn discrete_mapping(&self, params: SelectionParams) -> Result<DiscreteMapping> {
        let alphas = match self.population {
            Population::Finite(k) if k == params.k() => self.lengths.clone(),
            Population::Finite(k) => {
                return Err(Error::param(
                    "k",
                    format!("solution is for k = {k}, params have k = {}", params.k()),
                ))
            }
            Population::Asymptotic => AsymptoticMapping::new(self.lengths.clone())?.scaled(params.k())?,
        };
        DiscreteMapping::new(params, alphas)
    }
}

/// Which branch of [`solve_constrained`] produced the multiplier.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchPath {
    Bisection,
    /// Non-monotone `P(lambda)` was detected and a golden-section scan over
    /// `log lambda` was used instead.
    GoldenFallback,
    /// The target equals the Scheme 1 optimum, or there is a single slot
    /// value: the Scheme 1 mapping is returned with `lambda = inf`.
    Scheme1Limit,
    /// `eta` is met by the all-at-zero mapping (`lambda = 0`).
    Degenerate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constrained {
    pub solution: Solution,
    pub eta: f64,
    pub path: SearchPath,
    pub evaluations: usize,
}

fn check_delta(delta: f64) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::param(
            "delta",
            format!("must be positive and finite, got {delta}"),
        ));
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda.is_finite() && lambda >= 0.0) {
        return Err(Error::param(
            "lambda",
            format!("must be non-negative and finite, got {lambda}"),
        ));
    }
    Ok(())
}

/// Finite-`k` lengths for `rho = lambda / delta`.
fn finite_lengths(k: u32, n_slots: usize, rho: f64) -> Vec<f64> {
    let kf = f64::from(k);
    let mut a0 = Vec::with_capacity(n_slots + 1);
    let mut a = 1.0 / kf;
    let mut aux = -rho * pow_one_minus(a, k - 1);
    a0.push(a);
    for _ in 1..=n_slots {
        a = (1.0 + rho + aux) / (1.0 + rho * kf + aux);
        aux = pow_one_minus(a, k) * (1.0 + aux) - rho * kf * a * pow_one_minus(a, k - 1);
        a0.push(a);
    }
    unwrap_levels(&a0)
}

/// `(lengths, P, Gamma/delta)` at `rho = lambda / delta`.
fn evaluate(population: Population, n_slots: usize, rho: f64) -> (Vec<f64>, f64, f64) {
    match population {
        Population::Finite(k) => {
            let lengths = finite_lengths(k, n_slots, rho);
            let (p, g) = analysis::finite_terms(&lengths, k);
            (lengths, p, g)
        }
        Population::Asymptotic => {
            let lengths = asymptotic_betas(n_slots, 1.0 / rho);
            let (p, g) = analysis::asymptotic_terms(&lengths);
            (lengths, p, g)
        }
    }
}

fn assemble(population: Population, lengths: Vec<f64>, p: f64, g: f64, rho: f64, delta: f64) -> Solution {
    let expected_time = g * delta;
    let lambda = rho * delta;
    let auxiliary = if rho.is_infinite() {
        if p > 0.0 {
            f64::NEG_INFINITY
        } else {
            expected_time
        }
    } else {
        expected_time - lambda * p
    };
    Solution {
        population,
        lengths,
        lambda,
        delta,
        p_success: p,
        expected_time,
        auxiliary,
    }
}

pub fn minimize_auxiliary_finite(k: u32, n_slots: usize, delta: f64, lambda: f64) -> Result<Solution> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    check_delta(delta)?;
    check_lambda(lambda)?;
    let rho = lambda / delta;
    let (lengths, p, g) = evaluate(Population::Finite(k), n_slots, rho);
    Ok(assemble(Population::Finite(k), lengths, p, g, rho, delta))
}

/// Large-`k` minimizer: `beta_N = 1`, `beta_j = 1 - exp(-beta_{j+1}) + delta/lambda`.
/// `lambda = 0` has no finite minimizer and is rejected.
pub fn minimize_auxiliary_asymptotic(n_slots: usize, delta: f64, lambda: f64) -> Result<Solution> {
    check_delta(delta)?;
    check_lambda(lambda)?;
    if lambda == 0.0 {
        return Err(Error::param(
            "lambda",
            "must be positive in the large-k limit; use the all-at-zero mapping for lambda = 0",
        ));
    }
    let rho = lambda / delta;
    let (lengths, p, g) = evaluate(Population::Asymptotic, n_slots, rho);
    Ok(assemble(Population::Asymptotic, lengths, p, g, rho, delta))
}

pub fn minimize_auxiliary(population: Population, n_slots: usize, delta: f64, lambda: f64) -> Result<Solution> {
    match population {
        Population::Finite(k) => minimize_auxiliary_finite(k, n_slots, delta, lambda),
        Population::Asymptotic => minimize_auxiliary_asymptotic(n_slots, delta, lambda),
    }
}

/// Outcome of the multiplier search in slot units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RhoSearch {
    pub rho: f64,
    pub path: SearchPath,
    pub evaluations: usize,
}

/// Find `rho` with `p_of(rho) ~ eta`, given `p_of(0) = p_at_zero < eta` and
/// `p_of(rho) -> p_limit >= eta` as `rho -> inf`.
///
/// The bracket is `[0, hi]` with `hi` doubled from 1. Monotonicity of `p_of`
/// is checked on every evaluation; a violation switches to a golden-section
/// scan of `|p - eta|` over `log rho`.
pub(crate) fn search_rho<F: FnMut(f64) -> f64>(mut p_of: F, eta: f64, p_at_zero: f64) -> Result<RhoSearch> {
    let mut evaluations = 0usize;
    let mut eval = |rho: f64, evaluations: &mut usize| {
        *evaluations += 1;
        p_of(rho)
    };
    let (mut lo, mut p_lo) = (0.0, p_at_zero);
    let mut hi = 1.0;
    let mut p_hi = eval(hi, &mut evaluations);
    let mut monotone = p_hi >= p_lo - MONOTONE_SLACK;
    while monotone && p_hi < eta {
        lo = hi;
        p_lo = p_hi;
        hi *= 2.0;
        if !hi.is_finite() || hi > 1e300 {
            return Err(Error::Numerical(format!(
                "no multiplier reaches eta = {eta}; best success probability {p_hi}"
            )));
        }
        p_hi = eval(hi, &mut evaluations);
        monotone = p_hi >= p_lo - MONOTONE_SLACK;
    }

    if monotone {
        if (p_hi - eta).abs() < ETA_TOLERANCE {
            return Ok(RhoSearch {
                rho: hi,
                path: SearchPath::Bisection,
                evaluations,
            });
        }
        while hi - lo >= BRACKET_TOLERANCE * hi {
            let mid = 0.5 * (lo + hi);
            let p_mid = eval(mid, &mut evaluations);
            if p_mid < p_lo - MONOTONE_SLACK || p_mid > p_hi + MONOTONE_SLACK {
                monotone = false;
                break;
            }
            let gap = p_mid - eta;
            if gap.abs() < ETA_TOLERANCE {
                return Ok(RhoSearch {
                    rho: mid,
                    path: SearchPath::Bisection,
                    evaluations,
                });
            }
            if gap < 0.0 {
                lo = mid;
                p_lo = p_mid;
            } else {
                hi = mid;
                p_hi = p_mid;
            }
        }
        if monotone {
            return Ok(RhoSearch {
                rho: hi,
                path: SearchPath::Bisection,
                evaluations,
            });
        }
    }

    log::warn!("success probability is not monotone in the multiplier; using golden-section fallback");
    let upper = hi.max(1.0);
    let lower = upper * 1e-12;
    let best = golden_section(
        |log_rho| {
            evaluations += 1;
            (p_of(log_rho.exp()) - eta).abs()
        },
        lower.ln(),
        upper.ln(),
        FALLBACK_BUDGET,
    );
    let rho = best.x.exp();
    let p = p_of(rho);
    evaluations += 1;
    // keep a point known to satisfy the constraint if the scan ended below it
    let rho = if p < eta - ETA_TOLERANCE && p_hi >= eta {
        hi
    } else {
        rho
    };
    Ok(RhoSearch {
        rho,
        path: SearchPath::GoldenFallback,
        evaluations,
    })
}

/// Minimize expected selection time subject to `P >= eta` with `n_slots`
/// timer slots of width `delta`.
///
/// Returns [`Error::Infeasible`] when `eta` is above the Scheme 1 optimum.
pub fn solve_constrained(population: Population, n_slots: usize, delta: f64, eta: f64) -> Result<Constrained> {
    check_delta(delta)?;
    if !(0.0..=1.0).contains(&eta) {
        return Err(Error::param("eta", format!("must lie in [0, 1], got {eta}")));
    }
    let best = scheme1::optimize(population, n_slots)?;
    if eta > best.p_star {
        return Err(Error::Infeasible {
            eta,
            p_max: best.p_star,
        });
    }
    if n_slots == 0 || eta >= best.p_star - 1e-12 {
        let (p, g) = match population {
            Population::Finite(k) => analysis::finite_terms(&best.lengths, k),
            Population::Asymptotic => analysis::asymptotic_terms(&best.lengths),
        };
        return Ok(Constrained {
            solution: assemble(population, best.lengths, p, g, f64::INFINITY, delta),
            eta,
            path: SearchPath::Scheme1Limit,
            evaluations: 0,
        });
    }

    let p_at_zero = match population {
        Population::Finite(k) => {
            let (lengths, p, g) = evaluate(population, n_slots, 0.0);
            if eta <= p {
                return Ok(Constrained {
                    solution: assemble(Population::Finite(k), lengths, p, g, 0.0, delta),
                    eta,
                    path: SearchPath::Degenerate,
                    evaluations: 1,
                });
            }
            p
        }
        Population::Asymptotic => {
            if eta <= 0.0 {
                return Err(Error::param(
                    "eta",
                    "must be positive in the large-k limit (eta = 0 is met by the all-at-zero mapping)",
                ));
            }
            0.0
        }
    };

    let found = search_rho(|rho| evaluate(population, n_slots, rho).1, eta, p_at_zero)?;
    let (lengths, p, g) = evaluate(population, n_slots, found.rho);
    if !(p.is_finite() && g.is_finite()) {
        return Err(Error::Numerical(format!(
            "non-finite solution at lambda/delta = {}",
            found.rho
        )));
    }
    Ok(Constrained {
        solution: assemble(population, lengths, p, g, found.rho, delta),
        eta,
        path: found.path,
        evaluations: found.evaluations,
    })
}
