//! Success-probability-maximizing mapping.
//!
//! For `k` nodes and `N` slots the optimal first interval is
//! `alpha_0 = (1 - P_{N-1}) / (k - P_{N-1})`, with the remaining intervals
//! given by the `N - 1` solution rescaled onto `[0, 1 - alpha_0)`. Unwrapping
//! that recursion level by level only needs each level's `alpha_0`:
//!
//! ```text
//! alpha_j^N = a0[N - j] * prod_{i<j} (1 - a0[N - i])
//! ```
//!
//! In the large-`k` limit the normalized lengths satisfy `beta_N = 1`,
//! `beta_j = 1 - exp(-beta_{j+1})` and the optimum is `exp(-beta_0)`.

use crate::analysis;
use crate::error::{Error, Result};
use crate::model::{AsymptoticMapping, DiscreteMapping, Population, SelectionParams};
use crate::sum::pow_one_minus;

/// Optimal lengths (`alpha` for finite `k`, `beta` in the limit) with the
/// maximum success probability they achieve.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub population: Population,
    pub lengths: Vec<f64>,
    pub p_star: f64,
}

impl Solution {
    pub fn n_slots(&self) -> usize {
        self.lengths.len() - 1
    }

    /// Per-node probability of not transmitting; `None` in the limit.
    pub fn no_transmit_mass(&self) -> Option<f64> {
        match self.population {
            Population::Finite(_) => Some((1.0 - self.lengths.iter().sum::<f64>()).max(0.0)),
            Population::Asymptotic => None,
        }
    }

    /// Lookup table for `params.k()` nodes. Limit solutions are scaled by `1/k`.
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

/// Level-by-level first-interval lengths `a0[0..=N]` and the optimum of the
/// last level.
fn first_lengths(k: u32, n_slots: usize) -> (Vec<f64>, f64) {
    let kf = f64::from(k);
    let mut a0 = Vec::with_capacity(n_slots + 1);
    a0.push(1.0 / kf);
    let mut p = pow_one_minus(1.0 / kf, k - 1);
    for _ in 1..=n_slots {
        let a = if k == 1 { 1.0 } else { (1.0 - p) / (kf - p) };
        p = kf * a * pow_one_minus(a, k - 1) + pow_one_minus(a, k) * p;
        a0.push(a);
    }
    (a0, p)
}

pub(crate) fn unwrap_levels(a0: &[f64]) -> Vec<f64> {
    let n = a0.len() - 1;
    let mut remaining = 1.0;
    (0..=n)
        .map(|j| {
            let a = a0[n - j];
            let alpha = remaining * a;
            remaining *= 1.0 - a;
            alpha
        })
        .collect()
}

pub fn optimize_finite(k: u32, n_slots: usize) -> Result<Solution> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    let (a0, _) = first_lengths(k, n_slots);
    let lengths = unwrap_levels(&a0);
    let p_star = analysis::finite_terms(&lengths, k).0;
    Ok(Solution {
        population: Population::Finite(k),
        lengths,
        p_star,
    })
}

pub(crate) fn asymptotic_betas(n_slots: usize, extra: f64) -> Vec<f64> {
    let mut betas = vec![1.0f64; n_slots + 1];
    for j in (0..n_slots).rev() {
        betas[j] = -(-betas[j + 1]).exp_m1() + extra;
    }
    betas
}

pub fn optimize_asymptotic(n_slots: usize) -> Solution {
    let lengths = asymptotic_betas(n_slots, 0.0);
    let p_star = (-lengths[0]).exp();
    Solution {
        population: Population::Asymptotic,
        lengths,
        p_star,
    }
}

pub fn optimize(population: Population, n_slots: usize) -> Result<Solution> {
    match population {
        Population::Finite(k) => optimize_finite(k, n_slots),
        Population::Asymptotic => Ok(optimize_asymptotic(n_slots)),
    }
}

/// `P*_N` for every `N` in `0..=n_max`, in O(n_max).
pub fn p_star_curve(population: Population, n_max: usize) -> Result<Vec<f64>> {
    match population {
        Population::Finite(0) => Err(Error::param("k", "must be at least 1")),
        Population::Finite(k) => {
            let kf = f64::from(k);
            let mut p = pow_one_minus(1.0 / kf, k - 1);
            let mut out = vec![p];
            for _ in 1..=n_max {
                let a = if k == 1 { 1.0 } else { (1.0 - p) / (kf - p) };
                p = kf * a * pow_one_minus(a, k - 1) + pow_one_minus(a, k) * p;
                out.push(p);
            }
            Ok(out)
        }
        Population::Asymptotic => {
            let betas = asymptotic_betas(n_max, 0.0);
            // beta_0^N = betas[n_max - N]
            Ok((0..=n_max).map(|n| (-betas[n_max - n]).exp()).collect())
        }
    }
}
