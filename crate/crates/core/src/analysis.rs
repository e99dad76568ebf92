//! Closed-form success probability, expected selection time and the
//! auxiliary function `L = Gamma - lambda * P` for arbitrary interval
//! lengths, in finite-`k` and large-`k` form.
//!
//! With interval lengths `alpha_0..alpha_N` and `S_l = sum_{j<=l} alpha_j`:
//!
//! ```text
//! P     = k * sum_{l=0}^{N}   alpha_l * (1 - S_l)^(k-1)
//! Gamma = delta * sum_{l=0}^{N-1} (1 - S_l)^k
//! ```
//!
//! The expected time counts realizations where nobody transmits as `N * delta`.
//! In the limit `beta_j = k * alpha_j` the powers become `exp(-S_l)`.

use crate::error::{Error, Result};
use crate::model::validate_lengths;
use crate::sum::{pow_one_minus, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisResult {
    pub success_prob: f64,
    pub expected_time: f64,
    pub auxiliary_value: Option<f64>,
}

fn check_k(k: u32) -> Result<()> {
    if k == 0 {
        return Err(Error::param("k", "must be at least 1"));
    }
    Ok(())
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

fn check_betas(betas: &[f64]) -> Result<()> {
    if betas.is_empty() {
        return Err(Error::InvalidLengths("at least one interval is required".into()));
    }
    if let Some((j, b)) = betas.iter().enumerate().find(|(_, b)| !(b.is_finite() && **b >= 0.0)) {
        return Err(Error::InvalidLengths(format!(
            "beta[{j}] = {b} is not a non-negative number"
        )));
    }
    Ok(())
}

/// Unchecked finite-`k` evaluation returning `(P, Gamma / delta)`.
pub(crate) fn finite_terms(alphas: &[f64], k: u32) -> (f64, f64) {
    let n = alphas.len() - 1;
    let mut cum = CompensatedSum::new();
    let mut p = CompensatedSum::new();
    let mut gamma = CompensatedSum::new();
    for (l, &a) in alphas.iter().enumerate() {
        cum.add(a);
        let s = cum.value();
        p.add(a * pow_one_minus(s, k - 1));
        if l < n {
            gamma.add(pow_one_minus(s, k));
        }
    }
    ((f64::from(k) * p.value()).clamp(0.0, 1.0), gamma.value().max(0.0))
}

/// Unchecked large-`k` evaluation returning `(P, Gamma / delta)`.
pub(crate) fn asymptotic_terms(betas: &[f64]) -> (f64, f64) {
    let n = betas.len() - 1;
    let mut cum = CompensatedSum::new();
    let mut p = CompensatedSum::new();
    let mut gamma = CompensatedSum::new();
    for (l, &b) in betas.iter().enumerate() {
        cum.add(b);
        let e = (-cum.value()).exp();
        p.add(b * e);
        if l < n {
            gamma.add(e);
        }
    }
    (p.value().clamp(0.0, 1.0), gamma.value().max(0.0))
}

pub fn success_probability(alphas: &[f64], k: u32) -> Result<f64> {
    check_k(k)?;
    validate_lengths(alphas)?;
    Ok(finite_terms(alphas, k).0)
}

pub fn expected_selection_time(alphas: &[f64], k: u32, delta: f64) -> Result<f64> {
    check_k(k)?;
    check_delta(delta)?;
    validate_lengths(alphas)?;
    Ok(delta * finite_terms(alphas, k).1)
}

pub fn auxiliary_value(alphas: &[f64], k: u32, delta: f64, lambda: f64) -> Result<f64> {
    check_lambda(lambda)?;
    let res = analyze(alphas, k, delta, Some(lambda))?;
    Ok(res.auxiliary_value.unwrap_or_default())
}

/// All finite-`k` quantities at once; the auxiliary value is present when
/// `lambda` is supplied.
pub fn analyze(alphas: &[f64], k: u32, delta: f64, lambda: Option<f64>) -> Result<AnalysisResult> {
    check_k(k)?;
    check_delta(delta)?;
    if let Some(l) = lambda {
        check_lambda(l)?;
    }
    validate_lengths(alphas)?;
    let (p, g) = finite_terms(alphas, k);
    let expected_time = delta * g;
    Ok(AnalysisResult {
        success_prob: p,
        expected_time,
        auxiliary_value: lambda.map(|l| expected_time - l * p),
    })
}

pub fn asymptotic_success_probability(betas: &[f64]) -> Result<f64> {
    check_betas(betas)?;
    Ok(asymptotic_terms(betas).0)
}

pub fn asymptotic_expected_time(betas: &[f64], delta: f64) -> Result<f64> {
    check_delta(delta)?;
    check_betas(betas)?;
    Ok(delta * asymptotic_terms(betas).1)
}

pub fn asymptotic_auxiliary_value(betas: &[f64], delta: f64, lambda: f64) -> Result<f64> {
    check_delta(delta)?;
    check_lambda(lambda)?;
    check_betas(betas)?;
    let (p, g) = asymptotic_terms(betas);
    Ok(delta * g - lambda * p)
}
