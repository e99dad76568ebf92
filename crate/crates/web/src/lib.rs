//! Browser bindings for the demo page in `www/`.
//!
//! Each export wraps a plain function of the same name prefixed with `run_`
//! so the logic can be tested natively.

use timer_select::model::{Population, SelectionParams};
use timer_select::simulator::{self, TimeConvention};
use timer_select::{analysis, scheme1, scheme2};
use wasm_bindgen::prelude::*;

/// Largest slot count the page accepts.
pub const MAX_SLOTS: u32 = 500;
/// Largest simulation the page accepts.
pub const MAX_TRIALS: u32 = 2_000_000;

fn population(k: &str) -> Result<Population, String> {
    let pop: Population = k.trim().parse().map_err(|e: timer_select::Error| e.to_string())?;
    if pop == Population::Finite(0) {
        return Err("k must be at least 1".into());
    }
    Ok(pop)
}

fn check_slots(n: u32) -> Result<usize, String> {
    if n > MAX_SLOTS {
        return Err(format!("N is limited to {MAX_SLOTS} here"));
    }
    Ok(n as usize)
}

pub fn run_p_star_curve(k: &str, n_max: u32) -> Result<Vec<f64>, String> {
    scheme1::p_star_curve(population(k)?, check_slots(n_max)?).map_err(|e| e.to_string())
}

/// Constrained optimum as shown on the page.
#[wasm_bindgen]
#[derive(Debug, Clone, PartialEq)]
pub struct Constrained {
    lengths: Vec<f64>,
    lambda_over_delta: f64,
    p_success: f64,
    gamma_over_delta: f64,
    no_transmit_mass: f64,
}

#[wasm_bindgen]
impl Constrained {
    /// `alpha_j` for finite `k`, `beta_j` in the limit.
    #[wasm_bindgen(getter)]
    pub fn lengths(&self) -> Vec<f64> {
        self.lengths.clone()
    }

    #[wasm_bindgen(getter)]
    pub fn lambda_over_delta(&self) -> f64 {
        self.lambda_over_delta
    }

    #[wasm_bindgen(getter)]
    pub fn p_success(&self) -> f64 {
        self.p_success
    }

    #[wasm_bindgen(getter)]
    pub fn gamma_over_delta(&self) -> f64 {
        self.gamma_over_delta
    }

    /// `NaN` in the limit.
    #[wasm_bindgen(getter)]
    pub fn no_transmit_mass(&self) -> f64 {
        self.no_transmit_mass
    }
}

pub fn run_scheme2(k: &str, n: u32, eta: f64) -> Result<Constrained, String> {
    let c = scheme2::solve_constrained(population(k)?, check_slots(n)?, 1.0, eta).map_err(|e| e.to_string())?;
    let s = c.solution;
    Ok(Constrained {
        lambda_over_delta: s.lambda_over_delta(),
        p_success: s.p_success,
        gamma_over_delta: s.gamma_over_delta(),
        no_transmit_mass: s.no_transmit_mass().unwrap_or(f64::NAN),
        lengths: s.lengths,
    })
}

/// `[success, stderr, mean_time, stderr, exact_success, exact_time]` for the
/// success optimum (`eta < 0`) or the constrained optimum, times in windows.
pub fn run_simulate(k: u32, n: u32, eta: f64, trials: u32, seed: u64) -> Result<Vec<f64>, String> {
    if trials == 0 || trials > MAX_TRIALS {
        return Err(format!("trials must be between 1 and {MAX_TRIALS}"));
    }
    let n = check_slots(n)?;
    let params = SelectionParams::normalized(k, n).map_err(|e| e.to_string())?;
    let pop = Population::Finite(k);
    let mapping = if eta < 0.0 {
        scheme1::optimize(pop, n).and_then(|s| s.discrete_mapping(params))
    } else {
        scheme2::solve_constrained(pop, n, 1.0, eta).and_then(|c| c.solution.discrete_mapping(params))
    }
    .map_err(|e| e.to_string())?;
    let exact = analysis::analyze(mapping.alphas(), k, 1.0, None).map_err(|e| e.to_string())?;
    let stats = simulator::estimate(&mapping, &params, u64::from(trials), seed, TimeConvention::CapAtNSlots)
        .map_err(|e| e.to_string())?;
    Ok(vec![
        stats.success_prob,
        stats.success_stderr,
        stats.mean_selection_time,
        stats.mean_selection_time_stderr,
        exact.success_prob,
        exact.expected_time,
    ])
}

/// `P*_N` for `N = 0..=n_max`; `k` is an integer or `inf`.
#[wasm_bindgen]
pub fn p_star_curve(k: &str, n_max: u32) -> Result<Vec<f64>, JsError> {
    run_p_star_curve(k, n_max).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn scheme2_lengths(k: &str, n: u32, eta: f64) -> Result<Constrained, JsError> {
    run_scheme2(k, n, eta).map_err(|e| JsError::new(&e))
}

/// Seeds are passed as `f64` because JavaScript numbers are; fractions are dropped.
#[wasm_bindgen]
pub fn simulate(k: u32, n: u32, eta: f64, trials: u32, seed: f64) -> Result<Vec<f64>, JsError> {
    run_simulate(k, n, eta, trials, seed.max(0.0) as u64).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn version() -> String {
    timer_select::VERSION.to_string()
}
