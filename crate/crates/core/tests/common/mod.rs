//! Reference formulas evaluated directly, without compensation or
//! log-space powers, for cross-checking the library.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Best node alone in its slot: `sum_l k a_l (1 - A_l)^(k-1)` with
/// `A_l = a_0 + ... + a_l`.
pub fn success(alphas: &[f64], k: u32) -> f64 {
    let mut cum = 0.0;
    let mut p = 0.0;
    for &a in alphas {
        cum += a;
        p += f64::from(k) * a * (1.0 - cum).max(0.0).powi(k as i32 - 1);
    }
    p
}

/// Mean of `min(T_(1), N delta)`: `delta * sum_{l<N} (1 - A_l)^k`.
pub fn selection_time(alphas: &[f64], k: u32, delta: f64) -> f64 {
    let n = alphas.len() - 1;
    let mut cum = 0.0;
    let mut g = 0.0;
    for &a in &alphas[..n] {
        cum += a;
        g += (1.0 - cum).max(0.0).powi(k as i32);
    }
    delta * g
}

pub fn poisson_success(betas: &[f64]) -> f64 {
    let mut cum = 0.0;
    betas
        .iter()
        .map(|&b| {
            cum += b;
            b * (-cum).exp()
        })
        .sum()
}

/// Visit every `(a_0, ..., a_n)` on the `1/steps` simplex grid with
/// `sum <= 1` and return the maximum of `score`.
pub fn grid_max(n_slots: usize, steps: u32, score: impl Fn(&[f64]) -> f64 + Sync) -> f64 {
    use rayon::prelude::*;
    let h = 1.0 / f64::from(steps);
    (0..=steps)
        .into_par_iter()
        .map(|first| {
            let mut idx = vec![0u32; n_slots + 1];
            idx[0] = first;
            let mut alphas = vec![0.0; n_slots + 1];
            let mut best = f64::NEG_INFINITY;
            loop {
                for (a, &i) in alphas.iter_mut().zip(&idx) {
                    *a = f64::from(i) * h;
                }
                best = best.max(score(&alphas));
                // odometer over idx[1..] with the sum bound
                let mut pos = n_slots;
                loop {
                    if pos == 0 {
                        return best;
                    }
                    let used: u32 = idx[..pos].iter().sum();
                    if used + idx[pos] < steps {
                        idx[pos] += 1;
                        break;
                    }
                    idx[pos] = 0;
                    pos -= 1;
                }
            }
        })
        .reduce(|| f64::NEG_INFINITY, f64::max)
}

/// Interval lengths with a random share left silent.
pub fn random_alphas(rng: &mut ChaCha8Rng, n_slots: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n_slots + 2).map(|_| -(1.0 - rng.random::<f64>()).ln()).collect();
    let total: f64 = w.iter().sum();
    w[..=n_slots].iter().map(|x| x / total * (1.0 - 1e-12)).collect()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
