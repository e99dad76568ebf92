//! One-dimensional derivative-free minimization.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    pub evaluations: usize,
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`
/// using at most `budget` evaluations (at least 2). The best point seen is
/// returned, which keeps the result sensible when `f` is not unimodal.
pub fn golden_section<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, budget: usize) -> Minimum {
    let (mut a, mut b) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    let mut x1 = b - INV_PHI * (b - a);
    let mut x2 = a + INV_PHI * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    let mut evaluations = 2;
    let mut best = if f1 <= f2 { (x1, f1) } else { (x2, f2) };
    while evaluations < budget.max(2) {
        if f1 <= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - INV_PHI * (b - a);
            f1 = f(x1);
            if f1 < best.1 {
                best = (x1, f1);
            }
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + INV_PHI * (b - a);
            f2 = f(x2);
            if f2 < best.1 {
                best = (x2, f2);
            }
        }
        evaluations += 1;
    }
    Minimum {
        x: best.0,
        value: best.1,
        evaluations,
    }
}

/// Evaluate `f` on `points` evenly spaced points of `[lo, hi]` and return the
/// smallest value. Ties keep the leftmost point.
pub fn grid_scan<F: FnMut(f64) -> f64>(mut f: F, lo: f64, hi: f64, points: usize) -> Minimum {
    let points = points.max(2);
    let mut best = (lo, f64::INFINITY);
    for i in 0..points {
        let x = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        let v = f(x);
        if v < best.1 {
            best = (x, v);
        }
    }
    Minimum {
        x: best.0,
        value: best.1,
        evaluations: points,
    }
}
