//! `timersel`: optimal mappings, deadline sweeps, simulation and the
//! inverse-metric baseline, all as CSV.

mod args;

use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use timer_select::baselines::{self, BaselineConfig, Objective};
use timer_select::model::{ContinuousMapping, Population, SelectionParams, TimerRule};
use timer_select::simulator::{self, TimeConvention};
use timer_select::table::{fmt_real, LookupTable};
use timer_select::{analysis, scheme1, scheme2, Error, TimerMapping};

use args::{parse_distribution, parse_etas, parse_finite_k, parse_populations, Grid};

const SPLITTING: &str = include_str!("../data/splitting.csv");

#[derive(Debug, Parser)]
#[command(name = "timersel", version, about = "Optimal timer-based best-node selection")]
struct Cli {
    /// Write CSV here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    /// One row per interval.
    Rows,
    /// Lookup-table file readable by `simulate --table`.
    Table,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Goal {
    Success,
    Time,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Success-maximizing interval lengths.
    Scheme1 {
        /// Node counts, e.g. `5`, `2,5,inf`.
        #[arg(long)]
        k: String,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, value_enum, default_value = "rows")]
        format: Format,
    },
    /// Time-minimizing lengths under a success constraint.
    Scheme2 {
        #[arg(long)]
        k: String,
        #[command(flatten)]
        grid: Grid,
        /// Targets: `0.7`, `0.6,0.87` or `0.5:0.9:0.05`.
        #[arg(long)]
        eta: String,
        #[arg(long, value_enum, default_value = "rows")]
        format: Format,
    },
    /// Limit-population selection times for a 13 us window next to the
    /// published splitting figures.
    Table1 {
        #[arg(long, default_value_t = 13e-6)]
        delta: f64,
        /// Deadlines in seconds.
        #[arg(long, default_value = "288e-6,1296e-6")]
        tmax: String,
        #[arg(long, default_value = "0.75,0.85,0.90,0.98")]
        eta: String,
    },
    /// Monte Carlo estimate for a lookup table, an optimal mapping or an
    /// inverse-metric rule.
    Simulate {
        /// Number of contending nodes.
        #[arg(long)]
        k: String,
        #[command(flatten)]
        grid: Grid,
        /// Lookup table written by `scheme1/scheme2 --format table`.
        #[arg(long, conflicts_with_all = ["eta", "c"])]
        table: Option<PathBuf>,
        /// Use the constrained optimum for this target instead of the
        /// success optimum.
        #[arg(long)]
        eta: Option<f64>,
        /// Simulate `c / x` instead of an optimal mapping.
        #[arg(long, requires = "dist")]
        c: Option<f64>,
        #[arg(long)]
        dist: Option<String>,
        #[arg(long, default_value_t = 1_000_000)]
        trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "nslots")]
        time_convention: TimeConvention,
        /// Also write per-trial outcomes here.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Tune `c` of the inverse-metric rule `c / x` and compare with the
    /// optimal mapping.
    Baseline {
        #[arg(long)]
        k: String,
        #[command(flatten)]
        grid: Grid,
        #[arg(long, default_value = "exp:1")]
        dist: String,
        #[arg(long, value_enum, default_value = "success")]
        objective: Goal,
        /// Success target for `--objective time`.
        #[arg(long)]
        eta: Option<f64>,
        #[arg(long, default_value_t = baselines::DEFAULT_SEARCH_BUDGET)]
        budget: usize,
        /// Trials per objective evaluation.
        #[arg(long, default_value_t = baselines::DEFAULT_TRIALS_PER_EVAL)]
        trials: u64,
        #[arg(long, default_value_t = baselines::DEFAULT_FINAL_TRIALS)]
        final_trials: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "nslots")]
        time_convention: TimeConvention,
    },
}

enum Failure {
    Lib(Error),
    Io(String),
    /// Rows are still written before exiting.
    AllInfeasible(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Lib(e)
    }
}

impl Failure {
    fn exit_code(&self) -> u8 {
        match self {
            Failure::Lib(Error::Infeasible { .. } | Error::ConstraintUnmeetable { .. }) | Failure::AllInfeasible(_) => {
                3
            }
            Failure::Lib(Error::Numerical(_)) => 4,
            Failure::Lib(_) | Failure::Io(_) => 2,
        }
    }

    fn message(&self) -> String {
        match self {
            Failure::Lib(e) => e.to_string(),
            Failure::Io(e) => e.clone(),
            Failure::AllInfeasible(_) => "every requested eta is infeasible".into(),
        }
    }
}

type Outcome<T> = std::result::Result<T, Failure>;

fn metadata(seed: Option<u64>) -> String {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let seed = seed.map_or_else(|| "none".to_string(), |s| s.to_string());
    format!(
        "# invocation=\"timersel {}\",seed={seed},version={}\n",
        args.join(" "),
        timer_select::VERSION
    )
}

fn scheme1_cmd(k: &str, grid: &Grid, format: Format) -> Outcome<String> {
    let pops = parse_populations(k)?;
    let slots = grid.resolve()?;
    let mut out = String::new();
    match format {
        Format::Table => {
            let ([pop], [s]) = (pops.as_slice(), slots.as_slice()) else {
                return Err(Error::InvalidParameter {
                    name: "format",
                    reason: "table output needs a single k and N".into(),
                }
                .into());
            };
            out.push_str(&LookupTable::from_scheme1(&scheme1::optimize(*pop, s.n)?).to_csv());
        }
        Format::Rows => {
            out.push_str("k,N,j,alpha_or_beta,p_star\n");
            for pop in &pops {
                for s in &slots {
                    let sol = scheme1::optimize(*pop, s.n)?;
                    for (j, x) in sol.lengths.iter().enumerate() {
                        let _ = writeln!(out, "{pop},{},{j},{},{}", s.n, fmt_real(*x), fmt_real(sol.p_star));
                    }
                }
            }
        }
    }
    Ok(out)
}

fn scheme2_cmd(k: &str, grid: &Grid, eta: &str, format: Format) -> Outcome<String> {
    let pops = parse_populations(k)?;
    let slots = grid.resolve()?;
    let etas = parse_etas(eta)?;
    if let Format::Table = format {
        let ([pop], [s], [eta]) = (pops.as_slice(), slots.as_slice(), etas.as_slice()) else {
            return Err(Error::InvalidParameter {
                name: "format",
                reason: "table output needs a single k, N and eta".into(),
            }
            .into());
        };
        let c = scheme2::solve_constrained(*pop, s.n, s.delta, *eta)?;
        return Ok(LookupTable::from_scheme2(&c).to_csv());
    }
    let mut out = String::from("k,N,eta,lambda_star,p,gamma_over_delta,no_transmit_mass,gamma_seconds\n");
    let mut feasible = 0usize;
    for pop in &pops {
        for s in &slots {
            for &eta in &etas {
                match scheme2::solve_constrained(*pop, s.n, s.delta, eta) {
                    Ok(c) => {
                        feasible += 1;
                        let sol = &c.solution;
                        let mass = sol.no_transmit_mass().map_or_else(|| "na".to_string(), fmt_real);
                        let _ = writeln!(
                            out,
                            "{pop},{},{},{},{},{},{mass},{}",
                            s.n,
                            fmt_real(eta),
                            fmt_real(sol.lambda),
                            fmt_real(sol.p_success),
                            fmt_real(sol.gamma_over_delta()),
                            fmt_real(sol.expected_time)
                        );
                    }
                    Err(Error::Infeasible { .. }) => {
                        let _ = writeln!(out, "{pop},{},{},infeasible,,,,", s.n, fmt_real(eta));
                    }
                    Err(e) => return Err(e.into()),
                }
            }
        }
    }
    if feasible == 0 {
        return Err(Failure::AllInfeasible(out));
    }
    Ok(out)
}

fn table1_cmd(delta: f64, tmax: &str, eta: &str) -> Outcome<String> {
    let etas = parse_etas(eta)?;
    let deadlines = tmax
        .split(',')
        .map(|t| {
            t.trim().parse::<f64>().map_err(|_| Error::InvalidParameter {
                name: "tmax",
                reason: format!("`{t}` is not a number"),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut out = String::from("scheme,t_max_us,N,eta,p,selection_time_us,gamma_over_delta\n");
    for &t_max in &deadlines {
        let n = SelectionParams::new(1, delta, t_max)?.n_slots();
        for &eta in &etas {
            match scheme2::solve_constrained(Population::Asymptotic, n, delta, eta) {
                Ok(c) => {
                    let s = &c.solution;
                    let _ = writeln!(
                        out,
                        "timer,{},{n},{},{},{},{}",
                        fmt_real(t_max * 1e6),
                        fmt_real(eta),
                        fmt_real(s.p_success),
                        fmt_real(s.expected_time * 1e6),
                        fmt_real(s.gamma_over_delta())
                    );
                }
                Err(Error::Infeasible { .. }) => {
                    let _ = writeln!(
                        out,
                        "timer,{},{n},{},infeasible,,",
                        fmt_real(t_max * 1e6),
                        fmt_real(eta)
                    );
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    for line in SPLITTING.lines().filter(|l| !l.starts_with('#')).skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        if let [t, p, time] = fields.as_slice() {
            let _ = writeln!(out, "splitting_published,{t},,,{p},{time},");
        }
    }
    Ok(out)
}

/// Label, parameters, mapping and closed-form `(success, time)` when known.
type Prepared = (String, SelectionParams, Box<dyn TimerMapping>, Option<(f64, f64)>);

#[allow(clippy::too_many_arguments)]
fn simulate_cmd(
    k: &str,
    grid: &Grid,
    table: Option<&PathBuf>,
    eta: Option<f64>,
    c: Option<f64>,
    dist: Option<&str>,
    trials: u64,
    seed: u64,
    convention: TimeConvention,
    trace: Option<&PathBuf>,
) -> Outcome<String> {
    let k = parse_finite_k(k)?;
    let mut out = String::from(
        "mapping,k,N,trials,seed,time_convention,success,success_stderr,mean_time,mean_time_stderr,analytic_success,analytic_time,mean_time_over_delta\n",
    );
    let (label, params, mapping, analytic): Prepared = if let Some(c) = c {
        let s = grid.single()?;
        let params = SelectionParams::new(k, s.delta, s.t_max)?;
        let dist = parse_distribution(dist.unwrap_or("uniform"))?;
        let label = format!("inverse:{}:c={}", dist.name(), fmt_real(c));
        let m = ContinuousMapping::new(TimerRule::InverseMetric { c, distribution: dist }, s.t_max)?;
        (label, params, Box::new(m), None)
    } else {
        let (label, lookup, delta, t_max) = if let Some(path) = table {
            let text = fs::read_to_string(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
            let lookup = LookupTable::parse(&text)?;
            let n = lookup.n_slots();
            // a grid given alongside a table only sets the window
            let (delta, t_max) = match (grid.delta, grid.tmax) {
                (Some(d), Some(t)) => (d, t),
                _ => (1.0, n as f64),
            };
            (format!("table:{}", path.display()), lookup, delta, t_max)
        } else {
            let s = grid.single()?;
            let pop = Population::Finite(k);
            let lookup = match eta {
                Some(eta) => LookupTable::from_scheme2(&scheme2::solve_constrained(pop, s.n, s.delta, eta)?),
                None => LookupTable::from_scheme1(&scheme1::optimize(pop, s.n)?),
            };
            let label = eta.map_or_else(|| "scheme1".to_string(), |e| format!("scheme2:eta={}", fmt_real(e)));
            (label, lookup, s.delta, s.t_max)
        };
        let params = SelectionParams::new(k, delta, t_max)?;
        if params.n_slots() != lookup.n_slots() {
            return Err(Error::InvalidParameter {
                name: "tmax",
                reason: format!(
                    "window gives {} slots but the table has {}",
                    params.n_slots(),
                    lookup.n_slots()
                ),
            }
            .into());
        }
        let alphas = match lookup.population {
            Population::Finite(tk) if tk == k => lookup.lengths.clone(),
            Population::Finite(tk) => {
                return Err(Error::InvalidParameter {
                    name: "k",
                    reason: format!("table is for k={tk}, got --k {k}"),
                }
                .into())
            }
            Population::Asymptotic => timer_select::AsymptoticMapping::new(lookup.lengths.clone())?.scaled(k)?,
        };
        let m = timer_select::DiscreteMapping::new(params, alphas.clone())?;
        let r = analysis::analyze(&alphas, k, delta, None)?;
        (label, params, Box::new(m), Some((r.success_prob, r.expected_time)))
    };
    let stats = simulator::estimate(mapping.as_ref(), &params, trials, seed, convention)?;
    if let Some(path) = trace {
        let mut file = fs::File::create(path).map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
        simulator::write_trace(mapping.as_ref(), &params, trials, seed, convention, &mut file)
            .map_err(|e| Failure::Io(format!("{}: {e}", path.display())))?;
    }
    let (ap, at) = analytic.map_or((String::new(), String::new()), |(p, t)| (fmt_real(p), fmt_real(t)));
    let _ = writeln!(
        out,
        "{label},{k},{},{trials},{seed},{convention},{},{},{},{},{ap},{at},{}",
        params.n_slots(),
        fmt_real(stats.success_prob),
        fmt_real(stats.success_stderr),
        fmt_real(stats.mean_selection_time),
        fmt_real(stats.mean_selection_time_stderr),
        fmt_real(stats.mean_selection_time / params.delta())
    );
    Ok(out)
}

#[allow(clippy::too_many_arguments)]
fn baseline_cmd(
    k: &str,
    grid: &Grid,
    dist: &str,
    goal: Goal,
    eta: Option<f64>,
    budget: usize,
    trials: u64,
    final_trials: u64,
    seed: u64,
    convention: TimeConvention,
) -> Outcome<String> {
    let k = parse_finite_k(k)?;
    let slots = grid.resolve()?;
    let distribution = parse_distribution(dist)?;
    let objective = match (goal, eta) {
        (Goal::Success, None) => Objective::MaximizeSuccess,
        (Goal::Time, Some(eta)) => Objective::MinimizeTimeAtConstraint { eta },
        (Goal::Success, Some(_)) => {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: "only used with --objective time".into(),
            }
            .into())
        }
        (Goal::Time, None) => {
            return Err(Error::InvalidParameter {
                name: "eta",
                reason: "--objective time needs --eta".into(),
            }
            .into())
        }
    };
    let mut config = BaselineConfig::new(distribution, objective, seed);
    config.search_budget = budget;
    config.trials_per_eval = trials;
    config.final_trials = final_trials;
    config.time_convention = convention;
    let ratio_name = match objective {
        Objective::MaximizeSuccess => "failure_ratio",
        Objective::MinimizeTimeAtConstraint { .. } => "time_ratio",
    };
    let mut out = format!("distribution,k,N,c_star,objective,value,stderr,seed,optimal_value,{ratio_name}\n");
    for s in &slots {
        let params = SelectionParams::new(k, s.delta, s.t_max)?;
        let r = baselines::optimize_c(&config, &params)?;
        let (optimal, ratio) = match objective {
            Objective::MaximizeSuccess => {
                let p = scheme1::optimize_finite(k, s.n)?.p_star;
                (p, (1.0 - r.value) / (1.0 - p))
            }
            Objective::MinimizeTimeAtConstraint { eta } => {
                let g = scheme2::solve_constrained(Population::Finite(k), s.n, s.delta, eta)?
                    .solution
                    .expected_time;
                (g, r.value / g)
            }
        };
        let _ = writeln!(
            out,
            "{},{k},{},{},{},{},{},{seed},{},{}",
            config.distribution.name(),
            s.n,
            fmt_real(r.c_star),
            r.objective,
            fmt_real(r.value),
            fmt_real(r.stderr),
            fmt_real(optimal),
            fmt_real(ratio)
        );
    }
    Ok(out)
}

fn run(cli: &Cli) -> Outcome<String> {
    let (body, seed) = match &cli.command {
        Command::Scheme1 { k, grid, format } => (scheme1_cmd(k, grid, *format)?, None),
        Command::Scheme2 { k, grid, eta, format } => (scheme2_cmd(k, grid, eta, *format)?, None),
        Command::Table1 { delta, tmax, eta } => (table1_cmd(*delta, tmax, eta)?, None),
        Command::Simulate {
            k,
            grid,
            table,
            eta,
            c,
            dist,
            trials,
            seed,
            time_convention,
            trace,
        } => (
            simulate_cmd(
                k,
                grid,
                table.as_ref(),
                *eta,
                *c,
                dist.as_deref(),
                *trials,
                *seed,
                *time_convention,
                trace.as_ref(),
            )?,
            Some(*seed),
        ),
        Command::Baseline {
            k,
            grid,
            dist,
            objective,
            eta,
            budget,
            trials,
            final_trials,
            seed,
            time_convention,
        } => (
            baseline_cmd(
                k,
                grid,
                dist,
                *objective,
                *eta,
                *budget,
                *trials,
                *final_trials,
                *seed,
                *time_convention,
            )?,
            Some(*seed),
        ),
    };
    Ok(format!("{}{body}", metadata(seed)))
}

fn emit(out: Option<&PathBuf>, text: &str) -> Outcome<()> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| Failure::Io(format!("{}: {e}", path.display()))),
        None => io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| Failure::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match run(&cli) {
        Ok(text) => emit(cli.out.as_ref(), &text),
        Err(Failure::AllInfeasible(body)) => {
            emit(cli.out.as_ref(), &format!("{}{body}", metadata(None))).and(Err(Failure::AllInfeasible(String::new())))
        }
        Err(f) => Err(f),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("timersel: {}", f.message());
            ExitCode::from(f.exit_code())
        }
    }
}
