use std::fs;
use std::path::PathBuf;

use clap::Args;
use timer_select::model::{MetricDistribution, Population, SelectionParams};
use timer_select::table::parse_real;
use timer_select::{Error, Result};

/// Slot grid: either `--n` in window units or `--delta` with `--tmax`.
#[derive(Debug, Clone, Args)]
pub struct Grid {
    /// Slot count: `10`, `0..50` (inclusive) or `1,5,10`.
    #[arg(long, conflicts_with_all = ["delta", "tmax"])]
    pub n: Option<String>,
    /// Vulnerability window in seconds.
    #[arg(long, requires = "tmax")]
    pub delta: Option<f64>,
    /// Maximum selection duration in seconds.
    #[arg(long, requires = "delta")]
    pub tmax: Option<f64>,
}

/// One point of the slot grid.
#[derive(Debug, Clone, Copy)]
pub struct Slots {
    pub n: usize,
    pub delta: f64,
    pub t_max: f64,
}

impl Grid {
    pub fn resolve(&self) -> Result<Vec<Slots>> {
        match (&self.n, self.delta, self.tmax) {
            (Some(spec), _, _) => Ok(parse_counts(spec)?
                .into_iter()
                .map(|n| Slots {
                    n,
                    delta: 1.0,
                    t_max: n as f64,
                })
                .collect()),
            (None, Some(delta), Some(t_max)) => {
                let n = SelectionParams::new(1, delta, t_max)?.n_slots();
                Ok(vec![Slots { n, delta, t_max }])
            }
            _ => Err(Error::InvalidParameter {
                name: "n",
                reason: "give --n, or --delta with --tmax".into(),
            }),
        }
    }

    pub fn single(&self) -> Result<Slots> {
        match self.resolve()?.as_slice() {
            [one] => Ok(*one),
            _ => Err(Error::InvalidParameter {
                name: "n",
                reason: "this command takes a single slot count".into(),
            }),
        }
    }
}

pub fn parse_counts(spec: &str) -> Result<Vec<usize>> {
    let bad = || Error::InvalidParameter {
        name: "n",
        reason: format!("expected `N`, `A..B` or a list, got `{spec}`"),
    };
    let mut out = Vec::new();
    for part in spec.split(',') {
        let part = part.trim();
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().map_err(|_| bad())?;
            let b: usize = b.trim().trim_start_matches('=').parse().map_err(|_| bad())?;
            if b < a {
                return Err(bad());
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().map_err(|_| bad())?);
        }
    }
    Ok(out)
}

pub fn parse_populations(spec: &str) -> Result<Vec<Population>> {
    spec.split(',')
        .map(|s| {
            s.trim().parse().map_err(|_| Error::InvalidParameter {
                name: "k",
                reason: format!("expected a positive integer or `inf`, got `{}`", s.trim()),
            })
        })
        .collect::<Result<Vec<Population>>>()
        .and_then(|pops| {
            if pops.contains(&Population::Finite(0)) {
                Err(Error::InvalidParameter {
                    name: "k",
                    reason: "k must be at least 1".into(),
                })
            } else {
                Ok(pops)
            }
        })
}

pub fn parse_finite_k(spec: &str) -> Result<u32> {
    match parse_populations(spec)?.as_slice() {
        [Population::Finite(k)] => Ok(*k),
        _ => Err(Error::InvalidParameter {
            name: "k",
            reason: format!("expected a single finite k, got `{spec}`"),
        }),
    }
}

/// `0.6`, `0.6,0.87` or `start:stop:step` (inclusive).
pub fn parse_etas(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidParameter {
        name: "eta",
        reason: format!("expected a number, list or `a:b:step`, got `{spec}`"),
    };
    let mut out = Vec::new();
    for part in spec.split(',') {
        let fields: Vec<&str> = part.split(':').map(str::trim).collect();
        match fields.as_slice() {
            [x] => out.push(x.parse().map_err(|_| bad())?),
            [a, b, step] => {
                let (a, b, step): (f64, f64, f64) = (
                    a.parse().map_err(|_| bad())?,
                    b.parse().map_err(|_| bad())?,
                    step.parse().map_err(|_| bad())?,
                );
                if step.is_nan() || step <= 0.0 || b < a {
                    return Err(bad());
                }
                let count = ((b - a) / step + 1e-9).floor() as usize;
                out.extend((0..=count).map(|i| a + i as f64 * step));
            }
            _ => return Err(bad()),
        }
    }
    if let Some(eta) = out.iter().find(|e| !(0.0..=1.0).contains(*e)) {
        return Err(Error::InvalidParameter {
            name: "eta",
            reason: format!("must lie in [0, 1], got {eta}"),
        });
    }
    Ok(out)
}

/// `uniform`, `exp:MEAN`, `rayleigh:SCALE` or `table:PATH`.
pub fn parse_distribution(spec: &str) -> Result<MetricDistribution> {
    let (kind, arg) = spec.split_once(':').unwrap_or((spec, ""));
    let number = |name| {
        arg.parse::<f64>().map_err(|_| Error::InvalidParameter {
            name: "dist",
            reason: format!("`{name}` needs a number, got `{arg}`"),
        })
    };
    match kind {
        "uniform" => Ok(MetricDistribution::Uniform01),
        "exp" => MetricDistribution::exponential(number("exp")?),
        "rayleigh" => MetricDistribution::rayleigh(number("rayleigh")?),
        "table" => read_cdf(&PathBuf::from(arg)),
        _ => Err(Error::InvalidParameter {
            name: "dist",
            reason: format!("expected uniform, exp:MEAN, rayleigh:SCALE or table:PATH, got `{spec}`"),
        }),
    }
}

/// Two-column `x,F(x)` file; `#` comments and a non-numeric header are skipped.
fn read_cdf(path: &PathBuf) -> Result<MetricDistribution> {
    let text = fs::read_to_string(path).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    let mut points = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (x, f) = line
            .split_once(',')
            .ok_or_else(|| Error::Parse(format!("{}:{}: expected `x,F`", path.display(), i + 1)))?;
        match (parse_real(x), parse_real(f)) {
            (Ok(x), Ok(f)) => points.push((x, f)),
            _ if points.is_empty() => continue,
            _ => return Err(Error::Parse(format!("{}:{}: bad row `{line}`", path.display(), i + 1))),
        }
    }
    MetricDistribution::tabulated(points)
}
