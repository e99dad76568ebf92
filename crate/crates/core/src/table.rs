//! Lookup-table CSV files for optimal mappings.
//!
//! ```text
//! # k=5,N=2,p_star=6.1234567890123456e-1
//! j,alpha
//! 0,1.2345678901234567e-1
//! ...
//! ```
//!
//! Limit solutions use `k=inf` and a `j,beta` header. Scheme 2 tables carry
//! `eta`, `lambda_star`, `p` and `gamma` in the metadata line as well. Other
//! `#` lines are ignored when reading.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::model::Population;
use crate::{scheme1, scheme2};

/// Reals with 17 significant digits; infinities as `inf`/`-inf`.
pub fn fmt_real(x: f64) -> String {
    if x.is_nan() {
        "nan".to_string()
    } else if x == f64::INFINITY {
        "inf".to_string()
    } else if x == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{x:.16e}")
    }
}

pub fn parse_real(s: &str) -> Result<f64> {
    let s = s.trim();
    match s {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => s.parse().map_err(|_| Error::Parse(format!("`{s}` is not a number"))),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LookupTable {
    pub population: Population,
    pub lengths: Vec<f64>,
    /// Metadata entries in file order, `k` and `N` included.
    pub meta: Vec<(String, String)>,
}

impl LookupTable {
    pub fn from_scheme1(s: &scheme1::Solution) -> Self {
        Self {
            population: s.population,
            lengths: s.lengths.clone(),
            meta: vec![
                ("k".into(), s.population.to_string()),
                ("N".into(), s.n_slots().to_string()),
                ("p_star".into(), fmt_real(s.p_star)),
            ],
        }
    }

    pub fn from_scheme2(c: &scheme2::Constrained) -> Self {
        let s = &c.solution;
        Self {
            population: s.population,
            lengths: s.lengths.clone(),
            meta: vec![
                ("k".into(), s.population.to_string()),
                ("N".into(), s.n_slots().to_string()),
                ("p_star".into(), fmt_real(s.p_success)),
                ("eta".into(), fmt_real(c.eta)),
                ("lambda_star".into(), fmt_real(s.lambda)),
                ("p".into(), fmt_real(s.p_success)),
                ("gamma".into(), fmt_real(s.expected_time)),
            ],
        }
    }

    pub fn n_slots(&self) -> usize {
        self.lengths.len() - 1
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let meta: Vec<String> = self.meta.iter().map(|(k, v)| format!("{k}={v}")).collect();
        let _ = writeln!(out, "# {}", meta.join(","));
        let _ = writeln!(out, "j,{}", self.population.length_label());
        for (j, x) in self.lengths.iter().enumerate() {
            let _ = writeln!(out, "{j},{}", fmt_real(*x));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut meta: Option<Vec<(String, String)>> = None;
        let mut header: Option<String> = None;
        let mut lengths = Vec::new();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if meta.is_none() && rest.starts_with("k=") {
                    let entries = rest
                        .split(',')
                        .map(|kv| {
                            kv.split_once('=')
                                .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
                                .ok_or_else(|| Error::Parse(format!("line {}: bad metadata `{kv}`", lineno + 1)))
                        })
                        .collect::<Result<Vec<_>>>()?;
                    meta = Some(entries);
                }
                continue;
            }
            if header.is_none() {
                if line != "j,alpha" && line != "j,beta" {
                    return Err(Error::Parse(format!(
                        "line {}: expected `j,alpha` or `j,beta`, got `{line}`",
                        lineno + 1
                    )));
                }
                header = Some(line.to_string());
                continue;
            }
            let (j, x) = line
                .split_once(',')
                .ok_or_else(|| Error::Parse(format!("line {}: expected `j,value`", lineno + 1)))?;
            let j: usize = j
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("line {}: bad index `{j}`", lineno + 1)))?;
            if j != lengths.len() {
                return Err(Error::Parse(format!(
                    "line {}: expected index {}, got {j}",
                    lineno + 1,
                    lengths.len()
                )));
            }
            lengths.push(parse_real(x)?);
        }
        let meta = meta.ok_or_else(|| Error::Parse("missing `# k=..,N=..` metadata line".into()))?;
        let header = header.ok_or_else(|| Error::Parse("missing `j,alpha` / `j,beta` header".into()))?;
        if lengths.is_empty() {
            return Err(Error::Parse("table has no rows".into()));
        }
        let k = meta
            .iter()
            .find(|(k, _)| k == "k")
            .map(|(_, v)| v.clone())
            .ok_or_else(|| Error::Parse("metadata lacks `k`".into()))?;
        let population: Population = k.parse().map_err(|e: Error| Error::Parse(e.to_string()))?;
        if header != format!("j,{}", population.length_label()) {
            return Err(Error::Parse(format!("header `{header}` does not match k={population}")));
        }
        if let Some((_, n)) = meta.iter().find(|(k, _)| k == "N") {
            if n.parse::<usize>().ok() != Some(lengths.len() - 1) {
                return Err(Error::Parse(format!("N={n} but the table has {} rows", lengths.len())));
            }
        }
        Ok(Self {
            population,
            lengths,
            meta,
        })
    }
}
