//! Parameter sweeps over one scenario key.
//!
//! A sweep file is a scenario file plus:
//!
//! ```text
//! sweep.key = reserved_mu          # any numeric scenario key
//! sweep.grid = 0.3, 0.4, 0.5       # strictly increasing
//! sweep.replications = 20          # seeds seed, seed+1, ... (default 1)
//! sweep.balance = class.1.lambda   # optional: keeps key + balance constant
//! ```

use rayon::prelude::*;

use qosprice::pricing::{certainty_report, price_packets};
use qosprice::{Discipline, PricingScheme, Tier};

use crate::analysis::tier_targets;
use crate::commands::costs;
use crate::error::{CliError, Result};
use crate::scenario_file::{build, parse_entries, Entry, ScenarioFile};

pub const SWEEP_HEADER: &str = "swept_key,value,seed,tier,status,n,mean_delay,var_delay,mean_price,var_price,analytic_mean_delay,analytic_var_delay";

const SWEEPABLE: [&str; 6] = [
    "mu",
    "horizon",
    "warmup",
    "value_of_time",
    "reserved_mu",
    "capacity",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: Vec<Entry>,
    pub key: String,
    pub grid: Vec<f64>,
    pub replications: u32,
    pub balance: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointStatus {
    Ok,
    SkippedUnstable,
    SkippedInvalid,
}

impl PointStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            PointStatus::Ok => "ok",
            PointStatus::SkippedUnstable => "skipped-unstable",
            PointStatus::SkippedInvalid => "skipped-invalid",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TierStats {
    pub n: usize,
    pub mean_delay: Option<f64>,
    pub var_delay: Option<f64>,
    pub mean_price: Option<f64>,
    pub var_price: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub seed: u64,
    pub tier: Tier,
    pub status: PointStatus,
    pub stats: Option<TierStats>,
    pub analytic_mean_delay: Option<f64>,
    pub analytic_var_delay: Option<f64>,
}

fn find<'a>(entries: &'a [Entry], key: &str) -> Option<&'a Entry> {
    entries.iter().find(|e| e.key == key)
}

fn value_of(e: &Entry) -> Result<f64> {
    e.value
        .parse()
        .map_err(|_| CliError::parse(e.line, format!("`{}` is not a number", e.value)))
}

pub fn parse_sweep(text: &str) -> Result<SweepSpec> {
    let entries = parse_entries(text)?;
    let (sweep, base): (Vec<Entry>, Vec<Entry>) = entries
        .into_iter()
        .partition(|e| e.key.starts_with("sweep."));
    let mut key = None;
    let mut grid = None;
    let mut replications = 1;
    let mut balance = None;
    for e in &sweep {
        match e.key.as_str() {
            "sweep.key" => key = Some(e),
            "sweep.grid" => {
                let values = e
                    .value
                    .split(',')
                    .map(|v| v.trim().parse::<f64>())
                    .collect::<std::result::Result<Vec<_>, _>>()
                    .map_err(|_| {
                        CliError::parse(e.line, "grid must be a comma-separated list of numbers")
                    })?;
                if values.iter().any(|v| !v.is_finite())
                    || values.windows(2).any(|w| !(w[0] < w[1]))
                {
                    return Err(CliError::parse(
                        e.line,
                        "grid must be finite and strictly increasing",
                    ));
                }
                grid = Some(values);
            }
            "sweep.replications" => {
                replications =
                    e.value
                        .parse::<u32>()
                        .ok()
                        .filter(|&r| r >= 1)
                        .ok_or_else(|| {
                            CliError::parse(e.line, "replications must be a positive integer")
                        })?;
            }
            "sweep.balance" => balance = Some(e),
            _ => return Err(CliError::parse(e.line, format!("unknown key `{}`", e.key))),
        }
    }
    let missing = |k: &str| CliError::Parse {
        line: None,
        message: format!("missing required key `{k}`"),
    };
    let key = key.ok_or_else(|| missing("sweep.key"))?;
    let grid = grid.ok_or_else(|| missing("sweep.grid"))?;

    let base_file = build(&base)?;
    let is_class_lambda = |k: &str| {
        k.strip_prefix("class.")
            .and_then(|r| r.strip_suffix(".lambda"))
            .and_then(|id| id.parse::<u32>().ok())
            .is_some_and(|id| base_file.scenario.class(id).is_some())
    };
    let applicable = match key.value.as_str() {
        "reserved_mu" => matches!(
            base_file.scenario.discipline,
            Discipline::Partitioned { .. }
        ),
        "capacity" => matches!(base_file.scenario.discipline, Discipline::Blocking { .. }),
        k => SWEEPABLE.contains(&k) || is_class_lambda(k),
    };
    if !applicable {
        return Err(CliError::parse(
            key.line,
            format!("`{}` cannot be swept here", key.value),
        ));
    }
    if let Some(b) = balance {
        if !is_class_lambda(&b.value) || b.value == key.value {
            return Err(CliError::parse(
                b.line,
                "balance must name another declared class.<id>.lambda",
            ));
        }
        if find(&base, &key.value).is_none() {
            return Err(CliError::parse(
                b.line,
                format!("balancing needs `{}` in the base scenario", key.value),
            ));
        }
    }
    Ok(SweepSpec {
        key: key.value.clone(),
        grid,
        replications,
        balance: balance.map(|b| b.value.clone()),
        base,
    })
}

fn set(entries: &mut Vec<Entry>, key: &str, value: f64) {
    let value = value.to_string();
    match entries.iter_mut().find(|e| e.key == key) {
        Some(e) => e.value = value,
        None => entries.push(Entry {
            key: key.to_string(),
            value,
            line: 0,
        }),
    }
}

impl SweepSpec {
    fn point(&self, value: f64) -> Result<ScenarioFile> {
        let mut entries = self.base.clone();
        if let Some(b) = &self.balance {
            let total = value_of(find(&self.base, &self.key).expect("checked at parse"))?
                + value_of(find(&self.base, b).expect("checked at parse"))?;
            set(&mut entries, b, total - value);
        }
        set(&mut entries, &self.key, value);
        build(&entries)
    }

    /// Runs every grid point and replication; rows come back ordered by
    /// grid value, then seed, then tier.
    pub fn run(&self, base_seed: Option<u64>, sample: Option<usize>) -> Result<Vec<SweepRow>> {
        let base = build(&self.base)?;
        let first_seed = base_seed.unwrap_or(base.scenario.seed);
        let tiers: Vec<Tier> = Tier::ALL
            .into_iter()
            .filter(|t| base.scenario.classes.iter().any(|c| c.tier == *t))
            .collect();
        let jobs: Vec<(f64, u64)> = self
            .grid
            .iter()
            .flat_map(|&v| (0..u64::from(self.replications)).map(move |r| (v, first_seed + r)))
            .collect();
        let rows = jobs
            .par_iter()
            .map(|&(value, seed)| self.run_point(value, seed, &tiers, sample))
            .collect::<Vec<_>>();
        Ok(rows.into_iter().flatten().collect())
    }

    fn run_point(
        &self,
        value: f64,
        seed: u64,
        tiers: &[Tier],
        sample: Option<usize>,
    ) -> Vec<SweepRow> {
        let row = |tier, status, stats, (m, v): (Option<f64>, Option<f64>)| SweepRow {
            value,
            seed,
            tier,
            status,
            stats,
            analytic_mean_delay: m,
            analytic_var_delay: v,
        };
        let Ok(mut file) = self.point(value) else {
            return tiers
                .iter()
                .map(|&t| row(t, PointStatus::SkippedInvalid, None, (None, None)))
                .collect();
        };
        file.scenario.seed = seed;
        let s = &file.scenario;
        if s.is_saturated() {
            return tiers
                .iter()
                .map(|&t| row(t, PointStatus::SkippedUnstable, None, (None, None)))
                .collect();
        }
        let trace = qosprice::simulate(s).expect("scenario validated at build");
        let prices = price_packets(
            &costs(&trace, sample),
            PricingScheme::MarginalCost {
                value_of_time: file.value_of_time,
            },
        );
        let report = certainty_report(&trace, &prices);
        tiers
            .iter()
            .map(|&t| {
                let r = report.tier(t).expect("tier in use has a row");
                let stats = TierStats {
                    n: r.delivered,
                    mean_delay: r.delay.map(|d| d.mean),
                    var_delay: r.delay.map(|d| d.variance),
                    mean_price: r.price.map(|p| p.mean),
                    var_price: r.price.map(|p| p.variance),
                };
                row(t, PointStatus::Ok, Some(stats), tier_targets(s, t))
            })
            .collect()
    }
}

fn num(v: Option<f64>, missing: &str) -> String {
    v.map_or_else(|| missing.to_string(), |x| x.to_string())
}

pub fn render_sweep(key: &str, rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        let stats = match r.stats {
            Some(s) => format!(
                "{},{},{},{},{}",
                s.n,
                num(s.mean_delay, "empty"),
                num(s.var_delay, "empty"),
                num(s.mean_price, "empty"),
                num(s.var_price, "empty"),
            ),
            None => "0,,,,".to_string(),
        };
        out.push_str(&format!(
            "{key},{},{},{},{},{stats},{},{}\n",
            r.value,
            r.seed,
            r.tier,
            r.status.as_str(),
            num(r.analytic_mean_delay, ""),
            num(r.analytic_var_delay, ""),
        ));
    }
    out
}
