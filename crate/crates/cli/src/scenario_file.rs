//! Flat `key = value` scenario files.
//!
//! ```text
//! # comments run to end of line
//! discipline = partitioned
//! mu = 1
//! reserved_mu = 0.5
//! horizon = 100000
//! class.0.lambda = 0.2
//! class.0.tier = reserved
//! class.1.lambda = 0.4
//! class.1.service = exp(1)
//! class.1.tier = best_effort
//! ```
//!
//! Defaults: `warmup = horizon / 10`, `seed = 1`, `value_of_time = 1`,
//! `policy = non-preemptive`, `capacity = 1`, `class.<id>.service = exp(1)`,
//! `class.<id>.tier = default`.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use qosprice::{Discipline, PriorityPolicy, Scenario, ServiceDist, Tier, TrafficClassSpec};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Entry {
    pub key: String,
    pub value: String,
    pub line: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioFile {
    pub scenario: Scenario,
    pub value_of_time: f64,
}

const GLOBAL_KEYS: [&str; 9] = [
    "discipline",
    "mu",
    "horizon",
    "warmup",
    "seed",
    "value_of_time",
    "reserved_mu",
    "capacity",
    "policy",
];

/// Splits a document into entries. Rejects malformed lines and repeated
/// keys; does not interpret values.
pub fn parse_entries(text: &str) -> Result<Vec<Entry>> {
    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (k, raw) in text.lines().enumerate() {
        let line = k + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let (key, value) = content.split_once('=').ok_or_else(|| {
            CliError::parse(line, format!("expected `key = value`, got `{content}`"))
        })?;
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(CliError::parse(
                line,
                format!("expected `key = value`, got `{content}`"),
            ));
        }
        if !seen.insert(key.to_string()) {
            return Err(CliError::parse(line, format!("duplicate key `{key}`")));
        }
        entries.push(Entry {
            key: key.to_string(),
            value: value.to_string(),
            line,
        });
    }
    Ok(entries)
}

fn number<T: std::str::FromStr>(e: &Entry) -> Result<T> {
    e.value.parse().map_err(|_| {
        CliError::parse(
            e.line,
            format!("`{}` is not a valid number for `{}`", e.value, e.key),
        )
    })
}

/// `exp(rate)`, `hyperexp(p@rate, p@rate, ...)` or `h2(mean, cov)`.
pub fn parse_service(text: &str) -> std::result::Result<ServiceDist, String> {
    let text = text.trim();
    let (name, args) = text
        .strip_suffix(')')
        .and_then(|t| t.split_once('('))
        .ok_or_else(|| format!("malformed service distribution `{text}`"))?;
    let nums = |s: &str| -> std::result::Result<f64, String> {
        s.trim()
            .parse()
            .map_err(|_| format!("`{}` is not a number", s.trim()))
    };
    let dist = match name.trim() {
        "exp" => ServiceDist::Exponential { rate: nums(args)? },
        "hyperexp" => {
            let branches = args
                .split(',')
                .map(|b| {
                    let (p, r) = b.split_once('@').ok_or_else(|| {
                        format!("hyperexp branch `{}` must be prob@rate", b.trim())
                    })?;
                    Ok((nums(p)?, nums(r)?))
                })
                .collect::<std::result::Result<Vec<_>, String>>()?;
            ServiceDist::HyperExponential { branches }
        }
        "h2" => {
            let parts: Vec<&str> = args.split(',').collect();
            if parts.len() != 2 {
                return Err("h2 takes (mean, cov)".into());
            }
            ServiceDist::balanced_h2(nums(parts[0])?, nums(parts[1])?).map_err(|e| e.0)?
        }
        other => return Err(format!("unknown service distribution `{other}`")),
    };
    dist.validate().map_err(|e| e.0)?;
    Ok(dist)
}

#[derive(Default)]
struct ClassDraft<'a> {
    lambda: Option<&'a Entry>,
    service: Option<&'a Entry>,
    tier: Option<&'a Entry>,
    first_line: usize,
}

pub fn build(entries: &[Entry]) -> Result<ScenarioFile> {
    let mut globals: BTreeMap<&str, &Entry> = BTreeMap::new();
    let mut classes: BTreeMap<u32, ClassDraft> = BTreeMap::new();
    for e in entries {
        if let Some(rest) = e.key.strip_prefix("class.") {
            let (id, field) = rest
                .split_once('.')
                .ok_or_else(|| CliError::parse(e.line, format!("unknown key `{}`", e.key)))?;
            let id: u32 = id.parse().map_err(|_| {
                CliError::parse(
                    e.line,
                    format!("class id `{id}` is not a nonnegative integer"),
                )
            })?;
            let draft = classes.entry(id).or_insert_with(|| ClassDraft {
                first_line: e.line,
                ..Default::default()
            });
            match field {
                "lambda" => draft.lambda = Some(e),
                "service" => draft.service = Some(e),
                "tier" => draft.tier = Some(e),
                _ => return Err(CliError::parse(e.line, format!("unknown key `{}`", e.key))),
            }
        } else if let Some(&k) = GLOBAL_KEYS.iter().find(|&&k| k == e.key) {
            globals.insert(k, e);
        } else {
            return Err(CliError::parse(e.line, format!("unknown key `{}`", e.key)));
        }
    }

    let missing = |key: &str| CliError::Parse {
        line: None,
        message: format!("missing required key `{key}`"),
    };
    let discipline_entry = globals
        .get("discipline")
        .ok_or_else(|| missing("discipline"))?;
    let applies = |key: &str, discipline: &str| -> Result<()> {
        match globals.get(key) {
            Some(e) if discipline_entry.value != discipline => Err(CliError::parse(
                e.line,
                format!(
                    "`{key}` does not apply to discipline `{}`",
                    discipline_entry.value
                ),
            )),
            _ => Ok(()),
        }
    };
    applies("reserved_mu", "partitioned")?;
    applies("capacity", "blocking")?;
    applies("policy", "priority")?;

    let discipline = match discipline_entry.value.as_str() {
        "fifo" => Discipline::Fifo,
        "partitioned" => Discipline::Partitioned {
            reserved_mu: number(
                globals
                    .get("reserved_mu")
                    .ok_or_else(|| missing("reserved_mu"))?,
            )?,
        },
        "priority" => Discipline::Priority {
            policy: match globals.get("policy").map(|e| (e.value.as_str(), e.line)) {
                None | Some(("non-preemptive", _)) => PriorityPolicy::NonPreemptive,
                Some(("preemptive-resume", _)) => PriorityPolicy::PreemptiveResume,
                Some((other, line)) => {
                    return Err(CliError::parse(
                        line,
                        format!("unknown priority policy `{other}`"),
                    ))
                }
            },
        },
        "blocking" => Discipline::Blocking {
            capacity: globals.get("capacity").map_or(Ok(1), |e| number(e))?,
        },
        other => {
            return Err(CliError::parse(
                discipline_entry.line,
                format!("unknown discipline `{other}`"),
            ))
        }
    };

    let mu: f64 = number(globals.get("mu").ok_or_else(|| missing("mu"))?)?;
    let horizon: f64 = number(globals.get("horizon").ok_or_else(|| missing("horizon"))?)?;
    let warmup: f64 = globals
        .get("warmup")
        .map_or(Ok(horizon / 10.0), |e| number(e))?;
    let seed: u64 = globals.get("seed").map_or(Ok(1), |e| number(e))?;
    let value_of_time: f64 = globals
        .get("value_of_time")
        .map_or(Ok(1.0), |e| number(e))?;
    if let Some(e) = globals.get("value_of_time") {
        if !(value_of_time > 0.0) {
            return Err(CliError::parse(e.line, "value_of_time must be positive"));
        }
    }

    if classes.is_empty() {
        return Err(CliError::Parse {
            line: None,
            message: "scenario declares no traffic classes".into(),
        });
    }
    let classes = classes
        .into_iter()
        .map(|(class_id, d)| {
            let lambda = d.lambda.ok_or_else(|| {
                CliError::parse(
                    d.first_line,
                    format!("class {class_id} has no `class.{class_id}.lambda`"),
                )
            })?;
            let service = match d.service {
                None => ServiceDist::Exponential { rate: 1.0 },
                Some(e) => parse_service(&e.value).map_err(|m| CliError::parse(e.line, m))?,
            };
            let tier = match d.tier {
                None => Tier::Default,
                Some(e) => e
                    .value
                    .parse()
                    .map_err(|err: qosprice::ScenarioError| CliError::parse(e.line, err.0))?,
            };
            Ok(TrafficClassSpec::new(
                class_id,
                number(lambda)?,
                service,
                tier,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let scenario = Scenario {
        classes,
        discipline,
        mu,
        horizon,
        warmup,
        seed,
    };
    scenario.validate().map_err(|e| CliError::Parse {
        line: None,
        message: e.to_string(),
    })?;
    Ok(ScenarioFile {
        scenario,
        value_of_time,
    })
}

pub fn parse_scenario(text: &str) -> Result<ScenarioFile> {
    build(&parse_entries(text)?)
}

pub fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

/// Identifier used in output tables: the file stem.
pub fn scenario_id(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scenario".into())
}
