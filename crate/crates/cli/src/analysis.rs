//! Closed-form counterparts of a scenario.

use qosprice::analytics::{
    intserv_split, mm1_metrics, mm1k_blocking, priority_mm1_means, PartitionSpec, PriorityParams,
};
use qosprice::{
    AnalyticResult, AnalyticsError, Discipline, QueueParams, Scenario, ServiceDist, Tier,
};

use crate::error::{CliError, Result};

pub const ANALYZE_HEADER: &str = "queue,metric,value";

#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticRow {
    pub queue: &'static str,
    pub metric: &'static str,
    pub value: f64,
}

fn unstable(e: AnalyticsError) -> CliError {
    CliError::Unstable(e.to_string())
}

/// Packet-size rate shared by every class. Closed forms need exponential
/// sizes, identical across classes that share a server.
fn common_rate(s: &Scenario) -> Result<f64> {
    let mut rate = None;
    for c in &s.classes {
        let r = match c.service {
            ServiceDist::Exponential { rate } => rate,
            _ => {
                return Err(CliError::Unstable(format!(
                    "class {} has {} packet sizes; closed forms need exponential sizes",
                    c.class_id, c.service
                )))
            }
        };
        match rate {
            None => rate = Some(r),
            Some(prev) if prev != r => {
                return Err(CliError::Unstable(
                    "closed forms need one exponential size distribution for all classes".into(),
                ))
            }
            Some(_) => {}
        }
    }
    Ok(rate.unwrap_or(1.0))
}

fn lambda_where(s: &Scenario, pred: impl Fn(Tier) -> bool) -> f64 {
    s.classes
        .iter()
        .filter(|c| pred(c.tier))
        .map(|c| c.lambda)
        .sum()
}

fn mm1_rows(queue: &'static str, r: &AnalyticResult) -> Vec<AnalyticRow> {
    [
        ("mean_sojourn", r.mean_sojourn),
        ("var_sojourn", r.var_sojourn),
        ("std_sojourn", r.std_sojourn),
        ("mean_wait", r.mean_wait),
        ("utilization", r.utilization),
    ]
    .into_iter()
    .map(|(metric, value)| AnalyticRow {
        queue,
        metric,
        value,
    })
    .collect()
}

fn partition(s: &Scenario, reserved_mu: f64, rate: f64) -> PartitionSpec {
    PartitionSpec {
        total: QueueParams {
            lambda: lambda_where(s, |_| true),
            mu: s.mu * rate,
        },
        reserved_lambda: lambda_where(s, |t| t == Tier::Reserved),
        reserved_mu: reserved_mu * rate,
    }
}

fn priority(s: &Scenario, policy: qosprice::PriorityPolicy, rate: f64) -> PriorityParams {
    PriorityParams {
        lambda_hi: lambda_where(s, |t| t == Tier::HighPriority),
        lambda_lo: lambda_where(s, |t| t != Tier::HighPriority),
        mu: s.mu * rate,
        policy,
    }
}

pub fn analytic_rows(s: &Scenario) -> Result<Vec<AnalyticRow>> {
    let rate = common_rate(s)?;
    let total = QueueParams {
        lambda: lambda_where(s, |_| true),
        mu: s.mu * rate,
    };
    let rows = match s.discipline {
        Discipline::Fifo => mm1_rows("fifo", &mm1_metrics(total).map_err(unstable)?),
        Discipline::Partitioned { reserved_mu } => {
            let split = intserv_split(partition(s, reserved_mu, rate)).map_err(unstable)?;
            let mut rows = mm1_rows("reserved", &split.reserved);
            rows.extend(mm1_rows("best_effort", &split.best_effort));
            rows.push(AnalyticRow {
                queue: "best_effort",
                metric: "delay_increase",
                value: split.delay_increase,
            });
            rows.push(AnalyticRow {
                queue: "best_effort",
                metric: "var_increase",
                value: split.var_increase,
            });
            rows.extend(mm1_rows("unpartitioned", &split.baseline));
            rows
        }
        Discipline::Priority { policy } => {
            let m = priority_mm1_means(priority(s, policy, rate)).map_err(unstable)?;
            let fifo = mm1_metrics(total).map_err(unstable)?;
            vec![
                AnalyticRow {
                    queue: "high_priority",
                    metric: "mean_wait",
                    value: m.wait_hi,
                },
                AnalyticRow {
                    queue: "high_priority",
                    metric: "mean_sojourn",
                    value: m.sojourn_hi,
                },
                AnalyticRow {
                    queue: "low_priority",
                    metric: "mean_wait",
                    value: m.wait_lo,
                },
                AnalyticRow {
                    queue: "low_priority",
                    metric: "mean_sojourn",
                    value: m.sojourn_lo,
                },
                AnalyticRow {
                    queue: "fifo",
                    metric: "mean_wait",
                    value: fifo.mean_wait,
                },
                AnalyticRow {
                    queue: "fifo",
                    metric: "mean_sojourn",
                    value: fifo.mean_sojourn,
                },
            ]
        }
        Discipline::Blocking { capacity } => {
            let b = mm1k_blocking(total, capacity).map_err(unstable)?;
            vec![
                AnalyticRow {
                    queue: "blocking",
                    metric: "blocking_prob",
                    value: b.blocking_prob,
                },
                AnalyticRow {
                    queue: "blocking",
                    metric: "delivered_mean_sojourn",
                    value: b.delivered_mean_sojourn,
                },
            ]
        }
    };
    Ok(rows)
}

/// Closed-form (mean delay, delay variance) seen by one tier, where they
/// exist.
pub fn tier_targets(s: &Scenario, tier: Tier) -> (Option<f64>, Option<f64>) {
    let Ok(rate) = common_rate(s) else {
        return (None, None);
    };
    let total = QueueParams {
        lambda: lambda_where(s, |_| true),
        mu: s.mu * rate,
    };
    let both = |r: AnalyticResult| (Some(r.mean_sojourn), Some(r.var_sojourn));
    match s.discipline {
        Discipline::Fifo => mm1_metrics(total).map_or((None, None), both),
        Discipline::Partitioned { reserved_mu } => {
            match intserv_split(partition(s, reserved_mu, rate)) {
                Ok(split) if tier == Tier::Reserved => both(split.reserved),
                Ok(split) => both(split.best_effort),
                Err(_) => (None, None),
            }
        }
        Discipline::Priority { policy } => match priority_mm1_means(priority(s, policy, rate)) {
            Ok(m) if tier == Tier::HighPriority => (Some(m.sojourn_hi), None),
            Ok(m) => (Some(m.sojourn_lo), None),
            Err(_) => (None, None),
        },
        Discipline::Blocking { capacity } => mm1k_blocking(total, capacity)
            .map_or((None, None), |b| (Some(b.delivered_mean_sojourn), None)),
    }
}

pub fn render_rows(rows: &[AnalyticRow]) -> String {
    let mut out = String::from(ANALYZE_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{}\n", r.queue, r.metric, r.value));
    }
    out
}
