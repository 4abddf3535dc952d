//! Experiment description: traffic classes, the queueing discipline of the
//! shared link, and run control (horizon, warmup, seed).

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::analytics::PriorityPolicy;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid scenario: {0}")]
pub struct ScenarioError(pub String);

fn invalid<T>(msg: impl Into<String>) -> Result<T, ScenarioError> {
    Err(ScenarioError(msg.into()))
}

/// QoS marking of a traffic class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Tier {
    Reserved,
    BestEffort,
    HighPriority,
    LowPriority,
    Default,
}

impl Tier {
    pub const ALL: [Tier; 5] = [
        Tier::Reserved,
        Tier::BestEffort,
        Tier::HighPriority,
        Tier::LowPriority,
        Tier::Default,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Tier::Reserved => "reserved",
            Tier::BestEffort => "best_effort",
            Tier::HighPriority => "high_priority",
            Tier::LowPriority => "low_priority",
            Tier::Default => "default",
        }
    }
}

impl fmt::Display for Tier {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Tier {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Tier::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| ScenarioError(format!("unknown tier `{s}`")))
    }
}

/// Distribution of a packet's size, in work units. A server of rate `r`
/// transmits `r` work units per unit time, so `exp(1)` on a link of rate
/// `mu` gives exponential service times with rate `mu`.
#[derive(Debug, Clone, PartialEq)]
pub enum ServiceDist {
    Exponential {
        rate: f64,
    },
    /// Mixture of exponentials, as `(probability, rate)` branches.
    HyperExponential {
        branches: Vec<(f64, f64)>,
    },
}

impl ServiceDist {
    /// Two-branch hyperexponential with balanced means and the given
    /// mean and coefficient of variation (`cov >= 1`).
    pub fn balanced_h2(mean: f64, cov: f64) -> Result<Self, ScenarioError> {
        if !(mean > 0.0) || !(cov >= 1.0) || !cov.is_finite() {
            return invalid(format!(
                "balanced hyperexponential needs mean > 0 and cov >= 1, got mean={mean} cov={cov}"
            ));
        }
        let c2 = cov * cov;
        let p1 = 0.5 * (1.0 + ((c2 - 1.0) / (c2 + 1.0)).sqrt());
        let p2 = 1.0 - p1;
        Ok(ServiceDist::HyperExponential {
            branches: vec![(p1, 2.0 * p1 / mean), (p2, 2.0 * p2 / mean)],
        })
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self {
            ServiceDist::Exponential { rate } => {
                if !(*rate > 0.0) || !rate.is_finite() {
                    return invalid(format!("exponential rate must be positive, got {rate}"));
                }
            }
            ServiceDist::HyperExponential { branches } => {
                if branches.is_empty() {
                    return invalid("hyperexponential needs at least one branch");
                }
                for &(p, r) in branches {
                    if !(p > 0.0) || !(r > 0.0) || !r.is_finite() {
                        return invalid(format!(
                            "hyperexponential branch needs probability > 0 and rate > 0, got {p}@{r}"
                        ));
                    }
                }
                let total: f64 = branches.iter().map(|b| b.0).sum();
                if (total - 1.0).abs() > 1e-9 {
                    return invalid(format!(
                        "hyperexponential probabilities must sum to 1, got {total}"
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn mean(&self) -> f64 {
        match self {
            ServiceDist::Exponential { rate } => 1.0 / rate,
            ServiceDist::HyperExponential { branches } => {
                branches.iter().map(|&(p, r)| p / r).sum()
            }
        }
    }

    pub fn second_moment(&self) -> f64 {
        match self {
            ServiceDist::Exponential { rate } => 2.0 / (rate * rate),
            ServiceDist::HyperExponential { branches } => {
                branches.iter().map(|&(p, r)| 2.0 * p / (r * r)).sum()
            }
        }
    }

    pub fn cov(&self) -> f64 {
        let m = self.mean();
        (self.second_moment() - m * m).sqrt() / m
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self, ServiceDist::Exponential { .. })
    }

    pub(crate) fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            ServiceDist::Exponential { rate } => Exp::new(*rate).unwrap().sample(rng),
            ServiceDist::HyperExponential { branches } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut rate = branches[branches.len() - 1].1;
                for &(p, r) in branches {
                    acc += p;
                    if u < acc {
                        rate = r;
                        break;
                    }
                }
                Exp::new(rate).unwrap().sample(rng)
            }
        }
    }
}

impl fmt::Display for ServiceDist {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ServiceDist::Exponential { rate } => write!(f, "exp({rate})"),
            ServiceDist::HyperExponential { branches } => {
                f.write_str("hyperexp(")?;
                for (k, (p, r)) in branches.iter().enumerate() {
                    if k > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{p}@{r}")?;
                }
                f.write_str(")")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrafficClassSpec {
    pub class_id: u32,
    pub lambda: f64,
    pub service: ServiceDist,
    pub tier: Tier,
}

impl TrafficClassSpec {
    pub fn new(class_id: u32, lambda: f64, service: ServiceDist, tier: Tier) -> Self {
        TrafficClassSpec {
            class_id,
            lambda,
            service,
            tier,
        }
    }

    /// Unit-mean exponential packets.
    pub fn exponential(class_id: u32, lambda: f64, tier: Tier) -> Self {
        Self::new(
            class_id,
            lambda,
            ServiceDist::Exponential { rate: 1.0 },
            tier,
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Discipline {
    /// One shared work-conserving FIFO queue.
    Fifo,
    /// Reserved-tier classes get an isolated server of rate `reserved_mu`;
    /// everything else shares the remaining `mu - reserved_mu`.
    Partitioned { reserved_mu: f64 },
    /// One server; high-priority tier served ahead of everything else.
    Priority { policy: PriorityPolicy },
    /// One FIFO server admitting at most `capacity` packets in system.
    Blocking { capacity: u32 },
}

impl Discipline {
    pub fn name(&self) -> &'static str {
        match self {
            Discipline::Fifo => "fifo",
            Discipline::Partitioned { .. } => "partitioned",
            Discipline::Priority { .. } => "priority",
            Discipline::Blocking { .. } => "blocking",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub classes: Vec<TrafficClassSpec>,
    pub discipline: Discipline,
    pub mu: f64,
    pub horizon: f64,
    pub warmup: f64,
    pub seed: u64,
}

impl Scenario {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return invalid(format!("mu must be positive, got {}", self.mu));
        }
        if !(self.warmup >= 0.0) || !(self.horizon > self.warmup) || !self.horizon.is_finite() {
            return invalid(format!(
                "need horizon > warmup >= 0, got horizon={} warmup={}",
                self.horizon, self.warmup
            ));
        }
        let mut ids: Vec<u32> = self.classes.iter().map(|c| c.class_id).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return invalid("duplicate class id");
        }
        for c in &self.classes {
            if !(c.lambda >= 0.0) || !c.lambda.is_finite() {
                return invalid(format!(
                    "class {} arrival rate must be nonnegative, got {}",
                    c.class_id, c.lambda
                ));
            }
            c.service.validate()?;
        }
        match self.discipline {
            Discipline::Partitioned { reserved_mu } => {
                if !(reserved_mu > 0.0) || reserved_mu >= self.mu {
                    return invalid(format!(
                        "reserved_mu must lie in (0, {}), got {reserved_mu}",
                        self.mu
                    ));
                }
                if !self.classes.iter().any(|c| c.tier == Tier::Reserved) {
                    return invalid("partitioned discipline needs a reserved-tier class");
                }
            }
            Discipline::Blocking { capacity } => {
                if capacity == 0 {
                    return invalid("blocking capacity must be at least 1");
                }
            }
            Discipline::Fifo | Discipline::Priority { .. } => {}
        }
        Ok(())
    }

    pub fn class(&self, class_id: u32) -> Option<&TrafficClassSpec> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }

    pub fn lane_count(&self) -> usize {
        match self.discipline {
            Discipline::Partitioned { .. } => 2,
            _ => 1,
        }
    }

    /// Server index a tier is routed to. Partitioned: 0 = reserved,
    /// 1 = best effort.
    pub fn lane_of(&self, tier: Tier) -> usize {
        match self.discipline {
            Discipline::Partitioned { .. } if tier != Tier::Reserved => 1,
            _ => 0,
        }
    }

    pub fn lane_rate(&self, lane: usize) -> f64 {
        match self.discipline {
            Discipline::Partitioned { reserved_mu } if lane == 0 => reserved_mu,
            Discipline::Partitioned { reserved_mu } => self.mu - reserved_mu,
            _ => self.mu,
        }
    }

    pub fn is_high(&self, tier: Tier) -> bool {
        matches!(self.discipline, Discipline::Priority { .. }) && tier == Tier::HighPriority
    }

    /// Offered utilization of each server.
    pub fn lane_utilizations(&self) -> Vec<f64> {
        let mut load = vec![0.0; self.lane_count()];
        for c in &self.classes {
            load[self.lane_of(c.tier)] += c.lambda * c.service.mean();
        }
        load.iter()
            .enumerate()
            .map(|(lane, work)| work / self.lane_rate(lane))
            .collect()
    }

    /// Some server is offered at least its capacity. Loss systems never
    /// saturate.
    pub fn is_saturated(&self) -> bool {
        !matches!(self.discipline, Discipline::Blocking { .. })
            && self.lane_utilizations().iter().any(|&rho| rho >= 1.0)
    }
}
