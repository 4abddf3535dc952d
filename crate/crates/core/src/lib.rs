//! Queueing analytics and a seeded discrete-event simulator for a shared
//! link under best-effort, reserved-capacity, priority and admission
//! control disciplines, with exact per-packet delay externalities and the
//! prices they imply.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cost;
pub mod export;
pub mod pricing;
pub mod scenario;
pub mod sim;
pub mod stats;

pub use analytics::{AnalyticResult, AnalyticsError, PriorityPolicy, QueueParams};
pub use cost::{CostContext, CostError, CostMethod, CostRecord};
pub use pricing::{CertaintyReport, PricingScheme};
pub use scenario::{Discipline, Scenario, ScenarioError, ServiceDist, Tier, TrafficClassSpec};
pub use sim::{simulate, Arrival, PacketRecord, PacketTrace, SimError};
pub use stats::{summarize, SampleStats};
