//! Prices from delay externalities, and the certainty table that sets
//! delay spread (bandwidth certainty) against price spread (price
//! certainty) per class and per tier.

use std::collections::HashMap;

use thiserror::Error;

use crate::cost::CostRecord;
use crate::scenario::Tier;
use crate::sim::PacketTrace;
use crate::stats::SampleStats;

#[derive(Debug, Clone, PartialEq, Error)]
#[error("invalid pricing scheme: {0}")]
pub struct PricingError(String);

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PricingScheme {
    /// Each packet pays `value_of_time` times the delay it imposes on others.
    MarginalCost { value_of_time: f64 },
    /// Every packet pays the same amount.
    FlatRate { price: f64 },
}

impl PricingScheme {
    pub fn marginal_cost(value_of_time: f64) -> Result<Self, PricingError> {
        if !(value_of_time > 0.0) || !value_of_time.is_finite() {
            return Err(PricingError(format!(
                "value of time must be positive, got {value_of_time}"
            )));
        }
        Ok(PricingScheme::MarginalCost { value_of_time })
    }

    pub fn flat_rate(price: f64) -> Result<Self, PricingError> {
        if !(price >= 0.0) || !price.is_finite() {
            return Err(PricingError(format!(
                "flat price must be nonnegative, got {price}"
            )));
        }
        Ok(PricingScheme::FlatRate { price })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PacketPrice {
    pub packet_id: u64,
    pub class_id: u32,
    pub tier: Tier,
    pub price: f64,
}

pub fn price_packets(costs: &[CostRecord], scheme: PricingScheme) -> Vec<PacketPrice> {
    costs
        .iter()
        .map(|c| PacketPrice {
            packet_id: c.packet_id,
            class_id: c.class_id,
            tier: c.tier,
            price: match scheme {
                PricingScheme::MarginalCost { value_of_time } => value_of_time * c.mc,
                PricingScheme::FlatRate { price } => price,
            },
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportGroup {
    Class(u32),
    Tier(Tier),
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertaintyRow {
    pub group: ReportGroup,
    pub tier: Tier,
    /// Post-warmup delivered packets.
    pub delivered: usize,
    pub delay: Option<SampleStats>,
    /// Over the delivered packets that carry a price.
    pub price: Option<SampleStats>,
    pub blocked_frac: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertaintyReport {
    pub rows: Vec<CertaintyRow>,
}

impl CertaintyReport {
    pub fn class(&self, class_id: u32) -> Option<&CertaintyRow> {
        self.rows
            .iter()
            .find(|r| r.group == ReportGroup::Class(class_id))
    }

    pub fn tier(&self, tier: Tier) -> Option<&CertaintyRow> {
        self.rows
            .iter()
            .find(|r| r.group == ReportGroup::Tier(tier))
    }

    pub fn tier_rows(&self) -> impl Iterator<Item = &CertaintyRow> {
        self.rows
            .iter()
            .filter(|r| matches!(r.group, ReportGroup::Tier(_)))
    }
}

#[derive(Default)]
struct Bucket {
    delays: Vec<f64>,
    prices: Vec<f64>,
    offered: u64,
    blocked: u64,
}

impl Bucket {
    fn row(&self, group: ReportGroup, tier: Tier) -> CertaintyRow {
        CertaintyRow {
            group,
            tier,
            delivered: self.delays.len(),
            delay: SampleStats::from_values(&self.delays),
            price: SampleStats::from_values(&self.prices),
            blocked_frac: (self.offered > 0).then(|| self.blocked as f64 / self.offered as f64),
        }
    }
}

/// Per-class rows in scenario order, then one row per tier in use.
/// Only packets arriving after warmup count.
pub fn certainty_report(trace: &PacketTrace, prices: &[PacketPrice]) -> CertaintyReport {
    let price_of: HashMap<u64, f64> = prices.iter().map(|p| (p.packet_id, p.price)).collect();
    let classes = &trace.scenario().classes;
    let mut by_class: HashMap<u32, Bucket> = HashMap::new();
    let mut by_tier: HashMap<Tier, Bucket> = HashMap::new();
    for r in trace.records().iter().filter(|r| !r.warmup) {
        for bucket in [
            by_class.entry(r.class_id).or_default(),
            by_tier.entry(r.tier).or_default(),
        ] {
            bucket.offered += 1;
            match r.delay() {
                Some(d) => {
                    bucket.delays.push(d);
                    if let Some(&p) = price_of.get(&r.packet_id) {
                        bucket.prices.push(p);
                    }
                }
                None => bucket.blocked += 1,
            }
        }
    }
    let empty = Bucket::default();
    let mut rows: Vec<CertaintyRow> = classes
        .iter()
        .map(|c| {
            by_class
                .get(&c.class_id)
                .unwrap_or(&empty)
                .row(ReportGroup::Class(c.class_id), c.tier)
        })
        .collect();
    for tier in Tier::ALL {
        if classes.iter().any(|c| c.tier == tier) {
            rows.push(
                by_tier
                    .get(&tier)
                    .unwrap_or(&empty)
                    .row(ReportGroup::Tier(tier), tier),
            );
        }
    }
    CertaintyReport { rows }
}
