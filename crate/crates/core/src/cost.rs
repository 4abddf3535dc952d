//! Per-packet delay externality: the total extra delay a packet's presence
//! imposes on every other packet, measured by replaying the trace without
//! it.
//!
//! Two routes compute the same number. Full replay reschedules the entire
//! trace. Segment replay restarts the scheduler cold at the beginning of
//! the original busy period containing the packet and stops as soon as
//! both the original and the counterfactual system are empty at the same
//! arrival instant, after which the two schedules coincide. Both routes
//! use the same scheduler arithmetic, so they agree bit for bit.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

use crate::scenario::Tier;
use crate::sim::engine::{Job, Lane};
use crate::sim::{lane_policy, PacketRecord, PacketTrace, Served};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CostError {
    #[error("unknown packet {0}")]
    UnknownPacket(u64),
    /// A blocked packet consumed no service; its marginal cost is zero.
    #[error("packet {0} was blocked")]
    BlockedPacket(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostMethod {
    FullReplay,
    SegmentReplay,
}

impl CostMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            CostMethod::FullReplay => "full_replay",
            CostMethod::SegmentReplay => "segment_replay",
        }
    }
}

impl fmt::Display for CostMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CostRecord {
    pub packet_id: u64,
    pub class_id: u32,
    pub tier: Tier,
    /// Sum over other packets delivered in both runs of
    /// (original delay - counterfactual delay).
    pub mc: f64,
    /// Packets whose delay strictly decreased without this one.
    pub affected_count: u64,
    /// Packets whose admission differs between the two runs (loss
    /// systems only). Not part of `mc`.
    pub admission_churn: u64,
    pub method: CostMethod,
}

#[derive(Debug, Default)]
struct Accumulator {
    mc: f64,
    affected: u64,
    churn: u64,
}

impl Accumulator {
    fn add(&mut self, original: &PacketRecord, counterfactual: Option<Served>) {
        match (original.served, counterfactual) {
            (Some(a), Some(b)) => {
                let diff = a.delay(original.arrival, original.service_demand)
                    - b.delay(original.arrival, original.service_demand);
                self.mc += diff;
                if diff > 0.0 {
                    self.affected += 1;
                }
            }
            (None, None) => {}
            _ => self.churn += 1,
        }
    }

    fn finish(self, r: &PacketRecord, method: CostMethod) -> CostRecord {
        CostRecord {
            packet_id: r.packet_id,
            class_id: r.class_id,
            tier: r.tier,
            mc: self.mc,
            affected_count: self.affected,
            admission_churn: self.churn,
            method,
        }
    }
}

struct LaneIndex {
    /// Record indices served by this lane, in arrival order.
    members: Vec<usize>,
    /// The original system was empty at this member's arrival instant,
    /// after completions at that instant.
    empty_before: Vec<bool>,
    /// Position of the first member of the enclosing busy period.
    period_start: Vec<usize>,
}

/// Precomputed busy-period structure of one trace, shared by every
/// marginal-cost query against it.
pub struct CostContext<'a> {
    trace: &'a PacketTrace,
    lanes: Vec<LaneIndex>,
    /// (lane, position within lane) per record.
    position: Vec<(usize, usize)>,
}

impl<'a> CostContext<'a> {
    pub fn new(trace: &'a PacketTrace) -> Self {
        let scenario = trace.scenario();
        let mut lanes: Vec<LaneIndex> = (0..scenario.lane_count())
            .map(|_| LaneIndex {
                members: Vec::new(),
                empty_before: Vec::new(),
                period_start: Vec::new(),
            })
            .collect();
        let mut last_departure = vec![f64::NEG_INFINITY; lanes.len()];
        let mut position = Vec::with_capacity(trace.records().len());
        for (idx, r) in trace.records().iter().enumerate() {
            let lane_id = scenario.lane_of(r.tier);
            let lane = &mut lanes[lane_id];
            let pos = lane.members.len();
            let empty = last_departure[lane_id] <= r.arrival;
            let start = if empty {
                pos
            } else {
                lane.period_start[pos - 1]
            };
            lane.members.push(idx);
            lane.empty_before.push(empty);
            lane.period_start.push(start);
            if let Some(d) = r.departure() {
                last_departure[lane_id] = last_departure[lane_id].max(d);
            }
            position.push((lane_id, pos));
        }
        CostContext {
            trace,
            lanes,
            position,
        }
    }

    fn delivered_index(&self, packet_id: u64) -> Result<usize, CostError> {
        let idx = self
            .trace
            .index_of(packet_id)
            .ok_or(CostError::UnknownPacket(packet_id))?;
        if !self.trace.records()[idx].delivered() {
            return Err(CostError::BlockedPacket(packet_id));
        }
        Ok(idx)
    }

    /// Marginal cost by rescheduling the whole trace without the packet.
    pub fn full_replay(&self, packet_id: u64) -> Result<CostRecord, CostError> {
        let idx = self.delivered_index(packet_id)?;
        let replay = self
            .trace
            .replay(packet_id)
            .map_err(|_| CostError::UnknownPacket(packet_id))?;
        let mut acc = Accumulator::default();
        let others = self
            .trace
            .records()
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != idx)
            .map(|(_, r)| r);
        for (original, counterfactual) in others.zip(replay.records()) {
            debug_assert_eq!(original.packet_id, counterfactual.packet_id);
            acc.add(original, counterfactual.served);
        }
        Ok(acc.finish(&self.trace.records()[idx], CostMethod::FullReplay))
    }

    /// Marginal cost by replaying only the affected stretch of the
    /// packet's own server.
    pub fn segment_replay(&self, packet_id: u64) -> Result<CostRecord, CostError> {
        let idx = self.delivered_index(packet_id)?;
        let records = self.trace.records();
        let scenario = self.trace.scenario();
        let (lane_id, excluded) = self.position[idx];
        let lane = &self.lanes[lane_id];
        let first = lane.period_start[excluded];

        let mut engine = Lane::new(lane_policy(scenario));
        let mut stop = lane.members.len();
        for pos in first..lane.members.len() {
            if pos == excluded {
                continue;
            }
            let r = &records[lane.members[pos]];
            engine.advance_to(r.arrival);
            if pos > excluded && engine.is_empty() && lane.empty_before[pos] {
                stop = pos;
                break;
            }
            engine.arrive(Job {
                idx: pos,
                arrival: r.arrival,
                service: r.service_demand,
                high: scenario.is_high(r.tier),
            });
        }
        engine.drain();

        let mut outcome: Vec<Option<Served>> = vec![None; stop - first];
        for (pos, served) in engine.done {
            outcome[pos - first] = Some(served);
        }
        let mut acc = Accumulator::default();
        for pos in (first..stop).filter(|&p| p != excluded) {
            acc.add(&records[lane.members[pos]], outcome[pos - first]);
        }
        Ok(acc.finish(&records[idx], CostMethod::SegmentReplay))
    }

    pub fn cost(&self, packet_id: u64, method: CostMethod) -> Result<CostRecord, CostError> {
        match method {
            CostMethod::FullReplay => self.full_replay(packet_id),
            CostMethod::SegmentReplay => self.segment_replay(packet_id),
        }
    }

    /// Costs for the given delivered packets, computed in parallel and
    /// returned in input order.
    pub fn costs(
        &self,
        packet_ids: &[u64],
        method: CostMethod,
    ) -> Result<Vec<CostRecord>, CostError> {
        packet_ids
            .par_iter()
            .map(|&id| self.cost(id, method))
            .collect()
    }
}

/// Marginal cost of one delivered packet by full counterfactual replay.
pub fn marginal_cost(trace: &PacketTrace, packet_id: u64) -> Result<CostRecord, CostError> {
    CostContext::new(trace).full_replay(packet_id)
}

pub fn segment_replay_mc(trace: &PacketTrace, packet_id: u64) -> Result<CostRecord, CostError> {
    CostContext::new(trace).segment_replay(packet_id)
}

/// Ids of every delivered packet, in order.
pub fn delivered_ids(trace: &PacketTrace) -> Vec<u64> {
    trace
        .records()
        .iter()
        .filter(|r| r.delivered())
        .map(|r| r.packet_id)
        .collect()
}

/// A uniform random subset of `n` delivered packet ids, ascending.
/// Returns every delivered id when there are at most `n`.
pub fn sample_ids(trace: &PacketTrace, n: usize, seed: u64) -> Vec<u64> {
    let ids = delivered_ids(trace);
    if ids.len() <= n {
        return ids;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(u64::MAX);
    let mut picked: Vec<u64> = rand::seq::index::sample(&mut rng, ids.len(), n)
        .into_iter()
        .map(|k| ids[k])
        .collect();
    picked.sort_unstable();
    picked
}

/// One record per delivered packet, by segment replay.
pub fn marginal_cost_all(trace: &PacketTrace) -> Vec<CostRecord> {
    marginal_cost_all_with(trace, CostMethod::SegmentReplay)
}

pub fn marginal_cost_all_with(trace: &PacketTrace, method: CostMethod) -> Vec<CostRecord> {
    CostContext::new(trace)
        .costs(&delivered_ids(trace), method)
        .expect("delivered packets always have a cost")
}
