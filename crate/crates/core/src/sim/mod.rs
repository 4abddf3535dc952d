//! Seeded discrete-event simulation of one shared transmission resource.
//!
//! Arrivals and packet sizes are drawn up front from per-class random
//! substreams, then pushed through the discipline's scheduler. Because
//! the sizes are fixed at arrival, the same seed gives the same packets
//! under every discipline, and a replay with one packet removed is a pure
//! recomputation.

pub(crate) mod engine;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use thiserror::Error;

use crate::analytics::PriorityPolicy;
use crate::scenario::{Discipline, Scenario, ScenarioError, Tier};
use engine::{run_lane, Job, LanePolicy};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error("unknown packet {0}")]
    UnknownPacket(u64),
    #[error("arrival references unknown class {0}")]
    UnknownClass(u32),
}

/// Substream purposes. Each (class, purpose) pair gets its own ChaCha
/// stream under the scenario seed.
#[derive(Debug, Clone, Copy)]
pub enum Stream {
    Arrivals,
    Sizes,
}

pub fn substream(seed: u64, class_id: u32, purpose: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(class_id) << 1) | purpose as u64);
    rng
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Served {
    /// First time the packet entered service.
    pub start: f64,
    pub departure: f64,
    /// Service was interrupted at least once.
    pub preempted: bool,
}

impl Served {
    /// Sojourn time. Uninterrupted packets report `wait + service`, which
    /// is exactly the service time when the packet did not wait.
    pub fn delay(&self, arrival: f64, service_demand: f64) -> f64 {
        if self.preempted {
            self.departure - arrival
        } else {
            (self.start - arrival) + service_demand
        }
    }
}

/// A packet offered to the link, before scheduling.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Arrival {
    pub class_id: u32,
    pub arrival: f64,
    /// Size in work units; service time is `work / server rate`.
    pub work: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PacketRecord {
    pub packet_id: u64,
    pub class_id: u32,
    pub tier: Tier,
    pub arrival: f64,
    pub work: f64,
    /// Service time on the server this packet is routed to.
    pub service_demand: f64,
    /// `None` when the packet was blocked.
    pub served: Option<Served>,
    /// Arrived before the warmup cutoff; kept for replay, excluded from
    /// statistics.
    pub warmup: bool,
}

impl PacketRecord {
    pub fn delivered(&self) -> bool {
        self.served.is_some()
    }

    pub fn start(&self) -> Option<f64> {
        self.served.map(|s| s.start)
    }

    pub fn departure(&self) -> Option<f64> {
        self.served.map(|s| s.departure)
    }

    pub fn delay(&self) -> Option<f64> {
        self.served
            .map(|s| s.delay(self.arrival, self.service_demand))
    }

    /// Time until first service. `delay = wait + service_demand` except
    /// under preemption.
    pub fn wait(&self) -> Option<f64> {
        self.served.map(|s| s.start - self.arrival)
    }

    fn arrival_only(&self) -> Arrival {
        Arrival {
            class_id: self.class_id,
            arrival: self.arrival,
            work: self.work,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ClassCounts {
    pub class_id: u32,
    pub generated: u64,
    pub admitted: u64,
    pub blocked: u64,
}

/// Outcome of one run. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct PacketTrace {
    scenario: Scenario,
    records: Vec<PacketRecord>,
    counts: Vec<ClassCounts>,
}

impl PacketTrace {
    /// Schedules an explicit arrival list under `scenario`'s discipline.
    /// Arrivals are ordered by time (ties keep input order) and numbered
    /// from zero.
    pub fn from_arrivals(scenario: Scenario, mut arrivals: Vec<Arrival>) -> Result<Self, SimError> {
        scenario.validate()?;
        arrivals.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));
        let mut records = Vec::with_capacity(arrivals.len());
        for (k, a) in arrivals.into_iter().enumerate() {
            let class = scenario
                .class(a.class_id)
                .ok_or(SimError::UnknownClass(a.class_id))?;
            let rate = scenario.lane_rate(scenario.lane_of(class.tier));
            records.push(PacketRecord {
                packet_id: k as u64,
                class_id: a.class_id,
                tier: class.tier,
                arrival: a.arrival,
                work: a.work,
                service_demand: a.work / rate,
                served: None,
                warmup: a.arrival < scenario.warmup,
            });
        }
        Ok(Self::schedule(scenario, records))
    }

    fn schedule(scenario: Scenario, mut records: Vec<PacketRecord>) -> Self {
        let policy = lane_policy(&scenario);
        for lane_id in 0..scenario.lane_count() {
            let jobs = records
                .iter()
                .enumerate()
                .filter(|(_, r)| scenario.lane_of(r.tier) == lane_id)
                .map(|(idx, r)| Job {
                    idx,
                    arrival: r.arrival,
                    service: r.service_demand,
                    high: scenario.is_high(r.tier),
                })
                .collect::<Vec<_>>();
            let lane = run_lane(policy, jobs);
            for (idx, served) in lane.done {
                records[idx].served = Some(served);
            }
        }
        let mut counts: Vec<ClassCounts> = scenario
            .classes
            .iter()
            .map(|c| ClassCounts {
                class_id: c.class_id,
                ..Default::default()
            })
            .collect();
        for r in &records {
            if let Some(c) = counts.iter_mut().find(|c| c.class_id == r.class_id) {
                c.generated += 1;
                if r.delivered() {
                    c.admitted += 1;
                } else {
                    c.blocked += 1;
                }
            }
        }
        PacketTrace {
            scenario,
            records,
            counts,
        }
    }

    pub fn scenario(&self) -> &Scenario {
        &self.scenario
    }

    pub fn records(&self) -> &[PacketRecord] {
        &self.records
    }

    pub fn class_counts(&self) -> &[ClassCounts] {
        &self.counts
    }

    /// Some server was offered at least its capacity; statistics are
    /// transient, not steady state.
    pub fn saturated(&self) -> bool {
        self.scenario.is_saturated()
    }

    pub fn index_of(&self, packet_id: u64) -> Option<usize> {
        self.records
            .binary_search_by_key(&packet_id, |r| r.packet_id)
            .ok()
    }

    pub fn get(&self, packet_id: u64) -> Option<&PacketRecord> {
        self.index_of(packet_id).map(|i| &self.records[i])
    }

    pub fn arrivals(&self) -> Vec<Arrival> {
        self.records
            .iter()
            .map(PacketRecord::arrival_only)
            .collect()
    }

    /// Reschedules every other packet with `exclude` removed. Arrival
    /// times and service demands are reused as recorded; packet ids are
    /// preserved.
    pub fn replay(&self, exclude: u64) -> Result<PacketTrace, SimError> {
        let skip = self
            .index_of(exclude)
            .ok_or(SimError::UnknownPacket(exclude))?;
        let records = self
            .records
            .iter()
            .enumerate()
            .filter(|(i, _)| *i != skip)
            .map(|(_, r)| PacketRecord {
                served: None,
                ..r.clone()
            })
            .collect();
        Ok(Self::schedule(self.scenario.clone(), records))
    }
}

pub(crate) fn lane_policy(s: &Scenario) -> LanePolicy {
    match s.discipline {
        Discipline::Fifo | Discipline::Partitioned { .. } => LanePolicy::Fifo,
        Discipline::Priority { policy } => LanePolicy::Priority {
            preemptive: policy == PriorityPolicy::PreemptiveResume,
        },
        Discipline::Blocking { capacity } => LanePolicy::Blocking {
            capacity: capacity as usize,
        },
    }
}

/// Draws every packet offered before the horizon. Each class has Poisson
/// arrivals from its own arrival substream and sizes from its own size
/// substream, so the draws do not depend on the discipline.
pub fn generate_arrivals(s: &Scenario) -> Result<Vec<Arrival>, ScenarioError> {
    s.validate()?;
    let mut all = Vec::new();
    for class in &s.classes {
        if class.lambda == 0.0 {
            continue;
        }
        let gaps = Exp::new(class.lambda).map_err(|e| ScenarioError(e.to_string()))?;
        let mut arrivals_rng = substream(s.seed, class.class_id, Stream::Arrivals);
        let mut sizes_rng = substream(s.seed, class.class_id, Stream::Sizes);
        let mut t = 0.0;
        loop {
            t += gaps.sample(&mut arrivals_rng);
            if t >= s.horizon {
                break;
            }
            all.push(Arrival {
                class_id: class.class_id,
                arrival: t,
                work: class.service.sample(&mut sizes_rng),
            });
        }
    }
    // Stable: simultaneous arrivals keep class declaration order.
    all.sort_by(|a, b| a.arrival.total_cmp(&b.arrival));
    Ok(all)
}

pub fn simulate(s: &Scenario) -> Result<PacketTrace, SimError> {
    let arrivals = generate_arrivals(s)?;
    PacketTrace::from_arrivals(s.clone(), arrivals)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{ServiceDist, TrafficClassSpec};
    use proptest::prelude::*;

    pub(crate) fn scenario(discipline: Discipline, classes: Vec<TrafficClassSpec>) -> Scenario {
        Scenario {
            classes,
            discipline,
            mu: 1.0,
            horizon: 1000.0,
            warmup: 0.0,
            seed: 7,
        }
    }

    fn hand_trace() -> PacketTrace {
        let s = scenario(
            Discipline::Fifo,
            vec![TrafficClassSpec::exponential(0, 1.0, Tier::Default)],
        );
        let arrivals = [0.0, 1.0, 2.0]
            .iter()
            .map(|&t| Arrival {
                class_id: 0,
                arrival: t,
                work: 2.0,
            })
            .collect();
        PacketTrace::from_arrivals(s, arrivals).unwrap()
    }

    fn delays(t: &PacketTrace) -> Vec<f64> {
        t.records().iter().filter_map(|r| r.delay()).collect()
    }

    #[test]
    fn no_arrivals_gives_empty_trace() {
        let s = scenario(
            Discipline::Fifo,
            vec![TrafficClassSpec::exponential(0, 0.0, Tier::Default)],
        );
        let t = simulate(&s).unwrap();
        assert!(t.records().is_empty());
        assert_eq!(t.class_counts()[0].generated, 0);
    }

    #[test]
    fn hand_trace_replay() {
        let t = hand_trace();
        assert_eq!(delays(&t), vec![2.0, 3.0, 4.0]);
        let r = t.replay(1).unwrap();
        assert_eq!(
            r.records().iter().map(|r| r.packet_id).collect::<Vec<_>>(),
            vec![0, 2]
        );
        assert_eq!(delays(&r), vec![2.0, 2.0]);
        let r = t.replay(0).unwrap();
        assert_eq!(delays(&r), vec![2.0, 3.0]);
        // later packets cannot affect earlier ones
        let r = t.replay(2).unwrap();
        assert_eq!(r.records(), &t.records()[..2]);
        assert_eq!(t.replay(9), Err(SimError::UnknownPacket(9)));
    }

    #[test]
    fn replay_of_only_packet_is_empty() {
        let s = scenario(
            Discipline::Fifo,
            vec![TrafficClassSpec::exponential(0, 1.0, Tier::Default)],
        );
        let t = PacketTrace::from_arrivals(
            s,
            vec![Arrival {
                class_id: 0,
                arrival: 3.0,
                work: 1.0,
            }],
        )
        .unwrap();
        assert!(t.replay(0).unwrap().records().is_empty());
    }

    #[test]
    fn unknown_class_rejected() {
        let s = scenario(
            Discipline::Fifo,
            vec![TrafficClassSpec::exponential(0, 1.0, Tier::Default)],
        );
        let err = PacketTrace::from_arrivals(
            s,
            vec![Arrival {
                class_id: 4,
                arrival: 0.0,
                work: 1.0,
            }],
        );
        assert_eq!(err, Err(SimError::UnknownClass(4)));
    }

    #[test]
    fn invalid_scenario_rejected() {
        let mut s = scenario(
            Discipline::Fifo,
            vec![TrafficClassSpec::exponential(0, 1.0, Tier::Default)],
        );
        s.mu = 0.0;
        assert!(matches!(simulate(&s), Err(SimError::Scenario(_))));
    }

    #[test]
    fn partitioned_server_idles_while_best_effort_waits() {
        let s = scenario(
            Discipline::Partitioned { reserved_mu: 0.5 },
            vec![
                TrafficClassSpec::exponential(0, 0.1, Tier::Reserved),
                TrafficClassSpec::exponential(1, 0.1, Tier::BestEffort),
            ],
        );
        let arrivals = vec![
            Arrival {
                class_id: 1,
                arrival: 0.0,
                work: 1.0,
            },
            Arrival {
                class_id: 1,
                arrival: 0.1,
                work: 1.0,
            },
        ];
        let t = PacketTrace::from_arrivals(s, arrivals).unwrap();
        let second = &t.records()[1];
        // best-effort server runs at 0.5: first packet occupies [0, 2]
        assert_eq!(second.service_demand, 2.0);
        assert_eq!(second.start(), Some(2.0));
        // the reserved server had no work at all during that wait
        assert!(t.records().iter().all(|r| r.tier != Tier::Reserved));
        assert!(second.wait().unwrap() > 0.0);
    }

    #[test]
    fn blocking_capacity_one_delay_is_service() {
        let s = Scenario {
            horizon: 5000.0,
            ..scenario(
                Discipline::Blocking { capacity: 1 },
                vec![TrafficClassSpec::exponential(0, 1.0, Tier::Default)],
            )
        };
        let t = simulate(&s).unwrap();
        let c = t.class_counts()[0];
        assert!(c.blocked > 0);
        assert_eq!(c.admitted + c.blocked, c.generated);
        for r in t.records() {
            match r.served {
                Some(_) => assert_eq!(r.delay().unwrap(), r.service_demand),
                None => assert!(r.start().is_none() && r.departure().is_none()),
            }
        }
    }

    #[test]
    fn substreams_are_distinct() {
        use rand::Rng;
        let a: u64 = substream(1, 0, Stream::Arrivals).random();
        let b: u64 = substream(1, 0, Stream::Sizes).random();
        let c: u64 = substream(1, 1, Stream::Arrivals).random();
        assert!(a != b && a != c && b != c);
    }

    fn random_scenario(discipline: Discipline, seed: u64, hyper: bool) -> Scenario {
        let service = if hyper {
            ServiceDist::balanced_h2(1.0, 2.0).unwrap()
        } else {
            ServiceDist::Exponential { rate: 1.0 }
        };
        let (t0, t1) = match discipline {
            Discipline::Partitioned { .. } => (Tier::Reserved, Tier::BestEffort),
            Discipline::Priority { .. } => (Tier::HighPriority, Tier::LowPriority),
            _ => (Tier::Default, Tier::Default),
        };
        Scenario {
            classes: vec![
                TrafficClassSpec::new(0, 0.3, service.clone(), t0),
                TrafficClassSpec::new(1, 0.35, service, t1),
            ],
            discipline,
            mu: 1.0,
            horizon: 400.0,
            warmup: 40.0,
            seed,
        }
    }

    fn disciplines() -> impl Strategy<Value = Discipline> {
        prop_oneof![
            Just(Discipline::Fifo),
            Just(Discipline::Partitioned { reserved_mu: 0.45 }),
            Just(Discipline::Priority {
                policy: PriorityPolicy::NonPreemptive
            }),
            Just(Discipline::Priority {
                policy: PriorityPolicy::PreemptiveResume
            }),
            (1u32..4).prop_map(|capacity| Discipline::Blocking { capacity }),
        ]
    }

    /// Server never idle while a packet of the same lane waits: every
    /// waiting interval is covered by service of other packets.
    fn assert_work_conserving(t: &PacketTrace) {
        let mut busy: Vec<(f64, f64)> = t
            .records()
            .iter()
            .filter_map(|r| r.served.map(|s| (s.start, s.departure)))
            .collect();
        busy.sort_by(|a, b| a.0.total_cmp(&b.0));
        for r in t.records().iter().filter(|r| r.delivered()) {
            let (from, to) = (r.arrival, r.start().unwrap());
            let mut covered = from;
            for &(s, e) in &busy {
                if s > covered {
                    break;
                }
                covered = covered.max(e);
            }
            assert!(
                covered >= to,
                "server idle at {covered} while packet {} waits",
                r.packet_id
            );
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn trace_invariants(d in disciplines(), seed in any::<u64>(), hyper in any::<bool>()) {
            let s = random_scenario(d, seed, hyper);
            let t = simulate(&s).unwrap();
            prop_assert_eq!(&t, &simulate(&s).unwrap());
            let preemptive = matches!(d, Discipline::Priority { policy: PriorityPolicy::PreemptiveResume });
            for (k, r) in t.records().iter().enumerate() {
                if k > 0 {
                    prop_assert!(t.records()[k - 1].packet_id < r.packet_id);
                }
                prop_assert_eq!(r.warmup, r.arrival < s.warmup);
                if let Some(sv) = r.served {
                    prop_assert!(sv.start >= r.arrival);
                    prop_assert!(sv.departure >= sv.start);
                    if !preemptive {
                        prop_assert_eq!(sv.departure, sv.start + r.service_demand);
                        prop_assert_eq!(r.delay().unwrap(), r.wait().unwrap() + r.service_demand);
                        let span = sv.departure - r.arrival;
                        prop_assert!((r.delay().unwrap() - span).abs() <= 1e-9 * span.max(1.0));
                    }
                }
            }
            for c in t.class_counts() {
                prop_assert_eq!(c.admitted + c.blocked, c.generated);
            }
            // FIFO order per queue and tier
            if !matches!(d, Discipline::Priority { .. }) {
                for lane in 0..s.lane_count() {
                    let starts: Vec<f64> = t.records().iter()
                        .filter(|r| s.lane_of(r.tier) == lane)
                        .filter_map(|r| r.start()).collect();
                    prop_assert!(starts.windows(2).all(|w| w[0] <= w[1]));
                }
            }
            if matches!(d, Discipline::Fifo | Discipline::Priority { policy: PriorityPolicy::NonPreemptive }) {
                assert_work_conserving(&t);
            }
            if !matches!(d, Discipline::Blocking { .. }) {
                prop_assert!(t.records().iter().all(|r| r.delivered()));
            }
        }

        #[test]
        fn common_random_numbers_across_disciplines(seed in any::<u64>(), a in disciplines(), b in disciplines()) {
            // tiers differ per discipline, so compare arrivals and sizes by class
            let ta = simulate(&random_scenario(a, seed, false)).unwrap();
            let tb = simulate(&random_scenario(b, seed, false)).unwrap();
            let key = |t: &PacketTrace| t.records().iter().map(|r| (r.class_id, r.arrival, r.work)).collect::<Vec<_>>();
            prop_assert_eq!(key(&ta), key(&tb));
        }
    }
}
