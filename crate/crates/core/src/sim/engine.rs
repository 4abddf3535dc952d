//! Single-server scheduling core shared by simulation, replay and the
//! marginal-cost fast path.
//!
//! A `Lane` is one server with its queues. Callers feed jobs in arrival
//! order and call `advance_to` with each arrival time first, so that
//! completions at or before an arrival instant are processed before the
//! arrival itself. The lane keeps no state across an empty instant other
//! than what it has emitted, which lets a replay start cold from any
//! moment the original system was empty and reproduce it bit for bit.

use std::collections::VecDeque;

use super::Served;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum LanePolicy {
    Fifo,
    Priority { preemptive: bool },
    Blocking { capacity: usize },
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct Job {
    /// Caller-side index, echoed back in the outcome.
    pub idx: usize,
    pub arrival: f64,
    pub service: f64,
    pub high: bool,
}

#[derive(Debug, Clone, Copy)]
struct Pending {
    idx: usize,
    remaining: f64,
    first_start: Option<f64>,
    preempted: bool,
    high: bool,
}

#[derive(Debug, Clone, Copy)]
struct InService {
    job: Pending,
    completion: f64,
}

#[derive(Debug)]
pub(crate) struct Lane {
    policy: LanePolicy,
    high: VecDeque<Pending>,
    low: VecDeque<Pending>,
    current: Option<InService>,
    in_system: usize,
    pub done: Vec<(usize, Served)>,
    pub blocked: Vec<usize>,
}

impl Lane {
    pub fn new(policy: LanePolicy) -> Self {
        Lane {
            policy,
            high: VecDeque::new(),
            low: VecDeque::new(),
            current: None,
            in_system: 0,
            done: Vec::new(),
            blocked: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.in_system == 0
    }

    /// Processes every completion at or before `t`.
    pub fn advance_to(&mut self, t: f64) {
        while let Some(cur) = self.current {
            if cur.completion > t {
                break;
            }
            self.current = None;
            self.in_system -= 1;
            self.done.push((
                cur.job.idx,
                Served {
                    start: cur.job.first_start.expect("started job has a start time"),
                    departure: cur.completion,
                    preempted: cur.job.preempted,
                },
            ));
            if let Some(next) = self.high.pop_front().or_else(|| self.low.pop_front()) {
                self.begin(next, cur.completion);
            }
        }
    }

    pub fn arrive(&mut self, job: Job) {
        if let LanePolicy::Blocking { capacity } = self.policy {
            if self.in_system >= capacity {
                self.blocked.push(job.idx);
                return;
            }
        }
        self.in_system += 1;
        let pending = Pending {
            idx: job.idx,
            remaining: job.service,
            first_start: None,
            preempted: false,
            high: job.high,
        };
        match self.current {
            None => self.begin(pending, job.arrival),
            Some(cur)
                if job.high
                    && !cur.job.high
                    && self.policy == (LanePolicy::Priority { preemptive: true }) =>
            {
                let mut preempted = cur.job;
                preempted.remaining = cur.completion - job.arrival;
                preempted.preempted = true;
                self.low.push_front(preempted);
                self.begin(pending, job.arrival);
            }
            Some(_) if job.high => self.high.push_back(pending),
            Some(_) => self.low.push_back(pending),
        }
    }

    pub fn drain(&mut self) {
        self.advance_to(f64::INFINITY);
    }

    fn begin(&mut self, mut job: Pending, t: f64) {
        job.first_start.get_or_insert(t);
        self.current = Some(InService {
            job,
            completion: t + job.remaining,
        });
    }
}

/// Runs a whole job sequence through a fresh lane.
pub(crate) fn run_lane(policy: LanePolicy, jobs: impl IntoIterator<Item = Job>) -> Lane {
    let mut lane = Lane::new(policy);
    for job in jobs {
        lane.advance_to(job.arrival);
        lane.arrive(job);
    }
    lane.drain();
    lane
}

#[cfg(test)]
mod tests {
    use super::*;

    fn job(idx: usize, arrival: f64, service: f64, high: bool) -> Job {
        Job {
            idx,
            arrival,
            service,
            high,
        }
    }

    fn outcome(lane: &Lane, idx: usize) -> Option<Served> {
        lane.done.iter().find(|d| d.0 == idx).map(|d| d.1)
    }

    #[test]
    fn fifo_follows_lindley() {
        let lane = run_lane(
            LanePolicy::Fifo,
            [
                job(0, 0.0, 2.0, false),
                job(1, 1.0, 2.0, false),
                job(2, 2.0, 2.0, false),
            ],
        );
        let deps: Vec<f64> = (0..3)
            .map(|i| outcome(&lane, i).unwrap().departure)
            .collect();
        assert_eq!(deps, vec![2.0, 4.0, 6.0]);
        assert_eq!(outcome(&lane, 2).unwrap().start, 4.0);
    }

    #[test]
    fn non_preemptive_serves_high_first_but_never_interrupts() {
        let lane = run_lane(
            LanePolicy::Priority { preemptive: false },
            [
                job(0, 0.0, 2.0, false),
                job(1, 0.5, 1.0, false),
                job(2, 1.0, 1.0, true),
            ],
        );
        assert_eq!(outcome(&lane, 0).unwrap().departure, 2.0);
        assert_eq!(outcome(&lane, 2).unwrap().start, 2.0);
        assert_eq!(outcome(&lane, 1).unwrap().start, 3.0);
    }

    #[test]
    fn preemptive_resume_keeps_remaining_work() {
        let lane = run_lane(
            LanePolicy::Priority { preemptive: true },
            [job(0, 0.0, 2.0, false), job(1, 0.5, 1.0, true)],
        );
        let lo = outcome(&lane, 0).unwrap();
        assert_eq!(lo.start, 0.0);
        assert_eq!(lo.departure, 3.0);
        assert_eq!(
            outcome(&lane, 1).unwrap(),
            Served {
                start: 0.5,
                departure: 1.5,
                preempted: false
            }
        );
        assert!(lo.preempted);
    }

    #[test]
    fn blocking_departure_before_arrival_on_ties() {
        let lane = run_lane(
            LanePolicy::Blocking { capacity: 1 },
            [
                job(0, 0.0, 1.0, false),
                job(1, 0.5, 1.0, false),
                job(2, 1.0, 1.0, false),
            ],
        );
        assert_eq!(lane.blocked, vec![1]);
        assert_eq!(
            outcome(&lane, 2).unwrap(),
            Served {
                start: 1.0,
                departure: 2.0,
                preempted: false
            }
        );
    }
}
