//! Built-in acceptance suite. Each check compares a simulated quantity
//! against a closed-form target or a direction, at a scale chosen by the
//! caller.

use std::fmt;

use rayon::prelude::*;

use qosprice::analytics::{
    intserv_split, mm1_metrics, mm1k_blocking, priority_mm1_means, reservation_variance_sweep,
    PartitionSpec, PriorityParams,
};
use qosprice::cost::{delivered_ids, marginal_cost_all, CostContext};
use qosprice::pricing::{certainty_report, price_packets};
use qosprice::sim::generate_arrivals;
use qosprice::{
    CostMethod, CostRecord, Discipline, PacketTrace, PricingScheme, PriorityPolicy, QueueParams,
    SampleStats, Scenario, ServiceDist, Tier, TrafficClassSpec,
};

use crate::commands::render_simulation;
use crate::scenario_file::parse_scenario;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scale {
    Quick,
    Standard,
    Full,
}

/// Run sizes for one scale.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plan {
    pub mm1_horizon: f64,
    pub intserv_horizon: f64,
    pub sweep_horizon: f64,
    pub priority_wait_horizon: f64,
    pub priority_cost_horizon: f64,
    pub oracle_traces: usize,
    pub blocking_horizon: f64,
    pub heavy_tail_horizon: f64,
    pub flat_rate_horizon: f64,
    pub seeds: u64,
}

impl Scale {
    pub fn plan(self) -> Plan {
        let full = Plan {
            mm1_horizon: 2e6,
            intserv_horizon: 1e6 / 0.6,
            sweep_horizon: 5e4,
            priority_wait_horizon: 1e6,
            priority_cost_horizon: 2e5,
            oracle_traces: 100,
            blocking_horizon: 2e5,
            heavy_tail_horizon: 1e5,
            flat_rate_horizon: 2e4,
            seeds: 20,
        };
        match self {
            Scale::Full => full,
            Scale::Standard => Plan {
                sweep_horizon: 2e4,
                priority_cost_horizon: 1e5,
                ..full
            },
            Scale::Quick => Plan {
                sweep_horizon: 2e4,
                priority_wait_horizon: 5e5,
                priority_cost_horizon: 5e4,
                oracle_traces: 20,
                blocking_horizon: 1e5,
                heavy_tail_horizon: 5e4,
                flat_rate_horizon: 5e3,
                ..full
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub criterion: u8,
    pub name: String,
    pub target: String,
    pub observed: String,
    pub tolerance: String,
    pub passed: bool,
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}: target {}, observed {}, tolerance {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.criterion,
            self.name,
            self.target,
            self.observed,
            self.tolerance
        )
    }
}

fn rel_check(criterion: u8, name: &str, target: f64, observed: f64, rel: f64) -> Check {
    Check {
        criterion,
        name: name.into(),
        target: format!("{target:.6}"),
        observed: format!("{observed:.6}"),
        tolerance: if rel >= 1e-3 {
            format!("{}% relative", rel * 100.0)
        } else {
            format!("{rel:e} relative")
        },
        passed: ((observed - target) / target).abs() <= rel,
    }
}

fn exact_check(criterion: u8, name: &str, target: f64, observed: f64) -> Check {
    Check {
        criterion,
        name: name.into(),
        target: target.to_string(),
        observed: observed.to_string(),
        tolerance: "exact".into(),
        passed: observed == target,
    }
}

fn count_check(criterion: u8, name: &str, agreeing: usize, total: usize, needed: usize) -> Check {
    Check {
        criterion,
        name: name.into(),
        target: format!("{total}/{total} seeds"),
        observed: format!("{agreeing}/{total} seeds"),
        tolerance: format!(">= {needed}/{total}"),
        passed: agreeing >= needed,
    }
}

fn scenario(
    classes: Vec<TrafficClassSpec>,
    discipline: Discipline,
    horizon: f64,
    seed: u64,
) -> Scenario {
    Scenario {
        classes,
        discipline,
        mu: 1.0,
        horizon,
        warmup: horizon / 20.0,
        seed,
    }
}

fn run(s: &Scenario) -> PacketTrace {
    qosprice::simulate(s).expect("suite scenarios are valid")
}

fn steady(t: &PacketTrace, tier: Option<Tier>) -> impl Iterator<Item = &qosprice::PacketRecord> {
    t.records()
        .iter()
        .filter(move |r| !r.warmup && tier.is_none_or(|x| r.tier == x))
}

fn delay_stats(t: &PacketTrace, tier: Option<Tier>) -> SampleStats {
    let d: Vec<f64> = steady(t, tier).filter_map(|r| r.delay()).collect();
    SampleStats::from_values(&d).expect("suite runs deliver packets")
}

fn mean_wait(t: &PacketTrace, tier: Tier) -> f64 {
    let w: Vec<f64> = steady(t, Some(tier)).filter_map(|r| r.wait()).collect();
    SampleStats::from_values(&w)
        .expect("suite runs deliver packets")
        .mean
}

fn mean_mc(t: &PacketTrace, costs: &[CostRecord], tier: Tier) -> f64 {
    let m: Vec<f64> = costs
        .iter()
        .filter(|c| c.tier == tier && !t.get(c.packet_id).expect("costed packet exists").warmup)
        .map(|c| c.mc)
        .collect();
    SampleStats::from_values(&m)
        .expect("suite runs deliver packets")
        .mean
}

fn seeds(plan: &Plan) -> Vec<u64> {
    (1..=plan.seeds).collect()
}

fn majority(plan: &Plan) -> usize {
    (plan.seeds as usize * 9).div_ceil(10)
}

fn mm1_classes() -> Vec<TrafficClassSpec> {
    vec![TrafficClassSpec::exponential(0, 0.5, Tier::Default)]
}

fn intserv_classes() -> Vec<TrafficClassSpec> {
    vec![
        TrafficClassSpec::exponential(0, 0.2, Tier::Reserved),
        TrafficClassSpec::exponential(1, 0.4, Tier::BestEffort),
    ]
}

fn priority_classes() -> Vec<TrafficClassSpec> {
    vec![
        TrafficClassSpec::exponential(0, 0.25, Tier::HighPriority),
        TrafficClassSpec::exponential(1, 0.25, Tier::LowPriority),
    ]
}

const NON_PREEMPTIVE: Discipline = Discipline::Priority {
    policy: PriorityPolicy::NonPreemptive,
};

fn heavy_tail_classes() -> Vec<TrafficClassSpec> {
    let h2 = ServiceDist::balanced_h2(1.0, 2.0).expect("valid hyperexponential");
    vec![TrafficClassSpec::new(0, 0.5, h2, Tier::Default)]
}

pub fn mm1_agreement(plan: &Plan) -> Vec<Check> {
    let analytic = mm1_metrics(QueueParams {
        lambda: 0.5,
        mu: 1.0,
    })
    .expect("stable");
    let mut s = scenario(mm1_classes(), Discipline::Fifo, plan.mm1_horizon, 1);
    s.warmup = 1e5_f64.min(plan.mm1_horizon / 10.0);
    let d = delay_stats(&run(&s), None);
    vec![
        rel_check(
            1,
            "M/M/1 analytic mean sojourn",
            2.0,
            analytic.mean_sojourn,
            1e-9,
        ),
        rel_check(
            1,
            "M/M/1 simulated mean sojourn",
            analytic.mean_sojourn,
            d.mean,
            0.02,
        ),
        rel_check(
            1,
            "M/M/1 simulated delay CoV",
            1.0,
            d.cov.unwrap_or(f64::NAN),
            0.03,
        ),
    ]
}

pub fn intserv_delay_increase(plan: &Plan) -> Vec<Check> {
    let split = intserv_split(PartitionSpec {
        total: QueueParams {
            lambda: 0.6,
            mu: 1.0,
        },
        reserved_lambda: 0.2,
        reserved_mu: 0.5,
    })
    .expect("stable partition");
    let partitioned = run(&scenario(
        intserv_classes(),
        Discipline::Partitioned { reserved_mu: 0.5 },
        plan.intserv_horizon,
        1,
    ));
    let shared = run(&scenario(
        intserv_classes(),
        Discipline::Fifo,
        plan.intserv_horizon,
        1,
    ));
    vec![
        rel_check(
            2,
            "intserv analytic best-effort mean",
            10.0,
            split.best_effort.mean_sojourn,
            1e-9,
        ),
        rel_check(
            2,
            "intserv analytic baseline mean",
            2.5,
            split.baseline.mean_sojourn,
            1e-9,
        ),
        rel_check(
            2,
            "intserv simulated best-effort mean",
            split.best_effort.mean_sojourn,
            delay_stats(&partitioned, Some(Tier::BestEffort)).mean,
            0.03,
        ),
        rel_check(
            2,
            "intserv simulated baseline mean",
            split.baseline.mean_sojourn,
            delay_stats(&shared, None).mean,
            0.03,
        ),
    ]
}

pub const SWEEP_GRID: [f64; 3] = [0.3, 0.4, 0.5];

pub fn reservation_monotonicity(plan: &Plan) -> Vec<Check> {
    let points = reservation_variance_sweep(
        QueueParams {
            lambda: 0.6,
            mu: 1.0,
        },
        0.2,
        &SWEEP_GRID,
    )
    .expect("increasing grid");
    let vars: Vec<f64> = points
        .iter()
        .map(|p| p.best_effort_var.unwrap_or(f64::NAN))
        .collect();
    let mut checks: Vec<Check> = [100.0 / 9.0, 25.0, 100.0]
        .iter()
        .zip(&vars)
        .zip(SWEEP_GRID)
        .map(|((&target, &v), mu1)| {
            rel_check(
                3,
                &format!("analytic best-effort variance at mu1={mu1}"),
                target,
                v,
                1e-9,
            )
        })
        .collect();
    checks.push(Check {
        criterion: 3,
        name: "analytic best-effort variance strictly increasing".into(),
        target: "strictly increasing".into(),
        observed: format!("{vars:?}"),
        tolerance: "exact".into(),
        passed: vars.windows(2).all(|w| w[0] < w[1]),
    });

    let agreeing = seeds(plan)
        .par_iter()
        .filter(|&&seed| {
            let var_price: Vec<f64> = SWEEP_GRID
                .iter()
                .map(|&mu1| {
                    let t = run(&scenario(
                        intserv_classes(),
                        Discipline::Partitioned { reserved_mu: mu1 },
                        plan.sweep_horizon,
                        seed,
                    ));
                    let prices = price_packets(
                        &marginal_cost_all(&t),
                        PricingScheme::MarginalCost { value_of_time: 1.0 },
                    );
                    certainty_report(&t, &prices)
                        .tier(Tier::BestEffort)
                        .and_then(|r| r.price)
                        .map_or(f64::NAN, |p| p.variance)
                })
                .collect();
            var_price.windows(2).all(|w| w[0] <= w[1])
        })
        .count();
    checks.push(count_check(
        3,
        "simulated best-effort price variance nondecreasing in mu1",
        agreeing,
        plan.seeds as usize,
        majority(plan),
    ));
    checks
}

struct PriorityRun {
    wait_hi_ok: bool,
    wait_lo_ok: bool,
}

struct DirectionRun {
    lo_delay_higher: bool,
    lo_var_higher: bool,
    lo_mc_lower: bool,
    hi_delay_lower: bool,
}

pub fn diffserv_direction(plan: &Plan) -> Vec<Check> {
    let analytic = priority_mm1_means(PriorityParams {
        lambda_hi: 0.25,
        lambda_lo: 0.25,
        mu: 1.0,
        policy: PriorityPolicy::NonPreemptive,
    })
    .expect("stable");
    let fifo = mm1_metrics(QueueParams {
        lambda: 0.5,
        mu: 1.0,
    })
    .expect("stable");
    let mut checks = vec![
        rel_check(
            4,
            "analytic high-tier wait",
            2.0 / 3.0,
            analytic.wait_hi,
            1e-9,
        ),
        rel_check(
            4,
            "analytic low-tier wait",
            4.0 / 3.0,
            analytic.wait_lo,
            1e-9,
        ),
        rel_check(4, "analytic FIFO wait", 1.0, fifo.mean_wait, 1e-9),
    ];

    let waits: Vec<PriorityRun> = seeds(plan)
        .par_iter()
        .map(|&seed| {
            let t = run(&scenario(
                priority_classes(),
                NON_PREEMPTIVE,
                plan.priority_wait_horizon,
                seed,
            ));
            let within = |obs: f64, target: f64| ((obs - target) / target).abs() <= 0.03;
            PriorityRun {
                wait_hi_ok: within(mean_wait(&t, Tier::HighPriority), analytic.wait_hi),
                wait_lo_ok: within(mean_wait(&t, Tier::LowPriority), analytic.wait_lo),
            }
        })
        .collect();
    let n = plan.seeds as usize;
    let need = majority(plan);
    checks.push(count_check(
        4,
        &format!("high-tier mean wait within 3% of {:.4}", analytic.wait_hi),
        waits.iter().filter(|w| w.wait_hi_ok).count(),
        n,
        need,
    ));
    checks.push(count_check(
        4,
        &format!("low-tier mean wait within 3% of {:.4}", analytic.wait_lo),
        waits.iter().filter(|w| w.wait_lo_ok).count(),
        n,
        need,
    ));

    let dirs: Vec<DirectionRun> = seeds(plan)
        .par_iter()
        .map(|&seed| {
            let prio = run(&scenario(
                priority_classes(),
                NON_PREEMPTIVE,
                plan.priority_cost_horizon,
                seed,
            ));
            let base = run(&scenario(
                priority_classes(),
                Discipline::Fifo,
                plan.priority_cost_horizon,
                seed,
            ));
            let (pc, bc) = (marginal_cost_all(&prio), marginal_cost_all(&base));
            let (plo, blo) = (
                delay_stats(&prio, Some(Tier::LowPriority)),
                delay_stats(&base, Some(Tier::LowPriority)),
            );
            DirectionRun {
                lo_delay_higher: plo.mean > blo.mean,
                lo_var_higher: plo.variance > blo.variance,
                lo_mc_lower: mean_mc(&prio, &pc, Tier::LowPriority)
                    < mean_mc(&base, &bc, Tier::LowPriority),
                hi_delay_lower: delay_stats(&prio, Some(Tier::HighPriority)).mean
                    < delay_stats(&base, Some(Tier::HighPriority)).mean,
            }
        })
        .collect();
    for (name, pick) in [
        (
            "low-tier mean delay above FIFO",
            (|d: &DirectionRun| d.lo_delay_higher) as fn(&DirectionRun) -> bool,
        ),
        ("low-tier delay variance above FIFO", |d| d.lo_var_higher),
        ("low-tier mean MC below FIFO", |d| d.lo_mc_lower),
        ("high-tier mean delay below FIFO", |d| d.hi_delay_lower),
    ] {
        checks.push(count_check(
            4,
            name,
            dirs.iter().filter(|d| pick(d)).count(),
            n,
            need,
        ));
    }
    checks
}

pub const ORACLE_PACKETS: usize = 1000;

/// A trace of exactly `ORACLE_PACKETS` packets whose load depends on `k`.
pub fn oracle_trace(k: usize, partitioned: bool) -> PacketTrace {
    let lambda_a = 0.1 + 0.05 * (k % 10) as f64;
    let lambda_b = 0.1 + 0.04 * ((k / 10) % 10) as f64;
    let (classes, discipline) = if partitioned {
        (
            vec![
                TrafficClassSpec::exponential(0, lambda_a, Tier::Reserved),
                TrafficClassSpec::exponential(1, lambda_b, Tier::BestEffort),
            ],
            Discipline::Partitioned {
                reserved_mu: 0.3 + 0.04 * (k % 10) as f64,
            },
        )
    } else {
        (
            vec![
                TrafficClassSpec::exponential(0, lambda_a, Tier::Default),
                TrafficClassSpec::exponential(1, lambda_b, Tier::Default),
            ],
            Discipline::Fifo,
        )
    };
    let horizon = 2.0 * ORACLE_PACKETS as f64 / (lambda_a + lambda_b);
    let s = Scenario {
        classes,
        discipline,
        mu: 1.0,
        horizon,
        warmup: 0.0,
        seed: 1000 + k as u64,
    };
    let mut arrivals = generate_arrivals(&s).expect("valid oracle scenario");
    assert!(arrivals.len() >= ORACLE_PACKETS, "oracle horizon too short");
    arrivals.truncate(ORACLE_PACKETS);
    PacketTrace::from_arrivals(s, arrivals).expect("valid oracle trace")
}

/// Packets whose two cost routes disagree in any bit.
pub fn oracle_mismatches(trace: &PacketTrace) -> usize {
    let ctx = CostContext::new(trace);
    let ids = delivered_ids(trace);
    let full = ctx.costs(&ids, CostMethod::FullReplay).expect("delivered");
    let seg = ctx
        .costs(&ids, CostMethod::SegmentReplay)
        .expect("delivered");
    full.iter()
        .zip(&seg)
        .filter(|(a, b)| a.mc.to_bits() != b.mc.to_bits() || a.affected_count != b.affected_count)
        .count()
}

pub fn mc_oracle_equivalence(plan: &Plan) -> Vec<Check> {
    let jobs: Vec<(usize, bool)> = (0..plan.oracle_traces)
        .flat_map(|k| [(k, false), (k, true)])
        .collect();
    let results: Vec<(bool, usize, usize)> = jobs
        .par_iter()
        .map(|&(k, partitioned)| {
            let t = oracle_trace(k, partitioned);
            (partitioned, t.records().len(), oracle_mismatches(&t))
        })
        .collect();
    [(false, "FIFO"), (true, "partitioned")]
        .into_iter()
        .map(|(kind, label)| {
            let group: Vec<_> = results.iter().filter(|r| r.0 == kind).collect();
            let sized = group.iter().all(|r| r.1 == ORACLE_PACKETS);
            let mismatches: usize = group.iter().map(|r| r.2).sum();
            Check {
                criterion: 5,
                name: format!("segment replay equals full replay on {} {label} traces of {ORACLE_PACKETS} packets", group.len()),
                target: "0 mismatched packets".into(),
                observed: format!("{mismatches} mismatched packets"),
                tolerance: "bit-exact".into(),
                passed: sized && mismatches == 0,
            }
        })
        .collect()
}

pub fn blocking_certainty(plan: &Plan) -> Vec<Check> {
    let analytic = mm1k_blocking(
        QueueParams {
            lambda: 1.0,
            mu: 1.0,
        },
        1,
    )
    .expect("valid");
    let t = run(&scenario(
        vec![TrafficClassSpec::exponential(0, 1.0, Tier::Default)],
        Discipline::Blocking { capacity: 1 },
        plan.blocking_horizon,
        1,
    ));
    let costs = marginal_cost_all(&t);
    let nonzero = costs.iter().filter(|c| c.mc != 0.0).count();
    let prices = price_packets(&costs, PricingScheme::MarginalCost { value_of_time: 1.0 });
    let report = certainty_report(&t, &prices);
    let row = report.class(0).expect("class row");
    vec![
        rel_check(
            6,
            "analytic blocking probability",
            0.5,
            analytic.blocking_prob,
            1e-9,
        ),
        rel_check(
            6,
            "simulated blocking probability",
            analytic.blocking_prob,
            row.blocked_frac.unwrap_or(f64::NAN),
            0.02,
        ),
        Check {
            criterion: 6,
            name: format!(
                "every delivered packet has zero MC ({} packets)",
                costs.len()
            ),
            target: "0 nonzero".into(),
            observed: format!("{nonzero} nonzero"),
            tolerance: "exact".into(),
            passed: nonzero == 0 && !costs.is_empty(),
        },
        exact_check(
            6,
            "marginal-cost price variance",
            0.0,
            row.price.map_or(f64::NAN, |p| p.variance),
        ),
    ]
}

/// Every scenario the suite simulates, at the given horizon.
pub fn suite_scenarios(horizon: f64) -> Vec<(String, Scenario)> {
    let mut out: Vec<(String, Scenario)> = vec![
        ("mm1", scenario(mm1_classes(), Discipline::Fifo, horizon, 1)),
        (
            "intserv-baseline",
            scenario(intserv_classes(), Discipline::Fifo, horizon, 1),
        ),
        (
            "priority",
            scenario(priority_classes(), NON_PREEMPTIVE, horizon, 1),
        ),
        (
            "priority-baseline",
            scenario(priority_classes(), Discipline::Fifo, horizon, 1),
        ),
        (
            "blocking",
            scenario(
                vec![TrafficClassSpec::exponential(0, 1.0, Tier::Default)],
                Discipline::Blocking { capacity: 1 },
                horizon,
                1,
            ),
        ),
        (
            "heavy-tail",
            scenario(heavy_tail_classes(), Discipline::Fifo, horizon, 1),
        ),
    ]
    .into_iter()
    .map(|(name, s)| (name.to_string(), s))
    .collect();
    for mu1 in SWEEP_GRID {
        out.push((
            format!("intserv mu1={mu1}"),
            scenario(
                intserv_classes(),
                Discipline::Partitioned { reserved_mu: mu1 },
                horizon,
                1,
            ),
        ));
    }
    out
}

pub fn flat_rate_pole(plan: &Plan) -> Vec<Check> {
    let scheme = PricingScheme::flat_rate(1.0).expect("valid flat rate");
    suite_scenarios(plan.flat_rate_horizon)
        .par_iter()
        .map(|(name, s)| {
            let t = run(s);
            let report = certainty_report(&t, &price_packets(&marginal_cost_all(&t), scheme));
            let worst = report
                .rows
                .iter()
                .filter_map(|r| r.price.map(|p| p.variance))
                .fold(0.0_f64, f64::max);
            let priced = report
                .rows
                .iter()
                .all(|r| r.delivered == 0 || r.price.is_some());
            Check {
                criterion: 7,
                name: format!(
                    "flat-rate price variance on {name} ({})",
                    s.discipline.name()
                ),
                target: "0".into(),
                observed: worst.to_string(),
                tolerance: "exact".into(),
                passed: priced && worst == 0.0,
            }
        })
        .collect()
}

pub fn heavy_tail_direction(plan: &Plan) -> Vec<Check> {
    let agreeing = seeds(plan)
        .par_iter()
        .filter(|&&seed| {
            let exp = run(&scenario(
                mm1_classes(),
                Discipline::Fifo,
                plan.heavy_tail_horizon,
                seed,
            ));
            let h2 = run(&scenario(
                heavy_tail_classes(),
                Discipline::Fifo,
                plan.heavy_tail_horizon,
                seed,
            ));
            delay_stats(&h2, None).cov > delay_stats(&exp, None).cov
        })
        .count();
    vec![count_check(
        8,
        "delay CoV with CoV-2 sizes above exponential sizes at rho=0.5",
        agreeing,
        plan.seeds as usize,
        majority(plan),
    )]
}

pub const DETERMINISM_SCENARIO: &str = "\
discipline = priority
policy = preemptive-resume
mu = 1
horizon = 5000
seed = 7
class.0.lambda = 0.3
class.0.tier = high_priority
class.1.lambda = 0.3
class.1.service = h2(1, 2)
class.1.tier = low_priority
";

pub fn determinism(_plan: &Plan) -> Vec<Check> {
    let file = parse_scenario(DETERMINISM_SCENARIO).expect("built-in scenario parses");
    let a = render_simulation(&file, "determinism", None);
    let b = render_simulation(&file, "determinism", None);
    let same = matches!((&a, &b), (Ok(x), Ok(y)) if x == y);
    vec![Check {
        criterion: 9,
        name: "simulate renders identical bytes twice".into(),
        target: "identical".into(),
        observed: if same { "identical" } else { "different" }.into(),
        tolerance: "bit-exact".into(),
        passed: same,
    }]
}

pub type Criterion = fn(&Plan) -> Vec<Check>;

pub const CRITERIA: [(u8, &str, Criterion); 9] = [
    (1, "analytic-simulation agreement (M/M/1)", mm1_agreement),
    (2, "intserv delay increase", intserv_delay_increase),
    (
        3,
        "inverse-relationship monotonicity",
        reservation_monotonicity,
    ),
    (4, "diffserv direction", diffserv_direction),
    (5, "MC oracle equivalence", mc_oracle_equivalence),
    (6, "blocking price certainty", blocking_certainty),
    (7, "flat-rate pole", flat_rate_pole),
    (8, "heavy-tail direction", heavy_tail_direction),
    (9, "determinism", determinism),
];

pub fn run_suite(scale: Scale) -> Vec<Check> {
    let plan = scale.plan();
    CRITERIA.iter().flat_map(|(_, _, f)| f(&plan)).collect()
}
