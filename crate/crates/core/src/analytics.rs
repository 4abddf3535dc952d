//! Closed-form results for the single shared link and its QoS variants.
//!
//! Everything here is a pure function of its inputs. The formulas cover
//! the M/M/1 queue, a static capacity partition into two isolated M/M/1
//! queues, the two-class M/M/1 priority queue (mean waits only) and the
//! M/M/1/K loss system.

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalyticsError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unstable queue: utilization {rho} >= 1")]
    Unstable { rho: f64 },
    #[error("invalid partition: {0}")]
    InvalidPartition(String),
}

pub type Result<T> = std::result::Result<T, AnalyticsError>;

/// Arrival rate and service rate of a single queue.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueueParams {
    pub lambda: f64,
    pub mu: f64,
}

impl QueueParams {
    pub fn new(lambda: f64, mu: f64) -> Result<Self> {
        let p = QueueParams { lambda, mu };
        p.check()?;
        Ok(p)
    }

    pub fn rho(&self) -> f64 {
        self.lambda / self.mu
    }

    fn check(&self) -> Result<()> {
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(AnalyticsError::InvalidParameter(format!(
                "service rate must be positive, got {}",
                self.mu
            )));
        }
        if !(self.lambda >= 0.0) || !self.lambda.is_finite() {
            return Err(AnalyticsError::InvalidParameter(format!(
                "arrival rate must be nonnegative, got {}",
                self.lambda
            )));
        }
        Ok(())
    }

    fn check_stable(&self) -> Result<f64> {
        self.check()?;
        let rho = self.rho();
        if rho >= 1.0 {
            return Err(AnalyticsError::Unstable { rho });
        }
        Ok(rho)
    }
}

/// Steady-state delay moments of a queue or traffic class.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalyticResult {
    pub mean_sojourn: f64,
    pub var_sojourn: f64,
    pub std_sojourn: f64,
    pub mean_wait: f64,
    pub utilization: f64,
}

/// M/M/1 sojourn moments. The sojourn time is exponential with rate
/// `mu - lambda`, so its standard deviation equals its mean.
pub fn mm1_metrics(p: QueueParams) -> Result<AnalyticResult> {
    let rho = p.check_stable()?;
    let mean_sojourn = (1.0 / p.mu) / (1.0 - rho);
    let std_sojourn = 1.0 / (p.mu - p.lambda);
    Ok(AnalyticResult {
        mean_sojourn,
        var_sojourn: std_sojourn * std_sojourn,
        std_sojourn,
        mean_wait: mean_sojourn - 1.0 / p.mu,
        utilization: rho,
    })
}

/// A reserved sub-queue carved out of a shared link. The reserved
/// server gets `reserved_mu` and carries `reserved_lambda`; everything
/// else stays on the best-effort remainder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PartitionSpec {
    pub total: QueueParams,
    pub reserved_lambda: f64,
    pub reserved_mu: f64,
}

impl PartitionSpec {
    pub fn reserved(&self) -> QueueParams {
        QueueParams {
            lambda: self.reserved_lambda,
            mu: self.reserved_mu,
        }
    }

    pub fn best_effort(&self) -> QueueParams {
        QueueParams {
            lambda: self.total.lambda - self.reserved_lambda,
            mu: self.total.mu - self.reserved_mu,
        }
    }

    fn check(&self) -> Result<()> {
        self.total.check()?;
        if !(self.reserved_mu > 0.0) || self.reserved_mu >= self.total.mu {
            return Err(AnalyticsError::InvalidPartition(format!(
                "reserved service rate {} must lie in (0, {})",
                self.reserved_mu, self.total.mu
            )));
        }
        if !(self.reserved_lambda >= 0.0) || self.reserved_lambda > self.total.lambda {
            return Err(AnalyticsError::InvalidPartition(format!(
                "reserved arrival rate {} must lie in [0, {}]",
                self.reserved_lambda, self.total.lambda
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntservSplit {
    pub reserved: AnalyticResult,
    pub best_effort: AnalyticResult,
    /// The unpartitioned link carrying the same total load.
    pub baseline: AnalyticResult,
    pub delay_increase: f64,
    pub var_increase: f64,
}

/// Splits a link into reserved and best-effort queues and reports how
/// much the best-effort delay mean and variance grow relative to the
/// unpartitioned link. Neither queue shares capacity with the other.
pub fn intserv_split(s: PartitionSpec) -> Result<IntservSplit> {
    s.check()?;
    let reserved = mm1_metrics(s.reserved())?;
    let best_effort = mm1_metrics(s.best_effort())?;
    let baseline = mm1_metrics(s.total)?;
    Ok(IntservSplit {
        reserved,
        best_effort,
        baseline,
        delay_increase: best_effort.mean_sojourn - baseline.mean_sojourn,
        var_increase: best_effort.var_sojourn - baseline.var_sojourn,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum PriorityPolicy {
    #[default]
    NonPreemptive,
    PreemptiveResume,
}

/// Two classes sharing one exponential server of rate `mu`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityParams {
    pub lambda_hi: f64,
    pub lambda_lo: f64,
    pub mu: f64,
    pub policy: PriorityPolicy,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorityMeans {
    pub wait_hi: f64,
    pub wait_lo: f64,
    pub sojourn_hi: f64,
    pub sojourn_lo: f64,
}

/// Mean waits of the two-class M/M/1 priority queue.
///
/// Non-preemptive: `W_k = W0 / ((1 - s_{k-1})(1 - s_k))` with the mean
/// residual work `W0 = sum(lambda_i E[S^2]) / 2 = lambda / mu^2`.
/// Preemptive-resume: class k sees only the load of classes `<= k`; its
/// wait is the sojourn minus its own service time.
pub fn priority_mm1_means(p: PriorityParams) -> Result<PriorityMeans> {
    for (name, l) in [("lambda_hi", p.lambda_hi), ("lambda_lo", p.lambda_lo)] {
        if !(l >= 0.0) || !l.is_finite() {
            return Err(AnalyticsError::InvalidParameter(format!(
                "{name} must be nonnegative, got {l}"
            )));
        }
    }
    let total = QueueParams {
        lambda: p.lambda_hi + p.lambda_lo,
        mu: p.mu,
    };
    total.check_stable()?;
    let service = 1.0 / p.mu;
    let sigma_hi = p.lambda_hi / p.mu;
    let sigma_all = total.rho();

    let (wait_hi, wait_lo) = match p.policy {
        PriorityPolicy::NonPreemptive => {
            let w0 = total.lambda / (p.mu * p.mu);
            (
                w0 / (1.0 - sigma_hi),
                w0 / ((1.0 - sigma_hi) * (1.0 - sigma_all)),
            )
        }
        PriorityPolicy::PreemptiveResume => {
            let r_hi = p.lambda_hi / (p.mu * p.mu);
            let r_all = total.lambda / (p.mu * p.mu);
            let sojourn_hi = service + r_hi / (1.0 - sigma_hi);
            let sojourn_lo =
                service / (1.0 - sigma_hi) + r_all / ((1.0 - sigma_hi) * (1.0 - sigma_all));
            (sojourn_hi - service, sojourn_lo - service)
        }
    };
    Ok(PriorityMeans {
        wait_hi,
        wait_lo,
        sojourn_hi: wait_hi + service,
        sojourn_lo: wait_lo + service,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockingResult {
    pub blocking_prob: f64,
    pub delivered_mean_sojourn: f64,
}

/// M/M/1/K loss system, where `capacity` counts the packet in service
/// plus the waiting room. Stable for any load.
pub fn mm1k_blocking(p: QueueParams, capacity: u32) -> Result<BlockingResult> {
    p.check()?;
    if capacity == 0 {
        return Err(AnalyticsError::InvalidParameter(
            "capacity must be at least 1".into(),
        ));
    }
    let rho = p.rho();
    // Unnormalized stationary weights rho^n, n = 0..=K.
    let weights: Vec<f64> = (0..=capacity).map(|n| rho.powi(n as i32)).collect();
    let norm: f64 = weights.iter().sum();
    let blocking_prob = weights[capacity as usize] / norm;
    let delivered_mean_sojourn = if p.lambda == 0.0 {
        1.0 / p.mu
    } else {
        let mean_in_system: f64 = weights
            .iter()
            .enumerate()
            .map(|(n, w)| n as f64 * w)
            .sum::<f64>()
            / norm;
        mean_in_system / (p.lambda * (1.0 - blocking_prob))
    };
    Ok(BlockingResult {
        blocking_prob,
        delivered_mean_sojourn,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub enum SweepStatus {
    Ok,
    Skipped(AnalyticsError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepPoint {
    pub mu1: f64,
    pub rho1: Option<f64>,
    pub best_effort_var: Option<f64>,
    pub status: SweepStatus,
}

/// Best-effort delay variance as the reserved server rate grows with the
/// reserved load held fixed. Points that do not describe a valid stable
/// partition are kept in the output but flagged and left empty.
pub fn reservation_variance_sweep(
    total: QueueParams,
    reserved_lambda: f64,
    mu1_grid: &[f64],
) -> Result<Vec<SweepPoint>> {
    total.check()?;
    if mu1_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(AnalyticsError::InvalidParameter(
            "mu1 grid must be strictly increasing".into(),
        ));
    }
    let points = mu1_grid
        .iter()
        .map(|&mu1| {
            let spec = PartitionSpec {
                total,
                reserved_lambda,
                reserved_mu: mu1,
            };
            match intserv_split(spec) {
                Ok(split) => SweepPoint {
                    mu1,
                    rho1: Some(split.reserved.utilization),
                    best_effort_var: Some(split.best_effort.var_sojourn),
                    status: SweepStatus::Ok,
                },
                Err(e) => SweepPoint {
                    mu1,
                    rho1: None,
                    best_effort_var: None,
                    status: SweepStatus::Skipped(e),
                },
            }
        })
        .collect();
    Ok(points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn q(lambda: f64, mu: f64) -> QueueParams {
        QueueParams { lambda, mu }
    }

    #[test]
    fn mm1_empty_system_is_pure_service() {
        let r = mm1_metrics(q(0.0, 1.0)).unwrap();
        assert_eq!(r.mean_sojourn, 1.0);
        assert_eq!(r.var_sojourn, 1.0);
        assert_eq!(r.mean_wait, 0.0);
    }

    #[test]
    fn mm1_half_load() {
        let r = mm1_metrics(q(0.5, 1.0)).unwrap();
        assert_relative_eq!(r.mean_sojourn, 2.0, epsilon = 1e-12);
        assert_relative_eq!(r.var_sojourn, 4.0, epsilon = 1e-12);
        assert_relative_eq!(r.mean_wait, 1.0, epsilon = 1e-12);
        assert_relative_eq!(
            mm1_metrics(q(0.9, 1.0)).unwrap().mean_sojourn,
            10.0,
            epsilon = 1e-9
        );
    }

    #[test]
    fn mm1_rejects_bad_params() {
        assert!(matches!(
            mm1_metrics(q(1.0, 1.0)),
            Err(AnalyticsError::Unstable { .. })
        ));
        assert!(matches!(
            mm1_metrics(q(2.0, 1.0)),
            Err(AnalyticsError::Unstable { .. })
        ));
        assert!(matches!(
            mm1_metrics(q(0.1, 0.0)),
            Err(AnalyticsError::InvalidParameter(_))
        ));
        assert!(matches!(
            mm1_metrics(q(-0.1, 1.0)),
            Err(AnalyticsError::InvalidParameter(_))
        ));
        assert!(QueueParams::new(0.5, -1.0).is_err());
    }

    #[test]
    fn intserv_worked_example() {
        let s = PartitionSpec {
            total: q(0.6, 1.0),
            reserved_lambda: 0.2,
            reserved_mu: 0.5,
        };
        let r = intserv_split(s).unwrap();
        assert_relative_eq!(r.reserved.mean_sojourn, 10.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(r.best_effort.mean_sojourn, 10.0, epsilon = 1e-9);
        assert_relative_eq!(r.baseline.mean_sojourn, 2.5, epsilon = 1e-12);
        assert_relative_eq!(r.delay_increase, 7.5, epsilon = 1e-9);
        assert_relative_eq!(r.var_increase, 93.75, epsilon = 1e-8);
    }

    #[test]
    fn intserv_null_partition_matches_baseline() {
        let s = PartitionSpec {
            total: q(0.6, 1.0),
            reserved_lambda: 0.0,
            reserved_mu: 1e-12,
        };
        let r = intserv_split(s).unwrap();
        assert_relative_eq!(
            r.best_effort.mean_sojourn,
            r.baseline.mean_sojourn,
            epsilon = 1e-9
        );
        assert!(r.delay_increase.abs() < 1e-9);
    }

    #[test]
    fn intserv_rejects_bad_partitions() {
        let base = PartitionSpec {
            total: q(0.6, 1.0),
            reserved_lambda: 0.2,
            reserved_mu: 1.0,
        };
        assert!(matches!(
            intserv_split(base),
            Err(AnalyticsError::InvalidPartition(_))
        ));
        let over = PartitionSpec {
            reserved_lambda: 0.7,
            reserved_mu: 0.9,
            ..base
        };
        assert!(matches!(
            intserv_split(over),
            Err(AnalyticsError::InvalidPartition(_))
        ));
        // reserved queue saturated
        let sat = PartitionSpec {
            reserved_lambda: 0.3,
            reserved_mu: 0.3,
            ..base
        };
        assert!(matches!(
            intserv_split(sat),
            Err(AnalyticsError::Unstable { .. })
        ));
        // best-effort queue saturated
        let sat2 = PartitionSpec {
            reserved_lambda: 0.1,
            reserved_mu: 0.5,
            ..base
        };
        assert!(matches!(
            intserv_split(sat2),
            Err(AnalyticsError::Unstable { .. })
        ));
    }

    #[test]
    fn priority_non_preemptive_worked_example() {
        let m = priority_mm1_means(PriorityParams {
            lambda_hi: 0.25,
            lambda_lo: 0.25,
            mu: 1.0,
            policy: PriorityPolicy::NonPreemptive,
        })
        .unwrap();
        assert_relative_eq!(m.wait_hi, 2.0 / 3.0, epsilon = 1e-12);
        assert_relative_eq!(m.wait_lo, 4.0 / 3.0, epsilon = 1e-12);
        let fifo = mm1_metrics(q(0.5, 1.0)).unwrap().mean_wait;
        assert!(m.wait_hi < fifo && fifo < m.wait_lo);
    }

    #[test]
    fn priority_single_class_degenerates_to_fifo() {
        for policy in [
            PriorityPolicy::NonPreemptive,
            PriorityPolicy::PreemptiveResume,
        ] {
            let lo_only = priority_mm1_means(PriorityParams {
                lambda_hi: 0.0,
                lambda_lo: 0.5,
                mu: 1.0,
                policy,
            })
            .unwrap();
            assert_relative_eq!(lo_only.wait_lo, 1.0, epsilon = 1e-12);
            let hi_only = priority_mm1_means(PriorityParams {
                lambda_hi: 0.5,
                lambda_lo: 0.0,
                mu: 1.0,
                policy,
            })
            .unwrap();
            assert_relative_eq!(hi_only.wait_hi, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn preemptive_high_class_sees_only_itself() {
        let m = priority_mm1_means(PriorityParams {
            lambda_hi: 0.3,
            lambda_lo: 0.4,
            mu: 1.0,
            policy: PriorityPolicy::PreemptiveResume,
        })
        .unwrap();
        let alone = mm1_metrics(q(0.3, 1.0)).unwrap();
        assert_relative_eq!(m.sojourn_hi, alone.mean_sojourn, epsilon = 1e-12);
        // total mean number in system is discipline-invariant for exponential service
        let fifo = mm1_metrics(q(0.7, 1.0)).unwrap();
        assert_relative_eq!(
            0.3 * m.sojourn_hi + 0.4 * m.sojourn_lo,
            0.7 * fifo.mean_sojourn,
            epsilon = 1e-12
        );
    }

    #[test]
    fn priority_rejects_unstable() {
        let r = priority_mm1_means(PriorityParams {
            lambda_hi: 0.5,
            lambda_lo: 0.5,
            mu: 1.0,
            policy: PriorityPolicy::NonPreemptive,
        });
        assert!(matches!(r, Err(AnalyticsError::Unstable { .. })));
    }

    #[test]
    fn blocking_single_slot() {
        let r = mm1k_blocking(q(1.0, 1.0), 1).unwrap();
        assert_relative_eq!(r.blocking_prob, 0.5, epsilon = 1e-12);
        assert_eq!(mm1k_blocking(q(0.0, 1.0), 1).unwrap().blocking_prob, 0.0);
        assert_relative_eq!(
            mm1k_blocking(q(0.5, 1.0), 1)
                .unwrap()
                .delivered_mean_sojourn,
            1.0,
            epsilon = 1e-12
        );
        // Erlang-B with one server: rho / (1 + rho)
        assert_relative_eq!(
            mm1k_blocking(q(3.0, 2.0), 1).unwrap().blocking_prob,
            1.5 / 2.5,
            epsilon = 1e-12
        );
    }

    #[test]
    fn blocking_large_capacity_approaches_mm1() {
        let r = mm1k_blocking(q(0.5, 1.0), 200).unwrap();
        assert!(r.blocking_prob < 1e-50);
        assert_relative_eq!(r.delivered_mean_sojourn, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn blocking_rejects_bad_params() {
        assert!(mm1k_blocking(q(1.0, 0.0), 1).is_err());
        assert!(mm1k_blocking(q(1.0, 1.0), 0).is_err());
    }

    #[test]
    fn sweep_worked_example() {
        let pts = reservation_variance_sweep(q(0.6, 1.0), 0.2, &[0.3, 0.4, 0.5]).unwrap();
        let vars: Vec<f64> = pts.iter().map(|p| p.best_effort_var.unwrap()).collect();
        assert_relative_eq!(vars[0], 1.0 / 0.09, epsilon = 1e-9);
        assert_relative_eq!(vars[1], 25.0, epsilon = 1e-9);
        assert_relative_eq!(vars[2], 100.0, epsilon = 1e-8);
        assert!(vars.windows(2).all(|w| w[0] < w[1]));
        assert_relative_eq!(pts[2].rho1.unwrap(), 0.4, epsilon = 1e-12);
    }

    #[test]
    fn sweep_flags_invalid_points() {
        let pts = reservation_variance_sweep(q(0.6, 1.0), 0.2, &[0.0, 0.3, 0.5, 0.7]).unwrap();
        assert!(matches!(pts[0].status, SweepStatus::Skipped(_)));
        assert!(pts[0].best_effort_var.is_none());
        assert_eq!(pts[1].status, SweepStatus::Ok);
        // mu2 = 0.3 < lambda2 = 0.4: best-effort saturated
        assert!(matches!(
            pts[3].status,
            SweepStatus::Skipped(AnalyticsError::Unstable { .. })
        ));
        assert!(reservation_variance_sweep(q(0.6, 1.0), 0.2, &[0.5, 0.4]).is_err());
    }

    prop_compose! {
        fn stable_queue()(mu in 0.1f64..10.0, rho in 0.0f64..0.99) -> QueueParams {
            q(rho * mu, mu)
        }
    }

    prop_compose! {
        // Valid partitions with the best-effort queue more loaded than the link.
        fn adequate_partition()(
            mu in 0.5f64..5.0,
            rho in 0.05f64..0.95,
            res_frac in 0.05f64..0.95,
            rho1 in 0.0f64..0.99,
        ) -> Option<PartitionSpec> {
            let lambda = rho * mu;
            let reserved_mu = res_frac * mu;
            let reserved_lambda = (rho1 * reserved_mu).min(lambda);
            let s = PartitionSpec { total: q(lambda, mu), reserved_lambda, reserved_mu };
            let rho2 = s.best_effort().rho();
            (rho2 > rho && rho2 < 1.0).then_some(s)
        }
    }

    proptest! {
        #[test]
        fn mm1_cov_is_one(p in stable_queue()) {
            let r = mm1_metrics(p).unwrap();
            prop_assert!((r.std_sojourn / r.mean_sojourn - 1.0).abs() < 1e-9);
            prop_assert!((r.std_sojourn * r.std_sojourn - r.var_sojourn).abs() <= 1e-9 * r.var_sojourn);
            prop_assert!(r.mean_sojourn >= r.mean_wait && r.mean_wait >= 0.0);
        }

        #[test]
        fn intserv_increases_are_positive(s in adequate_partition()) {
            if let Some(s) = s {
                let r = intserv_split(s).unwrap();
                prop_assert!(r.delay_increase > 0.0);
                prop_assert!(r.var_increase > 0.0);
                let (a, b) = (s.reserved(), s.best_effort());
                prop_assert!((a.lambda + b.lambda - s.total.lambda).abs() < 1e-12);
                prop_assert!((a.mu + b.mu - s.total.mu).abs() < 1e-12);
            }
        }

        #[test]
        fn non_preemptive_work_conservation(
            mu in 0.5f64..5.0, rho in 0.01f64..0.98, share in 0.0f64..1.0,
        ) {
            let lambda = rho * mu;
            let (hi, lo) = (share * lambda, (1.0 - share) * lambda);
            let fwd = priority_mm1_means(PriorityParams {
                lambda_hi: hi, lambda_lo: lo, mu, policy: PriorityPolicy::NonPreemptive,
            }).unwrap();
            let rev = priority_mm1_means(PriorityParams {
                lambda_hi: lo, lambda_lo: hi, mu, policy: PriorityPolicy::NonPreemptive,
            }).unwrap();
            let fifo = mm1_metrics(q(lambda, mu)).unwrap().mean_wait;
            let a = hi / mu * fwd.wait_hi + lo / mu * fwd.wait_lo;
            let b = lo / mu * rev.wait_hi + hi / mu * rev.wait_lo;
            let tol = 1e-9 * (1.0 + a.abs());
            prop_assert!((a - b).abs() < tol);
            prop_assert!((a - rho * fifo).abs() < tol);
            if hi > 1e-9 && lo > 1e-9 {
                prop_assert!(fwd.wait_hi < fifo && fifo < fwd.wait_lo);
            }
        }

        #[test]
        fn sweep_strictly_monotone(
            lambda in 0.1f64..0.9, frac in 0.05f64..0.5, n in 2usize..8,
        ) {
            let reserved_lambda = frac * lambda;
            let lambda2 = lambda - reserved_lambda;
            // grid of reserved rates keeping both queues stable
            let lo = reserved_lambda * 1.01 + 1e-6;
            let hi = (1.0 - lambda2) * 0.99;
            prop_assume!(lo < hi);
            let grid: Vec<f64> = (0..n).map(|k| lo + (hi - lo) * k as f64 / (n - 1) as f64).collect();
            let pts = reservation_variance_sweep(q(lambda, 1.0), reserved_lambda, &grid).unwrap();
            prop_assert!(pts.iter().all(|p| p.status == SweepStatus::Ok));
            for w in pts.windows(2) {
                prop_assert!(w[0].best_effort_var.unwrap() < w[1].best_effort_var.unwrap());
                prop_assert!(w[0].rho1.unwrap() > w[1].rho1.unwrap());
            }
        }

        #[test]
        fn analytics_never_return_nonfinite(lambda in 0.0f64..5.0, mu in 0.01f64..5.0) {
            match mm1_metrics(q(lambda, mu)) {
                Ok(r) => prop_assert!(r.mean_sojourn.is_finite() && r.var_sojourn.is_finite()),
                Err(e) => {
                    let unstable = matches!(e, AnalyticsError::Unstable { .. });
                    prop_assert!(unstable);
                }
            }
        }
    }
}
