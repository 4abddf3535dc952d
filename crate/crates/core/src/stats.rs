//! Sample statistics and per-class delay summaries of a trace.

use crate::scenario::Tier;
use crate::sim::PacketTrace;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SampleStats {
    pub count: usize,
    pub mean: f64,
    /// Unbiased (n - 1) sample variance; zero for a single sample.
    pub variance: f64,
    pub std: f64,
    /// `std / mean`, undefined when the mean is not positive.
    pub cov: Option<f64>,
    pub p50: f64,
    pub p95: f64,
    pub p99: f64,
}

impl SampleStats {
    /// `None` for an empty sample.
    pub fn from_values(values: &[f64]) -> Option<Self> {
        let n = values.len();
        let shift = *values.first()?;
        // Shifted sums: a constant sample gives exactly zero variance.
        let (mut s1, mut s2) = (0.0, 0.0);
        for &v in values {
            let d = v - shift;
            s1 += d;
            s2 += d * d;
        }
        let nf = n as f64;
        let mean = shift + s1 / nf;
        let variance = if n > 1 {
            ((s2 - s1 * s1 / nf) / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        let std = variance.sqrt();
        let mut sorted = values.to_vec();
        sorted.sort_by(f64::total_cmp);
        Some(SampleStats {
            count: n,
            mean,
            variance,
            std,
            cov: (mean > 0.0).then(|| std / mean),
            p50: nearest_rank(&sorted, 0.50),
            p95: nearest_rank(&sorted, 0.95),
            p99: nearest_rank(&sorted, 0.99),
        })
    }
}

/// Nearest-rank quantile of an ascending, nonempty sample.
pub fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * sorted.len() as f64).ceil().max(1.0) as usize;
    sorted[rank.min(sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassSummary {
    pub class_id: u32,
    pub tier: Tier,
    /// Post-warmup delivered packets; `None` if there were none.
    pub delay: Option<SampleStats>,
    pub offered: u64,
    pub blocked: u64,
}

impl ClassSummary {
    pub fn blocked_fraction(&self) -> Option<f64> {
        (self.offered > 0).then(|| self.blocked as f64 / self.offered as f64)
    }
}

/// Per-class delay statistics over packets arriving after warmup.
/// Blocked packets are counted but kept out of the delay statistics.
pub fn summarize(trace: &PacketTrace) -> Vec<ClassSummary> {
    trace
        .scenario()
        .classes
        .iter()
        .map(|class| {
            let steady = trace
                .records()
                .iter()
                .filter(|r| r.class_id == class.class_id && !r.warmup);
            let mut delays = Vec::new();
            let (mut offered, mut blocked) = (0, 0);
            for r in steady {
                offered += 1;
                match r.delay() {
                    Some(d) => delays.push(d),
                    None => blocked += 1,
                }
            }
            ClassSummary {
                class_id: class.class_id,
                tier: class.tier,
                delay: SampleStats::from_values(&delays),
                offered,
                blocked,
            }
        })
        .collect()
}
