//! CSV writers. Headers are fixed strings; numbers use Rust's shortest
//! round-trip formatting so output is byte-stable across runs.

use std::io::Write;

use crate::cost::CostRecord;
use crate::pricing::{CertaintyReport, ReportGroup};
use crate::sim::PacketTrace;
use crate::stats::SampleStats;

pub const TRACE_HEADER: &str =
    "packet_id,class_id,tier,arrival,service_demand,start,departure,wait,delay,delivered,warmup_flag";
pub const MC_HEADER: &str = "packet_id,class_id,tier,mc,affected_count,method";
pub const SUMMARY_HEADER: &str = "scenario_id,discipline,class_id,tier,n,mean_delay,var_delay,cov_delay,mean_price,var_price,cov_price,blocked_frac";

/// Marker for a statistic over an empty group.
pub const EMPTY: &str = "empty";
/// Marker for a coefficient of variation with zero mean.
pub const UNDEFINED: &str = "undefined";

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn header(header: &str) -> Vec<&str> {
    header.split(',').collect()
}

pub fn write_trace_csv<W: Write>(out: W, trace: &PacketTrace) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(TRACE_HEADER))?;
    for r in trace.records() {
        w.write_record([
            r.packet_id.to_string(),
            r.class_id.to_string(),
            r.tier.to_string(),
            r.arrival.to_string(),
            r.service_demand.to_string(),
            opt(r.start()),
            opt(r.departure()),
            opt(r.wait()),
            opt(r.delay()),
            r.delivered().to_string(),
            r.warmup.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_mc_csv<W: Write>(out: W, costs: &[CostRecord]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(MC_HEADER))?;
    for c in costs {
        w.write_record([
            c.packet_id.to_string(),
            c.class_id.to_string(),
            c.tier.to_string(),
            c.mc.to_string(),
            c.affected_count.to_string(),
            c.method.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

fn stat_fields(s: Option<SampleStats>) -> [String; 3] {
    match s {
        None => [EMPTY.into(), EMPTY.into(), EMPTY.into()],
        Some(s) => [
            s.mean.to_string(),
            s.variance.to_string(),
            s.cov
                .map_or_else(|| UNDEFINED.to_string(), |c| c.to_string()),
        ],
    }
}

/// Per-class rows, then per-tier rows with `*` in the class column.
pub fn write_summary_csv<W: Write>(
    out: W,
    scenario_id: &str,
    discipline: &str,
    report: &CertaintyReport,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(header(SUMMARY_HEADER))?;
    for row in &report.rows {
        let class = match row.group {
            ReportGroup::Class(id) => id.to_string(),
            ReportGroup::Tier(_) => "*".to_string(),
        };
        let [md, vd, cd] = stat_fields(row.delay);
        let [mp, vp, cp] = stat_fields(row.price);
        w.write_record([
            scenario_id.to_string(),
            discipline.to_string(),
            class,
            row.tier.to_string(),
            row.delivered.to_string(),
            md,
            vd,
            cd,
            mp,
            vp,
            cp,
            row.blocked_frac
                .map_or_else(|| EMPTY.to_string(), |b| b.to_string()),
        ])?;
    }
    w.flush()?;
    Ok(())
}
