//! Verb implementations. Each renders its output to bytes so callers can
//! write, print or compare it.

use std::io;
use std::path::Path;

use qosprice::cost::{sample_ids, CostContext};
use qosprice::export::{write_mc_csv, write_summary_csv, write_trace_csv};
use qosprice::pricing::{certainty_report, price_packets};
use qosprice::{CostMethod, CostRecord, PacketTrace, PricingScheme};

use crate::analysis::{analytic_rows, render_rows};
use crate::error::{CliError, Result};
use crate::scenario_file::ScenarioFile;

/// Traces with more delivered packets than this are costed on a sample.
pub const DEFAULT_MC_LIMIT: usize = 100_000;

pub(crate) fn csv_error<E: std::error::Error + Send + Sync + 'static>(e: E) -> CliError {
    CliError::io("<buffer>", io::Error::other(e))
}

pub fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| CliError::io(path, e))
}

pub fn simulate_file(file: &ScenarioFile) -> Result<PacketTrace> {
    qosprice::simulate(&file.scenario).map_err(|e| CliError::Parse {
        line: None,
        message: e.to_string(),
    })
}

/// Marginal costs for every delivered packet, or for a seeded sample of
/// `sample` of them. Without an explicit sample size, traces above
/// [`DEFAULT_MC_LIMIT`] are sampled.
pub fn costs(trace: &PacketTrace, sample: Option<usize>) -> Vec<CostRecord> {
    let n = sample.unwrap_or(DEFAULT_MC_LIMIT);
    let ids = sample_ids(trace, n, trace.scenario().seed);
    CostContext::new(trace)
        .costs(&ids, CostMethod::SegmentReplay)
        .expect("sampled ids are delivered packets")
}

pub fn analyze(file: &ScenarioFile) -> Result<String> {
    Ok(render_rows(&analytic_rows(&file.scenario)?))
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SimulationOutput {
    pub trace_csv: Vec<u8>,
    pub summary_csv: Vec<u8>,
    pub saturated: bool,
}

pub fn render_simulation(
    file: &ScenarioFile,
    scenario_id: &str,
    sample: Option<usize>,
) -> Result<SimulationOutput> {
    let trace = simulate_file(file)?;
    let scheme = PricingScheme::MarginalCost {
        value_of_time: file.value_of_time,
    };
    let prices = price_packets(&costs(&trace, sample), scheme);
    let report = certainty_report(&trace, &prices);

    let mut trace_csv = Vec::new();
    write_trace_csv(&mut trace_csv, &trace).map_err(csv_error)?;
    let mut summary_csv = Vec::new();
    write_summary_csv(
        &mut summary_csv,
        scenario_id,
        file.scenario.discipline.name(),
        &report,
    )
    .map_err(csv_error)?;
    Ok(SimulationOutput {
        trace_csv,
        summary_csv,
        saturated: trace.saturated(),
    })
}

pub fn write_simulation(out_dir: &Path, output: &SimulationOutput) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|e| CliError::io(out_dir, e))?;
    write_file(&out_dir.join("trace.csv"), &output.trace_csv)?;
    write_file(&out_dir.join("summary.csv"), &output.summary_csv)
}

pub fn render_mc(file: &ScenarioFile, sample: Option<usize>) -> Result<(Vec<u8>, bool)> {
    let trace = simulate_file(file)?;
    let mut out = Vec::new();
    write_mc_csv(&mut out, &costs(&trace, sample)).map_err(csv_error)?;
    Ok((out, trace.saturated()))
}

pub const SATURATION_WARNING: &str =
    "warning: offered load reaches server capacity; results describe a finite-horizon transient";
