//! Scenario-file front end for the qosprice simulator.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod commands;
pub mod error;
pub mod scenario_file;
pub mod sweep;
pub mod validation;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::commands::{write_file, SATURATION_WARNING};
pub use crate::error::{CliError, Result};
use crate::scenario_file::{parse_scenario, read_text, scenario_id, ScenarioFile};
use crate::validation::Scale;

#[derive(Debug, Parser)]
#[command(
    name = "qosprice",
    version,
    about = "Delay, price and certainty experiments on a shared link"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Print closed-form results for a scenario as CSV.
    Analyze {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate a scenario; write trace.csv and summary.csv.
    Simulate {
        scenario: PathBuf,
        /// Output directory.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Price a random sample of this many packets.
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Per-packet marginal costs as CSV.
    Mc {
        scenario: PathBuf,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Run a parameter sweep; long-format CSV.
    Sweep {
        sweep: PathBuf,
        /// Output file; standard output when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// First replication seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        sample: Option<usize>,
    },
    /// Run the built-in acceptance suite.
    Validate {
        /// Reduced subset.
        #[arg(long)]
        quick: bool,
    },
}

fn load(path: &Path, seed: Option<u64>) -> Result<ScenarioFile> {
    let mut file = parse_scenario(&read_text(path)?)?;
    if let Some(seed) = seed {
        file.scenario.seed = seed;
    }
    Ok(file)
}

fn emit(out: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match out {
        Some(path) => write_file(path, bytes),
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::io("<stdout>", e)),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { scenario, seed } => {
            let file = load(&scenario, seed)?;
            emit(None, commands::analyze(&file)?.as_bytes())
        }
        Command::Simulate {
            scenario,
            out,
            seed,
            sample,
        } => {
            let file = load(&scenario, seed)?;
            let output = commands::render_simulation(&file, &scenario_id(&scenario), sample)?;
            if output.saturated {
                eprintln!("{SATURATION_WARNING}");
            }
            commands::write_simulation(&out, &output)?;
            emit(None, &output.summary_csv)
        }
        Command::Mc {
            scenario,
            out,
            seed,
            sample,
        } => {
            let file = load(&scenario, seed)?;
            let (bytes, saturated) = commands::render_mc(&file, sample)?;
            if saturated {
                eprintln!("{SATURATION_WARNING}");
            }
            emit(out.as_deref(), &bytes)
        }
        Command::Sweep {
            sweep: path,
            out,
            seed,
            sample,
        } => {
            let spec = sweep::parse_sweep(&read_text(&path)?)?;
            let rows = spec.run(seed, sample)?;
            emit(
                out.as_deref(),
                sweep::render_sweep(&spec.key, &rows).as_bytes(),
            )
        }
        Command::Validate { quick } => {
            let scale = if quick { Scale::Quick } else { Scale::Standard };
            let checks = validation::run_suite(scale);
            for c in &checks {
                println!("{c}");
            }
            let failed = checks.iter().filter(|c| !c.passed).count();
            println!("{} checks, {failed} failed", checks.len());
            if failed > 0 {
                return Err(CliError::Validation(failed));
            }
            Ok(())
        }
    }
}
