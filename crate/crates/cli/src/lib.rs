//! Scenario runner for the sector-blocked second-harmonic-generation model.
//!
//! [`execute`] runs one scenario and writes its CSV tables plus a
//! `manifest.json` into the configured output directory.

pub mod config;
pub mod output;
pub mod scenarios;

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use thiserror::Error;

pub use config::{Cli, RunConfig, Scenario, ScenarioConfig};
use output::Table;
use scenarios::{CutoffInfo, Run};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(shgcat_core::Error),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io { .. } => 1,
        }
    }
}

impl From<shgcat_core::Error> for CliError {
    fn from(e: shgcat_core::Error) -> Self {
        use shgcat_core::Error as E;
        match e {
            E::NoConvergence { .. } | E::DegenerateGap { .. } | E::NotSymmetric(_) => CliError::Numerical(e),
            other => CliError::Config(other.to_string()),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub scenario: &'static str,
    pub version: &'static str,
    pub config: RunConfig,
    pub threads: usize,
    pub wall_time_seconds: f64,
    pub cutoffs: Option<CutoffInfo>,
    pub files: Vec<String>,
    pub results: serde_json::Value,
}

/// Tables and manifest of a finished run, before anything is written.
#[derive(Clone, Debug)]
pub struct RunOutput {
    pub manifest: Manifest,
    pub tables: Vec<Table>,
}

fn package<T: Serialize>(run: Run<T>) -> Result<(serde_json::Value, Vec<Table>, Option<CutoffInfo>), CliError> {
    let value = serde_json::to_value(&run.result).map_err(|e| CliError::Config(e.to_string()))?;
    Ok((value, run.tables, run.cutoffs))
}

fn dispatch(cfg: &RunConfig) -> Result<(serde_json::Value, Vec<Table>, Option<CutoffInfo>), CliError> {
    match cfg.scenario {
        Scenario::Resonant => package(scenarios::resonant(cfg)?),
        Scenario::DetuningSweep => package(scenarios::detuning_sweep(cfg)?),
        Scenario::DispersiveCat => package(scenarios::dispersive_cat(cfg)?),
        Scenario::FidelityScan => package(scenarios::fidelity_scan(cfg)?),
        Scenario::VarianceScan => package(scenarios::variance_scan(cfg)?),
        Scenario::SpectrumCheck => package(scenarios::spectrum_check(cfg)?),
    }
}

/// Runs a scenario in memory, on one thread when `cfg.serial` is set.
pub fn run(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let start = Instant::now();
    let (results, tables, cutoffs, threads) = if cfg.serial {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .map_err(|e| CliError::Config(e.to_string()))?;
        let (r, t, c) = pool.install(|| dispatch(cfg))?;
        (r, t, c, 1)
    } else {
        let (r, t, c) = dispatch(cfg)?;
        (r, t, c, rayon::current_num_threads())
    };
    let manifest = Manifest {
        scenario: cfg.scenario.name(),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        threads,
        wall_time_seconds: start.elapsed().as_secs_f64(),
        cutoffs,
        files: tables.iter().map(|t| t.name.clone()).collect(),
        results,
    };
    Ok(RunOutput { manifest, tables })
}

/// Runs a scenario and writes its tables and `manifest.json` to `cfg.out`.
pub fn execute(cfg: &RunConfig) -> Result<RunOutput, CliError> {
    let output = run(cfg)?;
    output::write_tables(&cfg.out, &output.tables)?;
    output::write_json(&cfg.out.join("manifest.json"), &output.manifest)?;
    Ok(output)
}

/// Loads the optional config file, applies flags and runs.
pub fn run_cli(cli: &Cli) -> Result<RunOutput, CliError> {
    let base = match &cli.config {
        Some(path) => ScenarioConfig::from_file(path)?,
        None => ScenarioConfig::default(),
    };
    let cfg = base.merge_cli(cli).resolve()?;
    execute(&cfg)
}
