//! Scenario configuration: JSON file contents merged with command-line flags,
//! then validated and filled with per-scenario defaults.

use std::f64::consts::PI;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};
use shgcat_core::evolution::Convention;
use shgcat_core::fock::{HarmonicOrder, DEFAULT_EPSILON};
use shgcat_core::hamiltonian::EffectiveForm;
use shgcat_core::observables::GridSpec;
use shgcat_core::C64;

use crate::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    /// Q snapshots on resonance
    Resonant,
    /// Cat quality at fixed τ across detunings
    DetuningSweep,
    /// Exact and effective evolution to λt = π/2
    DispersiveCat,
    /// Cat fidelity against gt
    FidelityScan,
    /// Short-time quadrature variance
    VarianceScan,
    /// Exact against perturbative sector spectra
    SpectrumCheck,
}

impl Scenario {
    pub fn name(self) -> &'static str {
        match self {
            Scenario::Resonant => "resonant",
            Scenario::DetuningSweep => "detuning-sweep",
            Scenario::DispersiveCat => "dispersive-cat",
            Scenario::FidelityScan => "fidelity-scan",
            Scenario::VarianceScan => "variance-scan",
            Scenario::SpectrumCheck => "spectrum-check",
        }
    }
}

/// Grid bounds as written on the command line (`MIN:MAX:N`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    pub min: f64,
    pub max: f64,
    pub points: usize,
}

impl Default for GridConfig {
    fn default() -> Self {
        let g = GridSpec::default();
        Self {
            min: g.min,
            max: g.max,
            points: g.points,
        }
    }
}

impl FromStr for GridConfig {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<&str> = s.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("expected MIN:MAX:N, got `{s}`"));
        }
        let num = |p: &str| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}"));
        let points = parts[2]
            .trim()
            .parse::<usize>()
            .map_err(|e| format!("`{}`: {e}", parts[2]))?;
        Ok(Self {
            min: num(parts[0])?,
            max: num(parts[1])?,
            points,
        })
    }
}

fn parse_pair(s: &str) -> Result<[f64; 2], String> {
    let mut it = s.split(',').map(|p| p.trim().parse::<f64>());
    match (it.next(), it.next(), it.next()) {
        (Some(Ok(re)), None, None) => Ok([re, 0.0]),
        (Some(Ok(re)), Some(Ok(im)), None) => Ok([re, im]),
        _ => Err(format!("expected RE or RE,IM, got `{s}`")),
    }
}

/// Command-line surface.
#[derive(Debug, Parser)]
#[command(name = "shgcat", version, about = "Second-harmonic-generation cat state scenarios")]
pub struct Cli {
    /// Scenario to run (may instead come from the config file)
    #[arg(value_enum)]
    pub scenario: Option<Scenario>,
    /// JSON file mirroring the scenario configuration
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Mean photon number of the fundamental coherent state
    #[arg(long)]
    pub nbar: Option<f64>,
    /// Harmonic-mode coherent amplitude
    #[arg(long, value_name = "RE,IM", value_parser = parse_pair, allow_hyphen_values = true)]
    pub beta: Option<[f64; 2]>,
    /// Detuning Δ/g
    #[arg(long, allow_hyphen_values = true)]
    pub detuning: Option<f64>,
    /// Times as τ = gt·√(2 n̄_a)
    #[arg(long, value_name = "LIST", value_delimiter = ',', conflicts_with_all = ["gt", "lambda_t"])]
    pub tau: Option<Vec<f64>>,
    /// Times as gt
    #[arg(long, value_name = "LIST", value_delimiter = ',', conflicts_with = "lambda_t")]
    pub gt: Option<Vec<f64>>,
    /// Times as λt = gt·g/Δ
    #[arg(long = "lambda-t", value_name = "LIST", value_delimiter = ',')]
    pub lambda_t: Option<Vec<f64>>,
    /// Q grid as MIN:MAX:N over both quadratures
    #[arg(long, value_name = "MIN:MAX:N", allow_hyphen_values = true)]
    pub grid: Option<GridConfig>,
    /// Harmonic order k (2 or 3)
    #[arg(long)]
    pub order: Option<u32>,
    /// Effective Hamiltonian (eq12, pt, kerr, eq21, eq21-detuned)
    #[arg(long)]
    pub form: Option<String>,
    /// Kerr phase convention used for cat targets (+1 or -1)
    #[arg(long, allow_hyphen_values = true)]
    pub convention: Option<String>,
    /// Truncation budget for discarded probability
    #[arg(long)]
    pub epsilon: Option<f64>,
    /// Output directory
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Run on a single thread
    #[arg(long)]
    pub serial: bool,
    /// Detuning list for detuning-sweep and spectrum-check
    #[arg(long, value_name = "LIST", value_delimiter = ',', allow_hyphen_values = true)]
    pub detunings: Option<Vec<f64>>,
    /// Sample count for fidelity-scan and variance-scan
    #[arg(long)]
    pub samples: Option<usize>,
    /// Largest sector checked by spectrum-check
    #[arg(long)]
    pub max_sector: Option<usize>,
}

/// Configuration as stored in JSON. Every field is optional; missing values
/// take scenario defaults.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Option<Scenario>,
    pub nbar_a: Option<f64>,
    pub alpha: Option<[f64; 2]>,
    pub beta: Option<[f64; 2]>,
    pub detuning_over_g: Option<f64>,
    pub order: Option<u32>,
    pub tau: Option<Vec<f64>>,
    pub gt: Option<Vec<f64>>,
    pub lambda_t: Option<Vec<f64>>,
    pub grid: Option<GridConfig>,
    pub epsilon_trunc: Option<f64>,
    pub form: Option<String>,
    pub convention: Option<String>,
    pub out: Option<PathBuf>,
    pub detunings: Option<Vec<f64>>,
    pub samples: Option<usize>,
    pub max_sector: Option<usize>,
    pub serial: Option<bool>,
}

impl ScenarioConfig {
    pub fn from_file(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    /// Applies command-line flags on top of `self`.
    pub fn merge_cli(mut self, cli: &Cli) -> Self {
        if cli.scenario.is_some() {
            self.scenario = cli.scenario;
        }
        if let Some(n) = cli.nbar {
            self.nbar_a = Some(n);
            self.alpha = None;
        }
        if cli.tau.is_some() || cli.gt.is_some() || cli.lambda_t.is_some() {
            self.tau = cli.tau.clone();
            self.gt = cli.gt.clone();
            self.lambda_t = cli.lambda_t.clone();
        }
        macro_rules! take {
            ($($field:ident <- $flag:ident),*) => {
                $(if cli.$flag.is_some() { self.$field = cli.$flag.clone(); })*
            };
        }
        take!(
            beta <- beta,
            detuning_over_g <- detuning,
            grid <- grid,
            order <- order,
            form <- form,
            convention <- convention,
            epsilon_trunc <- epsilon,
            out <- out,
            detunings <- detunings,
            samples <- samples,
            max_sector <- max_sector
        );
        if cli.serial {
            self.serial = Some(true);
        }
        self
    }

    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        RunConfig::from_config(self)
    }
}

/// How the user specified times.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeUnit {
    Tau,
    Gt,
    LambdaT,
}

/// Validated configuration with every default filled in.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunConfig {
    pub scenario: Scenario,
    pub alpha: [f64; 2],
    pub nbar_a: f64,
    pub beta: [f64; 2],
    pub detuning_over_g: f64,
    pub order: u32,
    pub time_unit: TimeUnit,
    pub times: Vec<f64>,
    pub grid: GridConfig,
    pub epsilon_trunc: f64,
    pub form: String,
    pub convention: Option<String>,
    pub out: PathBuf,
    pub detunings: Vec<f64>,
    pub samples: usize,
    pub max_sector: usize,
    pub serial: bool,
}

fn config_err(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl RunConfig {
    fn from_config(c: &ScenarioConfig) -> Result<Self, CliError> {
        let scenario = c
            .scenario
            .ok_or_else(|| config_err("no scenario given on the command line or in the config file"))?;
        let alpha = match (c.alpha, c.nbar_a) {
            (Some(_), Some(_)) => return Err(config_err("give either alpha or nbar_a, not both")),
            (Some(a), None) => a,
            (None, Some(n)) => {
                if !(n >= 0.0 && n.is_finite()) {
                    return Err(config_err(format!("nbar_a must be finite and non-negative, got {n}")));
                }
                [n.sqrt(), 0.0]
            }
            (None, None) => [10f64.sqrt(), 0.0],
        };
        let nbar_a = alpha[0] * alpha[0] + alpha[1] * alpha[1];
        let beta = c.beta.unwrap_or([0.0, 0.0]);
        if !alpha.iter().chain(beta.iter()).all(|x| x.is_finite()) {
            return Err(config_err("amplitudes must be finite"));
        }
        let order = c.order.unwrap_or(2);
        HarmonicOrder::new(order).map_err(|e| config_err(e.to_string()))?;
        let detuning_over_g = c.detuning_over_g.unwrap_or(match scenario {
            Scenario::Resonant | Scenario::DetuningSweep | Scenario::SpectrumCheck => 0.0,
            _ => 50.0,
        });
        if !detuning_over_g.is_finite() {
            return Err(config_err("detuning must be finite"));
        }

        let given: Vec<(TimeUnit, &Vec<f64>)> = [
            (TimeUnit::Tau, c.tau.as_ref()),
            (TimeUnit::Gt, c.gt.as_ref()),
            (TimeUnit::LambdaT, c.lambda_t.as_ref()),
        ]
        .into_iter()
        .filter_map(|(u, v)| v.map(|v| (u, v)))
        .collect();
        if given.len() > 1 {
            return Err(config_err("give exactly one of tau, gt, lambda_t"));
        }
        let (time_unit, times) = match given.first() {
            Some((u, v)) => (*u, (*v).clone()),
            None => default_times(scenario, detuning_over_g),
        };
        if times.is_empty() || times.iter().any(|t| !t.is_finite()) {
            return Err(config_err("time list must be non-empty and finite"));
        }
        if time_unit == TimeUnit::Tau && nbar_a == 0.0 {
            return Err(config_err("tau needs nbar_a > 0"));
        }
        let needs_detuning = matches!(scenario, Scenario::DispersiveCat | Scenario::FidelityScan | Scenario::VarianceScan);
        if (time_unit == TimeUnit::LambdaT || needs_detuning) && detuning_over_g == 0.0 {
            return Err(config_err(format!("{} needs a non-zero detuning", scenario.name())));
        }
        let single_time = matches!(
            scenario,
            Scenario::DetuningSweep | Scenario::DispersiveCat | Scenario::FidelityScan | Scenario::VarianceScan
        );
        if single_time && times.len() != 1 {
            return Err(config_err(format!("{} takes a single time value", scenario.name())));
        }

        let grid = c.grid.unwrap_or_default();
        if grid.points < 2 || !(grid.max > grid.min) || !grid.min.is_finite() || !grid.max.is_finite() {
            return Err(config_err("grid needs MIN < MAX and at least 2 points"));
        }
        let epsilon_trunc = c.epsilon_trunc.unwrap_or(DEFAULT_EPSILON);
        if !(epsilon_trunc > 0.0 && epsilon_trunc < 1.0) {
            return Err(config_err(format!("epsilon must lie in (0, 1), got {epsilon_trunc}")));
        }
        let default_form = match (scenario, order) {
            (_, 3) => "pt",
            (Scenario::VarianceScan, _) => "eq12",
            _ => "pt",
        };
        let form = c.form.clone().unwrap_or_else(|| default_form.to_string());
        let parsed: EffectiveForm = form.parse().map_err(|e: shgcat_core::Error| config_err(e.to_string()))?;
        if !parsed.supports(HarmonicOrder::new(order).expect("checked")) {
            return Err(config_err(format!("form {form} does not apply to order {order}")));
        }
        if parsed == EffectiveForm::KerrOnly && (beta[0] != 0.0 || beta[1] != 0.0) {
            return Err(config_err("form kerr needs the harmonic mode in vacuum"));
        }
        if let Some(conv) = &c.convention {
            conv.parse::<Convention>().map_err(|e| config_err(e.to_string()))?;
        }
        let detunings = c.detunings.clone().unwrap_or_else(|| match scenario {
            Scenario::SpectrumCheck => vec![50.0, 100.0, 200.0, 400.0, 800.0],
            _ => vec![0.0, 1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 200.0],
        });
        if detunings.is_empty() || detunings.iter().any(|d| !d.is_finite()) {
            return Err(config_err("detuning list must be non-empty and finite"));
        }
        if scenario == Scenario::SpectrumCheck && detunings.contains(&0.0) {
            return Err(config_err("spectrum-check needs non-zero detunings"));
        }
        if scenario == Scenario::DetuningSweep && time_unit == TimeUnit::LambdaT && detunings.contains(&0.0) {
            return Err(config_err("lambda-t times need non-zero detunings"));
        }
        if scenario == Scenario::VarianceScan && order != 2 {
            return Err(config_err("variance-scan applies to second-harmonic generation only"));
        }
        let samples = c.samples.unwrap_or(match scenario {
            Scenario::VarianceScan => 41,
            _ => 600,
        });
        if samples < 2 {
            return Err(config_err("samples must be at least 2"));
        }
        Ok(Self {
            scenario,
            alpha,
            nbar_a,
            beta,
            detuning_over_g,
            order,
            time_unit,
            times,
            grid,
            epsilon_trunc,
            form,
            convention: c.convention.clone(),
            out: c.out.clone().unwrap_or_else(|| PathBuf::from("out")),
            detunings,
            samples,
            max_sector: c.max_sector.unwrap_or(20),
            serial: c.serial.unwrap_or(false),
        })
    }

    pub fn alpha_c(&self) -> C64 {
        C64::new(self.alpha[0], self.alpha[1])
    }

    pub fn beta_c(&self) -> C64 {
        C64::new(self.beta[0], self.beta[1])
    }

    pub fn harmonic_order(&self) -> HarmonicOrder {
        HarmonicOrder::new(self.order).expect("validated")
    }

    pub fn effective_form(&self) -> EffectiveForm {
        self.form.parse().expect("validated")
    }

    pub fn fixed_convention(&self) -> Option<Convention> {
        self.convention.as_ref().map(|c| c.parse().expect("validated"))
    }

    pub fn grid_spec(&self) -> GridSpec {
        GridSpec {
            min: self.grid.min,
            max: self.grid.max,
            points: self.grid.points,
        }
    }

    /// Converts a time in the configured unit to `gt` at detuning `detuning`.
    pub fn to_gt(&self, t: f64, detuning: f64) -> f64 {
        match self.time_unit {
            TimeUnit::Gt => t,
            TimeUnit::Tau => t / (2.0 * self.nbar_a).sqrt(),
            TimeUnit::LambdaT => t * detuning,
        }
    }

    /// `τ = gt·√(2 n̄_a)`.
    pub fn tau_of(&self, gt: f64) -> f64 {
        gt * (2.0 * self.nbar_a).sqrt()
    }
}

fn default_times(scenario: Scenario, detuning: f64) -> (TimeUnit, Vec<f64>) {
    match scenario {
        Scenario::Resonant => (TimeUnit::Tau, (0..=6).map(f64::from).collect()),
        Scenario::DetuningSweep => (TimeUnit::Tau, vec![4.0]),
        Scenario::DispersiveCat => (TimeUnit::LambdaT, vec![0.5 * PI]),
        Scenario::FidelityScan => (TimeUnit::Gt, vec![1.2 * 0.5 * PI * detuning.abs()]),
        Scenario::VarianceScan => (TimeUnit::LambdaT, vec![0.02]),
        Scenario::SpectrumCheck => (TimeUnit::Gt, vec![0.0]),
    }
}
