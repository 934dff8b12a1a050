use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, CliResult};
use crate::scenario::{load_scenario, ClassifySpec, ReportSpec, Scenario};

#[derive(Debug, Parser)]
#[command(name = "wavebreak", version, about = "Wave-breaking thresholds for Whitham-type equations")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// Scenario file (TOML); its `kind` must match the subcommand.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    pub out: PathBuf,
    /// Seed for randomized components; overrides the scenario's.
    #[arg(long, global = true, value_name = "U64")]
    pub seed: Option<u64>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,
    /// ODE relative tolerance; the absolute tolerance is 1/100 of it.
    #[arg(long, global = true, value_name = "FLOAT")]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify phase points against the breaking region and Seliger's condition.
    Classify {
        /// A point `M1,M2`; repeatable.
        #[arg(long = "point", value_name = "M1,M2", value_parser = parse_point, allow_hyphen_values = true)]
        points: Vec<[f64; 2]>,
    },
    /// Sample the separatrix G = 0.
    Separatrix,
    /// Emit phase-portrait and blow-up-region plot data.
    Portrait,
    /// Integrate one trajectory of the auxiliary system.
    OdeRun,
    /// Classify a grid of starts by integration.
    OdeSweep,
    /// Run the Whitham solver from one initial profile.
    PdeRun,
    /// Run the Whitham solver over several initial extrema.
    PdeSweep,
    /// Summarize earlier artifacts.
    Report {
        /// CSV artifacts to summarize.
        inputs: Vec<PathBuf>,
        /// Random points of the Seliger half-plane to test.
        #[arg(long, value_name = "N")]
        samples: Option<usize>,
    },
}

fn parse_point(s: &str) -> Result<[f64; 2], String> {
    let (a, b) = s
        .split_once(',')
        .ok_or_else(|| format!("`{s}` is not of the form M1,M2"))?;
    let parse = |v: &str| v.trim().parse::<f64>().map_err(|e| format!("`{v}`: {e}"));
    Ok([parse(a)?, parse(b)?])
}

impl Command {
    pub fn kind(&self) -> &'static str {
        match self {
            Command::Classify { .. } => "classify",
            Command::Separatrix => "separatrix",
            Command::Portrait => "portrait",
            Command::OdeRun => "ode-run",
            Command::OdeSweep => "ode-sweep",
            Command::PdeRun => "pde-run",
            Command::PdeSweep => "pde-sweep",
            Command::Report { .. } => "report",
        }
    }
}

impl Cli {
    /// The scenario to run: the config file if given, else the subcommand's
    /// defaults; subcommand arguments override either.
    pub fn scenario(&self) -> CliResult<Scenario> {
        let kind = self.command.kind();
        let mut scenario = match &self.global.config {
            Some(path) => {
                // Validated by the runner once overrides are applied.
                let s = load_scenario(path)?;
                if s.kind() != kind {
                    return Err(CliError::Usage(format!(
                        "{} describes a `{}` scenario, not `{kind}`",
                        path.display(),
                        s.kind()
                    )));
                }
                s
            }
            None => Scenario::default_for(kind).expect("every subcommand has defaults"),
        };
        match (&self.command, &mut scenario) {
            (Command::Classify { points }, Scenario::Classify(spec)) if !points.is_empty() => {
                *spec = ClassifySpec { points: points.clone() };
            }
            (Command::Report { inputs, samples }, Scenario::Report(spec)) => {
                if !inputs.is_empty() {
                    *spec = ReportSpec {
                        inputs: inputs.clone(),
                        ..spec.clone()
                    };
                }
                if let Some(n) = samples {
                    spec.seliger_samples = *n;
                }
            }
            _ => {}
        }
        Ok(scenario)
    }
}
