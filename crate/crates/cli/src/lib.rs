//! Command-line front end: scenario files, sweeps and plot-ready output.

pub mod cli;
pub mod error;
pub mod figures;
pub mod output;
pub mod report;
pub mod runner;
pub mod scenario;

pub use error::{exit, CliError, CliResult};
pub use runner::{run_scenario, Context, Summary};
pub use scenario::{parse_scenario, parse_scenario_str, Scenario};
