use std::process::ExitCode;

use clap::Parser;
use wavebreak_cli::cli::Cli;
use wavebreak_cli::{exit, run_scenario, CliError, CliResult, Context};

fn configure_threads(threads: Option<usize>) -> CliResult<()> {
    let Some(n) = threads else { return Ok(()) };
    if n == 0 {
        return Err(CliError::Usage("--threads must be at least 1".into()));
    }
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Usage(format!("--threads: {e}")))
}

fn execute(cli: &Cli) -> CliResult<()> {
    if let Some(tol) = cli.global.tol {
        if !(tol > 0.0) || !tol.is_finite() {
            return Err(CliError::Usage(format!("--tol {tol} must be positive")));
        }
    }
    configure_threads(cli.global.threads)?;
    let scenario = cli.scenario()?;
    let ctx = Context {
        out: cli.global.out.clone(),
        seed: cli.global.seed,
        tol: cli.global.tol,
    };
    let summary = run_scenario(&scenario, &ctx)?;
    println!("{}", summary.line);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(&cli) {
        Ok(()) => ExitCode::from(exit::OK),
        Err(e) => {
            eprintln!("wavebreak: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
