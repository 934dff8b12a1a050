//! Executes scenarios and writes their artifacts.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use wavebreak_core::ode::{
    classify_grid, integrate_equality, integrate_inequality, IntegrationOptions, Outcome,
    SlackPair, Trajectory,
};
use wavebreak_core::threshold::{
    classify, eval_g, first_integral_level, separatrix_y, PhasePoint, ThresholdVerdict,
};
use wavebreak_core::whitham::{run, validate_bound, BreakingReport, KernelSpec, ProfileSpec, RunOptions};
use wavebreak_core::Error as CoreError;

use crate::error::{CliError, CliResult};
use crate::figures;
use crate::output::{fmt_f64, fmt_opt, write_atomic, Table};
use crate::report;
use crate::scenario::{
    ClassifySpec, OdeRunSpec, OdeSweepSpec, PdeRunSpec, PdeSweepSpec, Scenario, SeparatrixSpec,
};

/// Global settings from the command line.
#[derive(Debug, Clone, Default)]
pub struct Context {
    pub out: PathBuf,
    pub seed: Option<u64>,
    pub tol: Option<f64>,
}

/// What a scenario produced.
#[derive(Debug, Clone)]
pub struct Summary {
    pub line: String,
    pub files: Vec<PathBuf>,
}

pub const BREAKING_HEADER: [&str; 10] = [
    "m1_0",
    "m2_0",
    "G",
    "in_omega",
    "seliger_holds",
    "time_bound",
    "t_break_observed",
    "bound_satisfied",
    "t_final",
    "status",
];

pub fn run_scenario(scenario: &Scenario, ctx: &Context) -> CliResult<Summary> {
    let mut scenario = scenario.clone();
    apply_overrides(&mut scenario, ctx);
    scenario.validate()?;
    let out = ctx.out.as_path();
    match &scenario {
        Scenario::Classify(s) => run_classify(s, out),
        Scenario::Separatrix(s) => run_separatrix(s, out),
        Scenario::Portrait(s) => figures::emit(s, out),
        Scenario::OdeRun(s) => run_ode(s, out),
        Scenario::OdeSweep(s) => run_ode_sweep(s, out),
        Scenario::PdeRun(s) => run_pde(s, out),
        Scenario::PdeSweep(s) => run_pde_sweep(s, out),
        Scenario::Report(s) => report::run_report(s, out),
    }
}

fn apply_overrides(scenario: &mut Scenario, ctx: &Context) {
    if let Some(tol) = ctx.tol {
        match scenario {
            Scenario::Portrait(s) => s.tolerance.override_with(tol),
            Scenario::OdeRun(s) => s.tolerance.override_with(tol),
            Scenario::OdeSweep(s) => s.tolerance.override_with(tol),
            _ => {}
        }
    }
    if let Some(seed) = ctx.seed {
        match scenario {
            Scenario::OdeRun(s) => s.seed = Some(seed),
            Scenario::Report(s) => s.seed = Some(seed),
            _ => {}
        }
    }
}

fn bool_str(b: bool) -> String {
    b.to_string()
}

fn verdict_cells(v: &ThresholdVerdict) -> [String; 4] {
    [
        fmt_f64(v.g_value),
        bool_str(v.in_omega),
        bool_str(v.seliger_holds),
        fmt_f64(v.time_bound),
    ]
}

fn run_classify(s: &ClassifySpec, out: &Path) -> CliResult<Summary> {
    let mut table = Table::new(&["m1", "m2", "G", "in_omega", "seliger_holds", "time_bound"]);
    let (mut omega, mut seliger, mut witnesses) = (0, 0, 0);
    for &[m1, m2] in &s.points {
        let v = classify(PhasePoint::new(m1, m2))?;
        omega += usize::from(v.in_omega);
        seliger += usize::from(v.seliger_holds);
        witnesses += usize::from(v.in_omega && !v.seliger_holds);
        let mut row = vec![fmt_f64(m1), fmt_f64(m2)];
        row.extend(verdict_cells(&v));
        table.push(row);
    }
    let path = write_atomic(out, "classify.csv", &table.to_bytes())?;
    Ok(Summary {
        line: format!(
            "classify: {} points, {omega} in Omega, {seliger} satisfy Seliger, {witnesses} strict-extension witnesses",
            s.points.len()
        ),
        files: vec![path],
    })
}

/// `n` abscissae from `lo` to `hi` inclusive, with `extra` spliced in.
pub fn abscissae(lo: f64, hi: f64, n: usize, extra: &[f64]) -> Vec<f64> {
    let mut xs: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + (hi - lo) * i as f64 / (n - 1) as f64 })
        .collect();
    xs.extend(extra.iter().copied().filter(|x| *x > lo && *x < hi));
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

pub fn separatrix_table(xs: &[f64]) -> CliResult<Table> {
    let mut table = Table::new(&["x", "y", "G_residual"]);
    for &x in xs {
        let y = separatrix_y(x)?;
        let r = eval_g(PhasePoint::new(x, y))?;
        table.push(vec![fmt_f64(x), fmt_f64(y), fmt_f64(r)]);
    }
    Ok(table)
}

fn run_separatrix(s: &SeparatrixSpec, out: &Path) -> CliResult<Summary> {
    let xs = abscissae(s.x_min, s.x_max, s.points, &[-2.0]);
    let table = separatrix_table(&xs)?;
    let worst = table
        .rows
        .iter()
        .map(|r| r[2].parse::<f64>().unwrap_or(f64::NAN).abs())
        .fold(0.0, f64::max);
    let path = write_atomic(out, "separatrix.csv", &table.to_bytes())?;
    Ok(Summary {
        line: format!("separatrix: {} points, max |G| = {worst:.3e}", table.len()),
        files: vec![path],
    })
}

fn trajectory_table(traj: &Trajectory) -> Table {
    let mut table = Table::new(&["t", "m1", "m2", "G", "K"]);
    for (t, p) in traj.times.iter().zip(&traj.points) {
        table.push(vec![
            fmt_f64(*t),
            fmt_f64(p.m1),
            fmt_f64(p.m2),
            fmt_opt(eval_g(*p).ok()),
            fmt_opt(first_integral_level(*p).ok()),
        ]);
    }
    table
}

fn outcome_text(o: &Outcome) -> String {
    match o {
        Outcome::BlowUp { t_est } => format!("blow-up at t = {}", fmt_f64(*t_est)),
        Outcome::DomainExit { t } => format!("domain exit at t = {}", fmt_f64(*t)),
        other => other.label().to_string(),
    }
}

fn run_ode(s: &OdeRunSpec, out: &Path) -> CliResult<Summary> {
    let p0 = PhasePoint::new(s.start[0], s.start[1]);
    let mut opts = s.tolerance.options();
    opts.output_interval = s.output_interval;
    let slack = match (&s.slack, s.random_slack) {
        (Some(pair), _) => Some(pair.clone()),
        (None, Some(r)) => Some(SlackPair::random_piecewise(
            s.seed.expect("validated"),
            r.interval,
            r.count,
            r.max,
        )),
        (None, None) => None,
    };
    let result = match &slack {
        Some(pair) => integrate_inequality(p0, pair, &opts),
        None => integrate_equality(p0, &opts),
    };
    let traj = match result {
        Ok(t) => t,
        Err(CoreError::Integration { t, reason, partial }) => {
            write_atomic(out, "trajectory.csv", &trajectory_table(&partial).to_bytes())?;
            return Err(CliError::Numerical(format!(
                "integration stopped at t = {t}: {reason} (partial trajectory written)"
            )));
        }
        Err(e) => return Err(e.into()),
    };
    let path = write_atomic(out, "trajectory.csv", &trajectory_table(&traj).to_bytes())?;
    let v = classify(p0)?;
    Ok(Summary {
        line: format!(
            "ode-run: ({}, {}) G = {}, {}, {} samples{}",
            s.start[0],
            s.start[1],
            fmt_f64(v.g_value),
            outcome_text(&traj.outcome),
            traj.len(),
            if v.in_omega { format!(", bound {}", fmt_f64(v.time_bound)) } else { String::new() }
        ),
        files: vec![path],
    })
}

pub fn outcome_event_time(o: &Outcome) -> Option<f64> {
    match *o {
        Outcome::BlowUp { t_est } => Some(t_est),
        Outcome::DomainExit { t } => Some(t),
        _ => None,
    }
}

fn run_ode_sweep(s: &OdeSweepSpec, out: &Path) -> CliResult<Summary> {
    let opts: IntegrationOptions = s.tolerance.options();
    let map = classify_grid(
        (s.x_range[0], s.x_range[1]),
        (s.y_range[0], s.y_range[1]),
        s.nx,
        s.ny,
        &opts,
    )?;
    let mut table = Table::new(&["m1", "m2", "G", "outcome", "t_event", "agrees"]);
    for c in &map.cells {
        let (label, t) = match &c.outcome {
            Ok(o) => (o.label().to_string(), outcome_event_time(o)),
            Err(_) => ("failed".to_string(), None),
        };
        table.push(vec![
            fmt_f64(c.point.m1),
            fmt_f64(c.point.m2),
            fmt_f64(c.g),
            label,
            fmt_opt(t),
            c.agrees.map(bool_str).unwrap_or_default(),
        ]);
    }
    let path = write_atomic(out, "classification.csv", &table.to_bytes())?;
    let st = map.stats;
    let verdict = if st.agreement() >= 0.99 { ">=" } else { "<" };
    Ok(Summary {
        line: format!(
            "ode-sweep: {} cells, agreement {:.2}% ({}/{}) {verdict} 99% outside band, {} in band, {} failures",
            st.total,
            100.0 * st.agreement(),
            st.agreeing,
            st.scored,
            st.in_band,
            st.failures
        ),
        files: vec![path],
    })
}

pub fn breaking_row(report: &BreakingReport, status: &str) -> Vec<String> {
    let mut row = vec![fmt_f64(report.m1_0), fmt_f64(report.m2_0)];
    row.extend(verdict_cells(&report.verdict));
    row.push(fmt_opt(report.t_break_observed));
    row.push(report.bound_satisfied.map(bool_str).unwrap_or_default());
    row.push(fmt_f64(report.t_final));
    row.push(status.to_string());
    row
}

fn pde_one(profile: &ProfileSpec, kernel: KernelSpec, opts: &RunOptions) -> CliResult<(BreakingReport, Table)> {
    let result = run(profile, kernel, opts)?;
    let mut series = Table::new(&[
        "t",
        "m1",
        "m2",
        "u_min",
        "u_max",
        "tail_fraction",
        "argmin",
        "argmax",
    ]);
    for s in &result.series {
        series.push(vec![
            fmt_f64(s.t),
            fmt_f64(s.m1),
            fmt_f64(s.m2),
            fmt_f64(s.u_min),
            fmt_f64(s.u_max),
            fmt_f64(s.tail_fraction),
            s.argmin.to_string(),
            s.argmax.to_string(),
        ]);
    }
    Ok((result.report, series))
}

fn breaking_status(report: &BreakingReport) -> String {
    match (report.t_break_observed, report.verdict.in_omega) {
        (None, _) => "no-breaking".into(),
        (Some(_), true) => match validate_bound(report) {
            Ok(true) => "bound-ok".into(),
            Ok(false) => "BOUND-VIOLATED".into(),
            Err(_) => "breaking".into(),
        },
        (Some(_), false) => "breaking".into(),
    }
}

fn run_pde(s: &PdeRunSpec, out: &Path) -> CliResult<Summary> {
    let kernel = s.kernel.expect("validated");
    let profile = s.initial_profile()?;
    let (report, series) = pde_one(&profile, kernel, &s.run)?;
    let series_path = write_atomic(out, "series.csv", &series.to_bytes())?;
    let status = breaking_status(&report);
    let mut table = Table::new(&BREAKING_HEADER);
    table.push(breaking_row(&report, &status));
    let report_path = write_atomic(out, "breaking_report.csv", &table.to_bytes())?;
    let outcome = match report.t_break_observed {
        Some(t) => format!("breaking at t = {}", fmt_f64(t)),
        None => format!("no breaking by t = {}", fmt_f64(report.t_final)),
    };
    Ok(Summary {
        line: format!(
            "pde-run: extrema ({:.6}, {:.6}) G = {:.6}, {outcome}, bound {}, {status}",
            report.m1_0,
            report.m2_0,
            report.verdict.g_value,
            fmt_f64(report.verdict.time_bound)
        ),
        files: vec![series_path, report_path],
    })
}

fn run_pde_sweep(s: &PdeSweepSpec, out: &Path) -> CliResult<Summary> {
    let kernel = s.kernel.expect("validated");
    let rows: Vec<CliResult<Vec<String>>> = s
        .extrema
        .par_iter()
        .map(|&[m1, m2]| {
            let profile = ProfileSpec::for_extrema(m1, m2, s.run.period)?;
            match pde_one(&profile, kernel, &s.run) {
                Ok((report, _)) => Ok(breaking_row(&report, &breaking_status(&report))),
                Err(CliError::Numerical(msg)) => {
                    let v = classify(PhasePoint::new(m1, m2))?;
                    let mut row = vec![fmt_f64(m1), fmt_f64(m2)];
                    row.extend(verdict_cells(&v));
                    row.extend([String::new(), String::new(), String::new()]);
                    row.push(format!("failed: {msg}"));
                    Ok(row)
                }
                Err(e) => Err(e),
            }
        })
        .collect();
    let mut table = Table::new(&BREAKING_HEADER);
    for row in rows {
        table.push(row?);
    }
    let count = |status: &str| table.rows.iter().filter(|r| r[9].starts_with(status)).count();
    let line = format!(
        "pde-sweep: {} runs, {} within bound, {} violate it, {} without breaking, {} failed",
        table.len(),
        count("bound-ok"),
        count("BOUND-VIOLATED"),
        count("no-breaking"),
        count("failed")
    );
    let path = write_atomic(out, "pde_sweep.csv", &table.to_bytes())?;
    Ok(Summary {
        line,
        files: vec![path],
    })
}
