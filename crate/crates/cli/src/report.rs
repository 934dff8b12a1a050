//! Summary over earlier CSV artifacts.
//!
//! Any input with `m1,m2` or `m1_0,m2_0` columns contributes its rows to the
//! classification counts; rows with a `t_break_observed` value also enter
//! the bound table. Verdicts are recomputed rather than trusted.

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use wavebreak_core::threshold::{classify, PhasePoint};
use wavebreak_core::whitham::BOUND_TOLERANCE;

use crate::error::{CliError, CliResult};
use crate::output::{fmt_f64, write_atomic, Table};
use crate::runner::Summary;
use crate::scenario::ReportSpec;

/// One phase point read from an artifact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Entry {
    pub point: PhasePoint,
    pub t_break: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Counts {
    pub omega_and_seliger: usize,
    pub omega_only: usize,
    pub seliger_only: usize,
    pub neither: usize,
}

fn config(path: &Path, line: Option<u64>, msg: impl std::fmt::Display) -> CliError {
    match line {
        Some(l) => CliError::Config(format!("{}:{l}: {msg}", path.display())),
        None => CliError::Config(format!("{}: {msg}", path.display())),
    }
}

pub fn read_entries(path: &Path) -> CliResult<Vec<Entry>> {
    if !path.is_file() {
        return Err(config(path, None, "artifact not found"));
    }
    let mut reader = csv::Reader::from_path(path).map_err(|e| config(path, None, e))?;
    let headers = reader.headers().map_err(|e| config(path, None, e))?.clone();
    let col = |names: &[&str]| names.iter().find_map(|n| headers.iter().position(|h| h == *n));
    let (Some(i1), Some(i2)) = (col(&["m1", "m1_0"]), col(&["m2", "m2_0"])) else {
        return Err(config(path, Some(1), "no m1/m2 or m1_0/m2_0 columns"));
    };
    let it = col(&["t_break_observed"]);
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| config(path, None, e))?;
        let line = record.position().map(|p| p.line());
        let num = |i: usize| -> CliResult<f64> {
            let s = record.get(i).unwrap_or("");
            s.parse::<f64>()
                .map_err(|_| config(path, line, format!("`{s}` is not a number in column {}", &headers[i])))
        };
        let t_break = match it.map(|i| record.get(i).unwrap_or("")) {
            Some("") | None => None,
            Some(_) => Some(num(it.unwrap())?),
        };
        out.push(Entry {
            point: PhasePoint::new(num(i1)?, num(i2)?),
            t_break,
        });
    }
    Ok(out)
}

fn seliger_samples(count: usize, seed: u64) -> CliResult<(Vec<(PhasePoint, f64)>, f64)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counterexamples = Vec::new();
    let mut worst = f64::NEG_INFINITY;
    let mut drawn = 0;
    while drawn < count {
        let p = PhasePoint::new(rng.gen_range(-20.0..0.0), rng.gen_range(0.0..18.0));
        if p.sum() > -2.0 {
            continue;
        }
        let v = classify(p)?;
        worst = worst.max(v.g_value);
        if !v.in_omega {
            counterexamples.push((p, v.g_value));
        }
        drawn += 1;
    }
    Ok((counterexamples, worst))
}

fn section(doc: &mut String, title: &str, table: &Table) {
    doc.push_str(&format!("# {title}\n"));
    doc.push_str(std::str::from_utf8(&table.to_bytes()).expect("utf-8 table"));
    doc.push('\n');
}

/// Builds the report text from entries; sampling is skipped when `samples` is 0.
pub fn build(entries: &[Entry], inputs: &[PathBuf], samples: usize, seed: Option<u64>) -> CliResult<(String, Counts, usize)> {
    let mut counts = Counts::default();
    let mut bounds = Table::new(&["m1_0", "m2_0", "G", "time_bound", "t_break_observed", "bound_satisfied"]);
    let mut witnesses = Table::new(&["m1", "m2", "G"]);
    for e in entries {
        let v = classify(e.point)?;
        match (v.in_omega, v.seliger_holds) {
            (true, true) => counts.omega_and_seliger += 1,
            (true, false) => counts.omega_only += 1,
            (false, true) => counts.seliger_only += 1,
            (false, false) => counts.neither += 1,
        }
        if v.in_omega && !v.seliger_holds {
            witnesses.push(vec![fmt_f64(e.point.m1), fmt_f64(e.point.m2), fmt_f64(v.g_value)]);
        }
        if let Some(t) = e.t_break {
            let satisfied = if v.in_omega {
                (t <= v.time_bound * (1.0 + BOUND_TOLERANCE)).to_string()
            } else {
                String::new()
            };
            bounds.push(vec![
                fmt_f64(e.point.m1),
                fmt_f64(e.point.m2),
                fmt_f64(v.g_value),
                fmt_f64(v.time_bound),
                fmt_f64(t),
                satisfied,
            ]);
        }
    }

    let mut doc = String::from("# wavebreak report\n");
    for p in inputs {
        doc.push_str(&format!("# input: {}\n", p.display()));
    }
    doc.push('\n');
    let mut count_table = Table::new(&["class", "count"]);
    for (name, n) in [
        ("omega_and_seliger", counts.omega_and_seliger),
        ("omega_only", counts.omega_only),
        ("seliger_only", counts.seliger_only),
        ("neither", counts.neither),
    ] {
        count_table.push(vec![name.into(), n.to_string()]);
    }
    section(&mut doc, "classification counts", &count_table);
    section(&mut doc, "breaking-time bounds", &bounds);
    section(&mut doc, "strict-extension witnesses (in Omega, Seliger fails)", &witnesses);

    let mut violations = 0;
    if samples > 0 {
        let seed = seed.expect("validated");
        let (counter, worst) = seliger_samples(samples, seed)?;
        violations = counter.len();
        let mut summary = Table::new(&["samples", "seed", "max_G", "counterexamples"]);
        summary.push(vec![samples.to_string(), seed.to_string(), fmt_f64(worst), violations.to_string()]);
        section(&mut doc, "Seliger implies Omega, random sampling", &summary);
        let mut rows = Table::new(&["m1", "m2", "G"]);
        for (p, g) in counter {
            rows.push(vec![fmt_f64(p.m1), fmt_f64(p.m2), fmt_f64(g)]);
        }
        section(&mut doc, "counterexamples", &rows);
    }
    Ok((doc, counts, violations))
}

pub fn run_report(s: &ReportSpec, out: &Path) -> CliResult<Summary> {
    let mut entries = Vec::new();
    for p in &s.inputs {
        entries.extend(read_entries(p)?);
    }
    let (doc, counts, violations) = build(&entries, &s.inputs, s.seliger_samples, s.seed)?;
    let path = write_atomic(out, "report.txt", doc.as_bytes())?;
    Ok(Summary {
        line: format!(
            "report: {} rows from {} inputs, {} in Omega ({} strict-extension witnesses), {} Seliger-only, {violations} sampling counterexamples",
            entries.len(),
            s.inputs.len(),
            counts.omega_and_seliger + counts.omega_only,
            counts.omega_only,
            counts.seliger_only
        ),
        files: vec![path],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn witness_is_listed() {
        let entries = [Entry {
            point: PhasePoint::new(-5.0, 3.5),
            t_break: Some(0.22),
        }];
        let (doc, counts, _) = build(&entries, &[], 0, None).unwrap();
        assert_eq!(counts.omega_only, 1);
        assert!(doc.contains("-5.0000000000000000e0,3.5000000000000000e0,-5.0527114601671599e0"), "{doc}");
        assert!(doc.contains(",true\n"));
    }

    #[test]
    fn sampling_finds_no_counterexample() {
        let (doc, counts, violations) = build(&[], &[], 5000, Some(1)).unwrap();
        assert_eq!(counts, Counts::default());
        assert_eq!(violations, 0);
        assert!(doc.contains("# counterexamples\nm1,m2,G\n\n"), "{doc}");
    }
}
