//! Scenario runner for the `rieffel` crate.
//!
//! A [`config::Config`] declares scenarios (carrier, grid, form, functionals,
//! probes and a check list). [`run`] executes them into a [`report::Report`]
//! whose rows are graded against per-check tolerances. Same config and seed
//! give the same report bytes.

pub mod checks;
pub mod config;
pub mod oracle;
pub mod probes;
pub mod report;

use std::collections::BTreeSet;
use std::time::Instant;

use rieffel::{deformed_mul, oscillatory_oracle, phi_nu, Functional, GridFunction, OracleParams};

use crate::config::{Config, MoyalJob, Scenario, Sweep, SweepKind};
use crate::report::{Report, Row, Status};

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    /// Run scenarios on separate threads. Row order is unaffected.
    pub parallel: bool,
}

/// Rows of one scenario, plus messages for checks that errored.
pub fn run_scenario(s: &Scenario) -> (Vec<Row>, Vec<String>) {
    let mut rows = Vec::new();
    let mut notes = Vec::new();
    for &check in &s.checks {
        let start = Instant::now();
        let result = checks::run(check, s);
        let secs = start.elapsed().as_secs_f64();
        let base = format!("{}/{}", s.name, check.id());
        match result {
            Ok(lines) => {
                let share = secs / lines.len().max(1) as f64;
                for l in lines {
                    let id = match &l.detail {
                        Some(d) => format!("{base}.{d}"),
                        None => base.clone(),
                    };
                    let mut row = if l.info {
                        Row::info(id, &s.canonical, l.metric, l.tolerance)
                    } else {
                        Row::graded(id, &s.canonical, l.metric, l.tolerance)
                    };
                    row.seconds = share;
                    rows.push(row);
                }
            }
            Err(e) => {
                notes.push(format!("{base}: {e}"));
                let mut row = Row::graded(base, &s.canonical, f64::NAN, f64::NAN);
                row.status = Status::Fail;
                row.seconds = secs;
                rows.push(row);
            }
        }
    }
    (rows, notes)
}

/// Operations exercised by the scenarios, and those left out.
pub fn coverage(config: &Config) -> (BTreeSet<&'static str>, Vec<&'static str>) {
    let covered: BTreeSet<&'static str> = config
        .scenarios
        .iter()
        .flat_map(|s| s.checks.iter().flat_map(move |&c| checks::ops(c, s)))
        .collect();
    let missing = checks::OPS.iter().copied().filter(|op| !covered.contains(op)).collect();
    (covered, missing)
}

/// Runs every scenario and appends the coverage row.
pub fn run(config: &Config, opts: RunOptions) -> Report {
    let results: Vec<(Vec<Row>, Vec<String>)> = if opts.parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = config.scenarios.iter().map(|s| scope.spawn(move || run_scenario(s))).collect();
            handles.into_iter().map(|h| h.join().expect("scenario thread panicked")).collect()
        })
    } else {
        config.scenarios.iter().map(run_scenario).collect()
    };
    let mut report = Report::default();
    for (rows, notes) in results {
        report.rows.extend(rows);
        report.notes.extend(notes);
    }
    if !config.scenarios.is_empty() {
        let (_, missing) = coverage(config);
        let mut row = Row::info("coverage".into(), &config.canonical, missing.len() as f64, 0.0);
        if missing.is_empty() {
            row.status = Status::Ok;
        } else {
            report.notes.push(format!("coverage: not exercised: {}", missing.join(", ")));
        }
        report.rows.push(row);
    }
    report
}

#[derive(Clone, Debug)]
pub struct MoyalOutcome {
    pub product: GridFunction,
    /// Relative sup error against the direct quadrature, when requested.
    pub oracle_error: Option<f64>,
}

pub fn run_moyal(job: &MoyalJob) -> rieffel::Result<MoyalOutcome> {
    let (product, err) = if job.oracle {
        let (h, err) = checks::moyal_error(&job.j, job.grid, &job.f, &job.g)?;
        (h, Some(err))
    } else {
        let fs = rieffel::grid::sample_scalar(job.grid, |x| job.f.value(x))?;
        let gs = rieffel::grid::sample_scalar(job.grid, |x| job.g.value(x))?;
        (rieffel::moyal::moyal_product(&job.j, &fs, &gs)?, None)
    };
    Ok(MoyalOutcome { product, oracle_error: err })
}

/// `(parameter, relative error)` pairs, parameter halving at each step.
pub fn run_sweep(sweep: &Sweep) -> rieffel::Result<Vec<(f64, f64)>> {
    (0..=sweep.halvings)
        .map(|k| {
            let t = sweep.start / 2f64.powi(k as i32);
            let err = match &sweep.kind {
                SweepKind::Oracle { j, a, b } => {
                    let exact = deformed_mul(j, a, b)?;
                    oscillatory_oracle(j, a, b, OracleParams::resolved(t))?.max_abs_diff(&exact)? / exact.max_abs()
                }
                SweepKind::PhiWidth { a } => {
                    let nu = Functional::gaussian(a.carrier().dim(), t)?;
                    phi_nu(&nu, a)?.max_abs_diff(a)? / a.max_abs()
                }
            };
            Ok((t, err))
        })
        .collect()
}
