//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria 1–11 are graded from the rows of the built-in scenario set, with
//! the wall time of the checks behind each criterion held against its limit.
//! Criterion 12 reruns the set in process (concurrently) and the CLI twice,
//! and compares report bytes.

use std::process::{Command, ExitCode};

use rieffel_harness::config::builtin;
use rieffel_harness::report::{Format, Report, Row, Status};
use rieffel_harness::{run, RunOptions};

struct Criterion {
    id: u32,
    label: &'static str,
    /// Rows graded by this criterion.
    rows: fn(&str) -> bool,
    /// Rows whose checks are timed against the limit.
    timed: fn(&str) -> bool,
    limit: f64,
}

fn check_of(row: &str) -> &str {
    row.split_once('/').map_or("", |(_, c)| c)
}

fn scenario_of(row: &str) -> &str {
    row.split_once('/').map_or("", |(s, _)| s)
}

const CRITERIA: [Criterion; 11] = [
    Criterion {
        id: 1,
        label: "pi_J(f) = pi(theta(f)) on 8 probes, N=16, theta=0.1",
        rows: |r| r == "theorem1-d2/theorem1",
        timed: |r| r.starts_with("theorem1-d2/theorem1"),
        limit: 10.0,
    },
    Criterion {
        id: 2,
        label: "theta(-J) o theta(J) = id",
        rows: |r| r == "theorem1-d2/theta-inverse",
        timed: |r| r == "theorem1-d2/theta-inverse",
        limit: 1.0,
    },
    Criterion {
        id: 3,
        label: "theta is multiplicative (commensurate mode)",
        rows: |r| r.starts_with("theorem1-d2/homomorphism"),
        timed: |r| r.starts_with("theorem1-d2/homomorphism"),
        limit: 30.0,
    },
    Criterion {
        id: 4,
        label: "oscillatory oracle within 1e-3 at eps=1e-3, decreasing over two halvings",
        rows: |r| r == "oracle-d2/oracle-convergence" || r == "oracle-d2/oracle-convergence.monotone",
        timed: |r| r.starts_with("oracle-d2/oracle-convergence"),
        limit: 60.0,
    },
    Criterion {
        id: 5,
        label: "theta intertwines the dual actions at 5 lattice points",
        rows: |r| r == "theorem1-d2/dual-intertwine",
        timed: |r| r.starts_with("theorem1-d2/dual-intertwine"),
        limit: 5.0,
    },
    Criterion {
        id: 6,
        label: "embed_spectral multiplicative on 100 homogeneous pairs",
        rows: |r| check_of(r) == "kasprzak-embed",
        timed: |r| scenario_of(r) == "kasprzak-d2" && check_of(r).starts_with("kasprzak-embed"),
        limit: 1.0,
    },
    Criterion {
        id: 7,
        label: "pi_J(phi_nu(a)) = symbol(z) embed_crossed(a), vacuum and vector",
        rows: |r| check_of(r).starts_with("proposition."),
        timed: |r| check_of(r).starts_with("proposition."),
        limit: 30.0,
    },
    Criterion {
        id: 8,
        label: "vacuum density transform, h in {0.5, 1, 2}",
        rows: |r| check_of(r).starts_with("vacuum."),
        timed: |r| check_of(r).starts_with("vacuum."),
        limit: 5.0,
    },
    Criterion {
        id: 9,
        label: "torus generators commute up to e(2 theta)",
        rows: |r| check_of(r).starts_with("nctorus."),
        timed: |r| check_of(r).starts_with("nctorus."),
        limit: 1.0,
    },
    Criterion {
        id: 10,
        label: "grid Moyal product vs direct quadrature, N=32",
        rows: |r| r == "moyal-d2/moyal",
        timed: |r| r.starts_with("moyal-d2/moyal"),
        limit: 120.0,
    },
    Criterion {
        id: 11,
        label: "Choi matrix positive and norm bound on 50 samples, M_2",
        rows: |r| check_of(r).starts_with("choi."),
        timed: |r| check_of(r).starts_with("choi."),
        limit: 30.0,
    },
];

/// A small config for the CLI determinism check.
const CLI_CONFIG: &str = r#"
[[scenario]]
name = "det-theorem1"
checks = ["theorem1", "theta-inverse", "kasprzak-embed"]
mode = "commensurate"
seed = 7
j = { theta = 0.1 }
grid = { d = 2, n = 16, l = 4.0 }
carrier = { kind = "matrix", h = [[0.0, 0.0], [0.25, -0.5]], lattice = 4.0 }

[[scenario]]
name = "det-vacuum"
checks = ["proposition", "choi"]
seed = 5
j = { vacuum = 1.0 }
grid = { d = 2, n = 32, l = 8.0 }
carrier = { kind = "matrix", h = [[0.0, 0.0], [0.3, -0.45]] }

[[scenario.functional]]
kind = "vacuum"
h = 1.0
"#;

fn grade(c: &Criterion, report: &Report) -> (bool, String) {
    let rows: Vec<&Row> = report.rows.iter().filter(|r| (c.rows)(&r.check)).collect();
    let seconds: f64 = report.rows.iter().filter(|r| (c.timed)(&r.check)).map(|r| r.seconds).sum();
    let graded: Vec<&&Row> = rows.iter().filter(|r| r.status != Status::Info).collect();
    let rows_ok = !graded.is_empty() && graded.iter().all(|r| r.status == Status::Ok);
    let worst = graded
        .iter()
        .map(|r| (r.metric / r.tolerance, r))
        .max_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, r)| format!("worst {} = {:.3e} (tol {:.0e})", r.check, r.metric, r.tolerance))
        .unwrap_or_else(|| "no rows".into());
    let ok = rows_ok && seconds < c.limit;
    (ok, format!("{worst}; {seconds:.2}s of {}s", c.limit))
}

fn cli_report(dir: &std::path::Path, config: &std::path::Path) -> Result<Vec<u8>, String> {
    let status = Command::new(env!("CARGO_BIN_EXE_rieffel"))
        .arg("verify")
        .arg(config)
        .arg("--format")
        .arg("csv")
        .env("RIEFFEL_OUT_DIR", dir)
        .output()
        .map_err(|e| e.to_string())?;
    if !status.status.success() {
        return Err(format!("exit {:?}: {}", status.status.code(), String::from_utf8_lossy(&status.stderr)));
    }
    let file = std::fs::read(dir.join("report.csv")).map_err(|e| e.to_string())?;
    if file != status.stdout {
        return Err("stdout and report.csv differ".into());
    }
    Ok(file)
}

fn determinism(first: &Report) -> (bool, String) {
    let again = run(&builtin(), RunOptions { parallel: true });
    let a = first.render(Format::Csv, false);
    let b = again.render(Format::Csv, false);
    if a != b {
        return (false, "in-process rerun differs".into());
    }
    let tmp = tempfile::tempdir().expect("temp dir");
    let config = tmp.path().join("det.toml");
    std::fs::write(&config, CLI_CONFIG).expect("write config");
    let (d1, d2) = (tmp.path().join("a"), tmp.path().join("b"));
    match (cli_report(&d1, &config), cli_report(&d2, &config)) {
        (Ok(x), Ok(y)) if x == y => (true, format!("{} + {} report bytes identical across reruns", a.len(), x.len())),
        (Ok(_), Ok(_)) => (false, "CLI reruns differ".into()),
        (Err(e), _) | (_, Err(e)) => (false, format!("CLI run failed: {e}")),
    }
}

fn main() -> ExitCode {
    let report = run(&builtin(), RunOptions::default());
    let mut all = true;
    for c in &CRITERIA {
        let (ok, detail) = grade(c, &report);
        all &= ok;
        println!("criterion {:>2} {}  {}: {}", c.id, if ok { "PASS" } else { "FAIL" }, c.label, detail);
    }
    let (ok, detail) = determinism(&report);
    all &= ok;
    println!("criterion 12 {}  identical config and seed give identical report bytes: {}", if ok { "PASS" } else { "FAIL" }, detail);

    let coverage = report.rows.iter().find(|r| r.check == "coverage");
    let covered = coverage.is_some_and(|r| r.status == Status::Ok);
    all &= covered;
    println!("coverage     {}  built-in scenarios exercise every library operation", if covered { "PASS" } else { "FAIL" });
    for note in &report.notes {
        println!("note: {note}");
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
