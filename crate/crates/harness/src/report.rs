//! Report rows and their renderings.

use std::fmt::Write as _;
use std::io::{self, Write};

use sha2::{Digest, Sha256};

pub const CSV_HEADER: &str = "check,param_digest,metric,tolerance,status,seconds";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Ok,
    Fail,
    /// Reported for context; never fails a run.
    Info,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Ok => "ok",
            Status::Fail => "FAIL",
            Status::Info => "info",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Row {
    /// `scenario/check[.detail]`.
    pub check: String,
    pub param_digest: String,
    pub metric: f64,
    pub tolerance: f64,
    pub status: Status,
    pub seconds: f64,
}

impl Row {
    /// A graded row: ok iff `metric ≤ tolerance` (NaN fails).
    pub fn graded(check: String, canonical: &str, metric: f64, tolerance: f64) -> Row {
        // fold away a negative zero so it prints as 0
        let metric = metric + 0.0;
        let status = if metric <= tolerance { Status::Ok } else { Status::Fail };
        Row { param_digest: digest(canonical, &check), check, metric, tolerance, status, seconds: 0.0 }
    }

    pub fn info(check: String, canonical: &str, metric: f64, tolerance: f64) -> Row {
        let metric = metric + 0.0;
        Row { param_digest: digest(canonical, &check), check, metric, tolerance, status: Status::Info, seconds: 0.0 }
    }
}

/// First 16 hex digits of `sha256(canonical || 0 || check)`.
pub fn digest(canonical: &str, check: &str) -> String {
    let mut h = Sha256::new();
    h.update(canonical.as_bytes());
    h.update([0u8]);
    h.update(check.as_bytes());
    h.finalize().iter().take(8).fold(String::with_capacity(16), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Seventeen significant digits.
pub fn num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Report {
    pub rows: Vec<Row>,
    /// Diagnostics for errored checks; not part of the rendered report.
    pub notes: Vec<String>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Table,
    /// `index metric` pairs, one per row.
    Plot,
}

impl Report {
    pub fn passed(&self) -> bool {
        self.rows.iter().all(|r| r.status != Status::Fail)
    }

    /// Renders the report. Wall times are only written when `timings` is set,
    /// so default output is byte-identical across runs.
    pub fn emit(&self, format: Format, timings: bool, out: &mut dyn Write) -> io::Result<()> {
        let secs = |r: &Row| if timings { format!("{:.3}", r.seconds) } else { String::new() };
        match format {
            Format::Csv => {
                writeln!(out, "{CSV_HEADER}")?;
                for r in &self.rows {
                    writeln!(
                        out,
                        "{},{},{},{},{},{}",
                        r.check,
                        r.param_digest,
                        num(r.metric),
                        num(r.tolerance),
                        r.status.as_str(),
                        secs(r)
                    )?;
                }
            }
            Format::Table => {
                let cells: Vec<[String; 6]> = self
                    .rows
                    .iter()
                    .map(|r| {
                        [
                            r.check.clone(),
                            r.param_digest.clone(),
                            num(r.metric),
                            num(r.tolerance),
                            r.status.as_str().to_string(),
                            secs(r),
                        ]
                    })
                    .collect();
                let head = ["check", "param_digest", "metric", "tolerance", "status", "seconds"];
                let mut width = head.map(str::len);
                for c in &cells {
                    for (w, s) in width.iter_mut().zip(c) {
                        *w = (*w).max(s.chars().count());
                    }
                }
                let line = |cols: [&str; 6]| {
                    let mut s = String::new();
                    for (i, (c, w)) in cols.iter().zip(width).enumerate() {
                        if i > 0 {
                            s.push_str("  ");
                        }
                        let _ = write!(s, "{c:<w$}");
                    }
                    s.trim_end().to_string()
                };
                writeln!(out, "{}", line(head))?;
                for c in &cells {
                    writeln!(out, "{}", line([&c[0], &c[1], &c[2], &c[3], &c[4], &c[5]].map(|s| s.as_str())))?;
                }
            }
            Format::Plot => {
                writeln!(out, "# index metric")?;
                for (i, r) in self.rows.iter().enumerate() {
                    writeln!(out, "{i} {}", num(r.metric))?;
                }
            }
        }
        Ok(())
    }

    pub fn render(&self, format: Format, timings: bool) -> String {
        let mut buf = Vec::new();
        self.emit(format, timings, &mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("ascii report")
    }
}

/// Two-column `(parameter, error)` series.
pub fn emit_series(label: &str, series: &[(f64, f64)], out: &mut dyn Write) -> io::Result<()> {
    writeln!(out, "# {label}")?;
    for (p, err) in series {
        writeln!(out, "{} {}", num(*p), num(*err))?;
    }
    Ok(())
}
