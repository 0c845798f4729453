use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use rieffel::{deformed_mul, Carrier, SkewForm};
use rieffel_harness::config::{self, Config, ConfigError};
use rieffel_harness::report::{emit_series, num, Format};
use rieffel_harness::{run, run_moyal, run_sweep, RunOptions};

/// Verification harness for computable Rieffel deformations.
#[derive(Parser)]
#[command(name = "rieffel", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the scenarios of a config (the built-in set when omitted).
    Verify {
        config: Option<PathBuf>,
        /// Output directory for report.csv. `RIEFFEL_OUT_DIR` overrides the default `.`.
        #[arg(long)]
        out: Option<PathBuf>,
        /// What to print on stdout.
        #[arg(long, value_enum, default_value_t = Shown::Table)]
        format: Shown,
        /// Fill the seconds column (makes output run-dependent).
        #[arg(long)]
        timings: bool,
        /// Run scenarios concurrently.
        #[arg(long)]
        parallel: bool,
    },
    /// Compute the declared Moyal products and write them as grid CSV.
    Moyal {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the commutation phases of the torus generators.
    Nctorus {
        #[arg(long, allow_negative_numbers = true)]
        theta: f64,
    },
    /// Write the declared convergence series as two-column data.
    Sweep {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Shown {
    Csv,
    Table,
    Plot,
}

fn out_dir(flag: Option<PathBuf>) -> PathBuf {
    flag.or_else(|| std::env::var_os("RIEFFEL_OUT_DIR").map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("."))
}

fn load(path: &Path) -> Result<Config, ExitCode> {
    config::load(path).map_err(|e| config_error(path, &e))
}

fn config_error(path: &Path, e: &ConfigError) -> ExitCode {
    eprintln!("error: {}: {e}", path.display());
    ExitCode::from(2)
}

fn io_error(what: &Path, e: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {}: {e}", what.display());
    ExitCode::from(1)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Command::Verify { config, out, format, timings, parallel } => {
            verify(config, out, format, timings, parallel).unwrap_or_else(|c| c)
        }
        Command::Moyal { config, out } => moyal(&config, out).unwrap_or_else(|c| c),
        Command::Nctorus { theta } => nctorus(theta).unwrap_or_else(|c| c),
        Command::Sweep { config, out } => sweep(&config, out).unwrap_or_else(|c| c),
    }
}

fn verify(
    path: Option<PathBuf>,
    out: Option<PathBuf>,
    shown: Shown,
    timings: bool,
    parallel: bool,
) -> Result<ExitCode, ExitCode> {
    let cfg = match &path {
        Some(p) => load(p)?,
        None => config::builtin(),
    };
    let report = run(&cfg, RunOptions { parallel });
    let dir = out_dir(out);
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    let csv = dir.join("report.csv");
    fs::write(&csv, report.render(Format::Csv, timings)).map_err(|e| io_error(&csv, e))?;
    let format = match shown {
        Shown::Csv => Format::Csv,
        Shown::Table => Format::Table,
        Shown::Plot => Format::Plot,
    };
    let mut stdout = io::stdout().lock();
    report.emit(format, timings, &mut stdout).map_err(|e| io_error(Path::new("stdout"), e))?;
    for note in &report.notes {
        eprintln!("note: {note}");
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn moyal(path: &Path, out: Option<PathBuf>) -> Result<ExitCode, ExitCode> {
    let cfg = load(path)?;
    let dir = out_dir(out);
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    for job in &cfg.moyal {
        let res = run_moyal(job).map_err(|e| io_error(Path::new(&job.name), e))?;
        let target = dir.join(&job.output);
        let file = fs::File::create(&target).map_err(|e| io_error(&target, e))?;
        rieffel::grid::write_csv(&res.product, io::BufWriter::new(file)).map_err(|e| io_error(&target, e))?;
        match res.oracle_error {
            Some(err) => println!("{} {} oracle_error={}", job.name, target.display(), num(err)),
            None => println!("{} {}", job.name, target.display()),
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn nctorus(theta: f64) -> Result<ExitCode, ExitCode> {
    if !theta.is_finite() {
        eprintln!("error: theta must be finite");
        return Err(ExitCode::from(2));
    }
    let fail = |e: rieffel::Error| io_error(Path::new("nctorus"), e);
    let c = Carrier::standard_torus(2).map_err(fail)?;
    let j = SkewForm::theta(theta);
    let u = [c.generator(0).map_err(fail)?, c.generator(1).map_err(fail)?];
    let mut stdout = io::stdout().lock();
    let _ = writeln!(stdout, "# theta {}", num(theta));
    let _ = writeln!(stdout, "# product re im");
    for (a, b) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        let p = deformed_mul(&j, &u[a], &u[b]).map_err(fail)?;
        let z = p.terms()[0].coeff[(0, 0)];
        let _ = writeln!(stdout, "u{}*u{} {} {}", a + 1, b + 1, num(z.re), num(z.im));
    }
    Ok(ExitCode::SUCCESS)
}

fn sweep(path: &Path, out: Option<PathBuf>) -> Result<ExitCode, ExitCode> {
    let cfg = load(path)?;
    let dir = out_dir(out);
    fs::create_dir_all(&dir).map_err(|e| io_error(&dir, e))?;
    for s in &cfg.sweeps {
        let series = run_sweep(s).map_err(|e| io_error(Path::new(&s.name), e))?;
        let target = dir.join(&s.output);
        let mut buf = Vec::new();
        emit_series(&format!("{} parameter error", s.name), &series, &mut buf).expect("writing to memory");
        fs::write(&target, buf).map_err(|e| io_error(&target, e))?;
        println!("{} {}", s.name, target.display());
    }
    Ok(ExitCode::SUCCESS)
}
