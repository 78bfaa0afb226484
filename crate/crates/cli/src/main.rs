//! `chentype`: batch verifier and classification-atlas generator.

mod atlas;
mod checks;
mod config;
mod report;

use std::collections::BTreeMap;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use checks::{Check, Context, Outcome};
use config::{Format, Mode, RunConfig};
use report::{Meta, Record, Report, Skipped};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("I/O error: {0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "chentype", version, about = "Chen-type verification for model real hypersurfaces in quaternionic space forms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run named checks over a grid of family members and report residuals.
    Verify(RunArgs),
    /// Tabulate type, eigenvalues, mass-symmetry and minimality over a grid.
    Atlas(RunArgs),
}

#[derive(Args, Debug)]
struct RunArgs {
    /// `key = value` file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Comma-separated families: p1k, p2, h1k, h2, h3.
    #[arg(long)]
    family: Option<String>,
    /// Comma-separated quaternionic dimensions.
    #[arg(long)]
    m: Option<String>,
    /// Comma-separated core dimensions for p1k and h1k (default: every legal k).
    #[arg(long)]
    k: Option<String>,
    /// Comma-separated radii: decimals or auto:{two-type,minimal,mass-symmetric,one-type}.
    #[arg(long, allow_hyphen_values = true)]
    radius: Option<String>,
    /// Comma-separated checks, or `all`.
    #[arg(long)]
    checks: Option<String>,
    /// Finite-difference step.
    #[arg(long = "fd-step")]
    fd_step: Option<String>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long, value_parser = ["json", "md", "csv"])]
    format: Option<String>,
    /// Output file (default: standard output).
    #[arg(long)]
    out: Option<PathBuf>,
}

impl RunArgs {
    fn settings(&self) -> Result<BTreeMap<String, String>, CliError> {
        let mut s = match &self.config {
            Some(path) => config::read_config_file(path)?,
            None => BTreeMap::new(),
        };
        let flags = [
            ("family", self.family.clone()),
            ("m", self.m.clone()),
            ("k", self.k.clone()),
            ("radius", self.radius.clone()),
            ("checks", self.checks.clone()),
            ("fd-step", self.fd_step.clone()),
            ("seed", self.seed.clone()),
            ("format", self.format.clone()),
            ("out", self.out.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, value) in flags {
            if let Some(v) = value {
                s.insert(key.to_string(), v);
            }
        }
        Ok(s)
    }
}

enum Task {
    Cell(Check, config::Cell),
    Point(Check, chentype::FamilySpec),
}

fn verify(cfg: &RunConfig) -> Result<Report, CliError> {
    let ctx = Context { seed: cfg.seed, fd: cfg.fd };
    let mut tasks = Vec::new();
    for cell in cfg.cells()? {
        let specs = cfg.specs(cell)?;
        for &check in &cfg.checks {
            if check.per_cell() {
                tasks.push(Task::Cell(check, cell));
            } else {
                tasks.extend(specs.iter().map(|sp| Task::Point(check, *sp)));
            }
        }
    }
    let outcomes: Vec<Outcome> = tasks
        .par_iter()
        .map(|t| match t {
            Task::Cell(check, cell) => checks::run_cell(*check, *cell, &ctx),
            Task::Point(check, sp) => checks::run_point(*check, *sp, &ctx),
        })
        .collect();
    let mut records: Vec<Record> = Vec::new();
    let mut skipped: Vec<Skipped> = Vec::new();
    for o in outcomes {
        match o {
            Outcome::Records(r) => records.extend(r),
            Outcome::Skip(s) => skipped.push(s),
        }
    }
    let family_rank = |name: &str| chentype::Family::ALL.iter().position(|f| f.name() == name);
    let radius_key = |r: Option<f64>| r.unwrap_or(-1.0);
    records.sort_by(|a, b| {
        (family_rank(&a.family), a.params.m, a.params.k)
            .cmp(&(family_rank(&b.family), b.params.m, b.params.k))
            .then(radius_key(a.params.radius).total_cmp(&radius_key(b.params.radius)))
            .then(a.check.cmp(&b.check))
    });
    skipped.sort_by(|a, b| {
        (family_rank(&a.family), a.params.m, a.params.k)
            .cmp(&(family_rank(&b.family), b.params.m, b.params.k))
            .then(radius_key(a.params.radius).total_cmp(&radius_key(b.params.radius)))
            .then(a.check.cmp(&b.check))
    });
    let meta = Meta {
        tool: "chentype",
        version: env!("CARGO_PKG_VERSION"),
        command: "verify",
        seed: cfg.seed,
        fd_step: cfg.fd.h,
        richardson_levels: cfg.fd.richardson_levels,
        samples: checks::SAMPLES,
        checks: cfg.checks.clone(),
    };
    Ok(Report::new(meta, records, skipped))
}

fn emit(cfg: &RunConfig, text: &str) -> Result<(), CliError> {
    match &cfg.out {
        Some(path) => std::fs::write(path, text).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display()))),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(format!("cannot write to standard output: {e}"))),
    }
}

fn csv_error(e: csv::Error) -> CliError {
    CliError::Io(e.to_string())
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Verify(args) => {
            let cfg = RunConfig::from_settings(&args.settings()?, Mode::Verify)?;
            let report = verify(&cfg)?;
            let text = match cfg.format {
                Format::Json => report.to_json(),
                Format::Md => report.to_markdown(),
                Format::Csv => report.to_csv().map_err(csv_error)?,
            };
            emit(&cfg, &text)?;
            Ok(report.summary.pass)
        }
        Command::Atlas(args) => {
            let cfg = RunConfig::from_settings(&args.settings()?, Mode::Atlas)?;
            let table = atlas::build(&cfg)?;
            let text = match cfg.format {
                Format::Json => atlas::to_json(&table, &cfg),
                Format::Md => atlas::to_markdown(&table),
                Format::Csv => atlas::to_csv(&table).map_err(csv_error)?,
            };
            emit(&cfg, &text)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(e.exit_code().clamp(0, 255) as u8);
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("chentype: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
