//! `translab`: config-driven runner for the orbit, transitivity and
//! weighted-shift experiments of the `translab` library.
//!
//! Every experiment is a TOML file (see [`config`]). A run writes a JSON
//! report `<stem>.<operation>.json` to the output directory, plus a CSV for
//! scans and a certificate for constructions, and prints a one-line JSON
//! summary to stdout.
//!
//! Exit codes: `0` success (witness found, scan passed, certificate verified),
//! `1` the experiment ran but found no witness or failed a check, `2` the
//! configuration is invalid.

pub mod config;
pub mod json;
pub mod run;

use std::ffi::OsString;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use config::{Config, Operation};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_INVALID: i32 = 2;

/// Default output directory when neither `--out` nor the variable is set.
pub const DEFAULT_OUT_DIR: &str = "translab-out";
pub const OUT_DIR_ENV: &str = "TRANSLAB_OUT_DIR";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] translab::Error),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "invalid-config",
            CliError::Core(_) => "invalid-input",
            CliError::Io(_) => "io",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub passed: bool,
    pub exit_code: i32,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub tool: String,
    pub version: String,
    pub operation: Operation,
    pub config: Config,
    pub seed: u64,
    pub wall_time_ms: u64,
    pub result: Value,
    pub summary: Summary,
}

/// Runs one experiment in-process.
pub fn run_config(cfg: &Config, op: Operation, base_dir: &Path) -> Result<(RunReport, run::Outcome), CliError> {
    let start = Instant::now();
    let mut outcome = run::execute(cfg, op, base_dir)?;
    let exit_code = if outcome.passed { EXIT_PASS } else { EXIT_FAIL };
    let report = RunReport {
        tool: "translab".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        operation: op,
        config: cfg.clone(),
        seed: cfg.seed,
        wall_time_ms: start.elapsed().as_millis() as u64,
        result: std::mem::take(&mut outcome.result),
        summary: Summary {
            passed: outcome.passed,
            exit_code,
            message: outcome.message.clone(),
        },
    };
    Ok((report, outcome))
}

#[derive(Parser, Debug)]
#[command(name = "translab", version, about = "Topological transitivity experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// Experiment file, or a directory whose *.toml files run in name order.
    #[arg(long)]
    config: PathBuf,
    /// Overrides the seed in the config.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory for reports.
    #[arg(long, env = OUT_DIR_ENV, default_value = DEFAULT_OUT_DIR)]
    out: PathBuf,
    /// Worker threads for parallel searches (results do not depend on it).
    #[arg(long)]
    jobs: Option<usize>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Runs the operation named in each config file.
    Run(Common),
    /// Transitivity scan over ball pairs.
    Scan(Common),
    /// Almost-transitivity scan (either direction counts).
    AlmostScan(Common),
    /// Nested-ball construction of a recurrent point.
    Recurrent(Common),
    /// Re-checks a certificate file.
    VerifyCert(Common),
    /// Partial-product criterion for a weighted shift.
    Salas(Common),
    /// Exact transitivity witnesses for a shift-family system.
    Witness(Common),
    /// Checks T^p: one-step coherence plus transitivity.
    PowerCheck(Common),
    /// Checks lambda T for |lambda| = 1: norm invariance plus witnesses.
    UnimodularCheck(Common),
    /// Orbit-span basis and compressed operator.
    Span(Common),
    /// Truncated G-delta membership.
    Gdelta(Common),
    /// Prolongational limit set witness.
    Jset(Common),
    /// Limit set witness (recurrence when y is omitted).
    Limit(Common),
    /// Orbit segment.
    Orbit(Common),
}

impl Command {
    fn split(self) -> (Option<Operation>, Common) {
        use Command as C;
        use Operation as O;
        match self {
            C::Run(c) => (None, c),
            C::Scan(c) => (Some(O::Scan), c),
            C::AlmostScan(c) => (Some(O::AlmostScan), c),
            C::Recurrent(c) => (Some(O::Recurrent), c),
            C::VerifyCert(c) => (Some(O::VerifyCert), c),
            C::Salas(c) => (Some(O::Salas), c),
            C::Witness(c) => (Some(O::Witness), c),
            C::PowerCheck(c) => (Some(O::PowerCheck), c),
            C::UnimodularCheck(c) => (Some(O::UnimodularCheck), c),
            C::Span(c) => (Some(O::Span), c),
            C::Gdelta(c) => (Some(O::Gdelta), c),
            C::Jset(c) => (Some(O::Jset), c),
            C::Limit(c) => (Some(O::Limit), c),
            C::Orbit(c) => (Some(O::Orbit), c),
        }
    }
}

fn print_line(v: &Value) {
    println!("{}", serde_json::to_string(v).expect("summary serializes"));
}

fn error_line(path: &Path, e: &CliError) -> i32 {
    print_line(&json!({
        "config": path.display().to_string(),
        "error": { "kind": e.kind(), "message": e.to_string() },
        "exit_code": EXIT_INVALID,
    }));
    eprintln!("translab: {}: {e}", path.display());
    EXIT_INVALID
}

fn write(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    std::fs::write(path, bytes).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn run_file(path: &Path, forced: Option<Operation>, common: &Common) -> Result<i32, CliError> {
    let mut cfg = Config::load(path)?;
    if let Some(seed) = common.seed {
        cfg.seed = seed;
    }
    let op = forced
        .or(cfg.operation)
        .ok_or_else(|| CliError::Config("no operation: use a subcommand or set `operation`".into()))?;
    let base_dir = path.parent().unwrap_or(Path::new("."));
    let (report, outcome) = run_config(&cfg, op, base_dir)?;

    std::fs::create_dir_all(&common.out)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", common.out.display())))?;
    let stem = path.file_stem().map_or("experiment".into(), |s| s.to_string_lossy().into_owned());
    let report_path = common.out.join(format!("{stem}.{}.json", op.name()));
    write(&report_path, &json::to_vec(&report).map_err(|e| CliError::Io(e.to_string()))?)?;
    let mut artifacts = Vec::new();
    for (suffix, bytes) in &outcome.artifacts {
        let p = common.out.join(format!("{stem}.{suffix}"));
        write(&p, bytes)?;
        artifacts.push(p.display().to_string());
    }
    print_line(&json!({
        "config": path.display().to_string(),
        "operation": op.name(),
        "passed": report.summary.passed,
        "exit_code": report.summary.exit_code,
        "message": report.summary.message,
        "report": report_path.display().to_string(),
        "artifacts": artifacts,
    }));
    Ok(report.summary.exit_code)
}

/// Entry point shared by the binary and tests. Returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_PASS };
            let _ = e.print();
            return code;
        }
    };
    let (forced, common) = cli.command.split();
    if let Some(jobs) = common.jobs {
        // a second initialisation in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs.max(1)).build_global();
    }
    let files = match config::expand(&common.config) {
        Ok(f) => f,
        Err(e) => return error_line(&common.config, &e),
    };
    files
        .iter()
        .map(|f| run_file(f, forced, &common).unwrap_or_else(|e| error_line(f, &e)))
        .max()
        .unwrap_or(EXIT_PASS)
}
