//! Command-line front end.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use coadjoint_core::gaudin::GaudinGroup;
use coadjoint_core::multitime::{action_with_endpoint, LagrangianSystem, MultiTimePath};
use coadjoint_core::scalar::{max_modulus, Complex64, Scalar};
use serde::Serialize;

use crate::config::{ConfigError, ModelConfig, ModelInstance, DEFAULT_ACTION_TOLERANCE};
use crate::harness::{run_suite, HarnessError};
use crate::output::{simulate, write_tables, ReportDocument};

/// Largest endpoint discrepancy at which two action paths count as sharing
/// their endpoint.
pub const ENDPOINT_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Parser)]
#[command(
    name = "coadjoint",
    version,
    about = "Integrable flows on coadjoint orbits: simulation and verification"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Integrate each configured flow and write one CSV per flow.
    Simulate(CommonArgs),
    /// Run the verification campaign and emit a JSON report.
    Verify(CommonArgs),
    /// Compare the actions of two multi-time paths.
    Action(CommonArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// JSON run configuration.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Multiplies every tolerance.
    #[arg(long, default_value_t = 1.0)]
    pub tolerance_scale: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Io(String),
}

impl From<HarnessError> for CliError {
    fn from(e: HarnessError) -> Self {
        match e {
            HarnessError::Runtime { .. } => CliError::Runtime(e.to_string()),
            other => CliError::Config(ConfigError::Harness(other)),
        }
    }
}

impl From<coadjoint_core::Error> for CliError {
    fn from(e: coadjoint_core::Error) -> Self {
        CliError::Runtime(e.to_string())
    }
}

/// Result of a command that ran to completion.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Outcome {
    Success,
    CheckFailed,
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(ConfigError::Io { .. }) | CliError::Io(_) => 4,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

fn io_error(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Parses arguments, runs the command and maps the result to an exit code.
pub fn main_with_args<I, T>(args: I) -> ExitCode
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let mut stdout = std::io::stdout().lock();
    match run(&cli, &mut stdout) {
        Ok(Outcome::Success) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

pub fn run(cli: &Cli, out: &mut dyn Write) -> Result<Outcome, CliError> {
    match &cli.command {
        Command::Simulate(args) => cmd_simulate(args, out),
        Command::Verify(args) => cmd_verify(args, out),
        Command::Action(args) => cmd_action(args, out),
    }
}

fn load(args: &CommonArgs) -> Result<(ModelConfig, u64), CliError> {
    let cfg = ModelConfig::load(&args.config)?;
    if !(args.tolerance_scale.is_finite() && args.tolerance_scale >= 0.0) {
        return Err(ConfigError::Invalid(format!("tolerance scale {}", args.tolerance_scale)).into());
    }
    let seed = args.seed.unwrap_or(cfg.seed);
    Ok((cfg, seed))
}

fn say(out: &mut dyn Write, text: std::fmt::Arguments<'_>) -> Result<(), CliError> {
    out.write_fmt(text)
        .and_then(|_| out.write_all(b"\n"))
        .map_err(|e| CliError::Io(format!("stdout: {e}")))
}

pub fn cmd_simulate(args: &CommonArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let (cfg, seed) = load(args)?;
    let instance = cfg.instance(seed)?;
    let tables = cfg
        .flow_ids(&instance)?
        .into_iter()
        .map(|flow| simulate(&instance, flow, cfg.duration, cfg.step))
        .collect::<Result<Vec<_>, _>>()?;
    let dir = args.out.clone().unwrap_or_else(|| PathBuf::from("."));
    for path in write_tables(&dir, &tables).map_err(|e| io_error(&dir, e))? {
        say(out, format_args!("wrote {}", path.display()))?;
    }
    Ok(Outcome::Success)
}

pub fn cmd_verify(args: &CommonArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let (cfg, seed) = load(args)?;
    let mut suite = cfg.suite()?;
    suite.seed = seed;
    suite.tolerance_scale = args.tolerance_scale;
    let reports = run_suite(&suite)?;
    let doc = ReportDocument::new(cfg.model, seed, &reports);
    let json = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Runtime(e.to_string()))?;
    match &args.out {
        Some(dir) => {
            let path = dir.join("report.json");
            std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
            std::fs::write(&path, format!("{json}\n")).map_err(|e| io_error(&path, e))?;
            for c in &doc.checks {
                let verdict = if c.pass { "PASS" } else { "FAIL" };
                say(
                    out,
                    format_args!(
                        "{verdict} {} residual {:e} tolerance {:e}",
                        c.id, c.max_residual, c.tolerance
                    ),
                )?;
            }
        }
        None => say(out, format_args!("{json}"))?,
    }
    Ok(if doc.all_pass() {
        Outcome::Success
    } else {
        Outcome::CheckFailed
    })
}

/// Both actions and the verdict of the `action` command.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActionSummary {
    pub first: [f64; 2],
    pub second: [f64; 2],
    pub difference: f64,
    pub endpoint_gap: f64,
    pub tolerance: f64,
    /// `None` when the endpoints differ.
    pub pass: Option<bool>,
}

fn compare<M: LagrangianSystem>(
    model: &M,
    start: &[M::Scalar],
    first: &MultiTimePath,
    second: &MultiTimePath,
    tolerance: f64,
) -> Result<ActionSummary, CliError> {
    let (s1, x1) = action_with_endpoint(model, first, start)?;
    let (s2, x2) = action_with_endpoint(model, second, start)?;
    let gap = max_modulus(&x1.iter().zip(&x2).map(|(&a, &b)| a - b).collect::<Vec<_>>());
    let difference = (s1 - s2).modulus();
    Ok(ActionSummary {
        first: [s1.re(), s1.im()],
        second: [s2.re(), s2.im()],
        difference,
        endpoint_gap: gap,
        tolerance,
        pass: (gap <= ENDPOINT_TOLERANCE).then_some(difference <= tolerance),
    })
}

pub fn action_summary(cfg: &ModelConfig, seed: u64, tolerance_scale: f64) -> Result<ActionSummary, CliError> {
    let instance = cfg.instance(seed)?;
    let (first, second) = cfg.action_paths()?;
    let tol = cfg.action_tolerance.unwrap_or(DEFAULT_ACTION_TOLERANCE) * tolerance_scale;
    match &instance {
        ModelInstance::TodaAks { chart, start } => compare(chart, start, &first, &second, tol),
        ModelInstance::TodaCartan { chart, start } => compare(chart, start, &first, &second, tol),
        ModelInstance::Gaudin { orbit } => {
            let group = GaudinGroup::new(orbit.clone());
            let start: Vec<Complex64> = group.initial_state();
            compare(&group, &start, &first, &second, tol)
        }
    }
}

pub fn cmd_action(args: &CommonArgs, out: &mut dyn Write) -> Result<Outcome, CliError> {
    let (cfg, seed) = load(args)?;
    let summary = action_summary(&cfg, seed, args.tolerance_scale)?;
    let fmt_c = |c: [f64; 2]| {
        if c[1] == 0.0 {
            format!("{}", c[0])
        } else {
            format!("{}{:+}i", c[0], c[1])
        }
    };
    say(out, format_args!("action first: {}", fmt_c(summary.first)))?;
    say(out, format_args!("action second: {}", fmt_c(summary.second)))?;
    say(out, format_args!("difference: {:e}", summary.difference))?;
    match summary.pass {
        None => say(
            out,
            format_args!(
                "endpoints differ by {:e}; no pass/fail judgment is made",
                summary.endpoint_gap
            ),
        )?,
        Some(pass) => say(
            out,
            format_args!(
                "{} (tolerance {:e})",
                if pass { "PASS" } else { "FAIL" },
                summary.tolerance
            ),
        )?,
    }
    if let Some(dir) = &args.out {
        let path = dir.join("action.json");
        let json = serde_json::to_string_pretty(&summary).map_err(|e| CliError::Runtime(e.to_string()))?;
        std::fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
        std::fs::write(&path, format!("{json}\n")).map_err(|e| io_error(&path, e))?;
    }
    Ok(if summary.pass == Some(false) {
        Outcome::CheckFailed
    } else {
        Outcome::Success
    })
}
