//! Argument parsing and subcommand dispatch for `quantize`.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use superquant::hilbert::QuantizationContext;
use superquant::verify::{verify_with, DEFAULT_SEED};

use crate::config::{resolve, Overrides, ScenarioName};
use crate::exit::{CliError, ExitCode};
use crate::run::run_scenario;
use crate::sweep::{run_sweep, SweepConfig};

#[derive(Debug, Parser)]
#[command(name = "quantize", version, about = "Quantize classical dynamical operators and evolve the result")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario and write its trajectory, manifest and report.
    Run(RunArgs),
    /// Check every quantization identity and print a JSON report.
    Verify(VerifyArgs),
    /// Run a grid of scenarios, optionally in parallel.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Built-in scenario; also selects how a bare coefficient file is read.
    #[arg(long, value_enum)]
    pub scenario: Option<ScenarioName>,
    /// Scenario JSON, run manifest, or bare Fokker-Planck coefficients.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub hbar: Option<f64>,
    /// Fock levels per mode.
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Also write a verification report; exit 5 if it fails.
    #[arg(long)]
    pub verify: bool,
    /// Skip the quantum evolution.
    #[arg(long)]
    pub classical_only: bool,
    /// Permit three-mode quantum runs (dim <= 8).
    #[arg(long)]
    pub allow_large: bool,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            hbar: self.hbar,
            dim: self.dim,
            dt: self.dt,
            steps: self.steps,
            out: self.out.clone(),
            seed: self.seed,
            verify: self.verify,
            classical_only: self.classical_only,
            allow_large: self.allow_large,
        }
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub common: CommonArgs,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, default_value_t = 1.0)]
    pub hbar: f64,
    #[arg(long, default_value_t = 16)]
    pub dim: usize,
    #[arg(long, default_value_t = 1)]
    pub modes: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Write `verification.json` here in addition to stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Corrupt the position superoperator to check that the report catches it.
    #[arg(long)]
    pub inject_fault: bool,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Runs executed concurrently.
    #[arg(long, default_value_t = 1)]
    pub jobs: usize,
}

fn run(args: &RunArgs) -> Result<ExitCode, CliError> {
    let c = &args.common;
    let cfg = resolve(c.config.as_deref(), c.scenario, &c.overrides())?;
    if cfg.verify {
        eprintln!("seed: {:#x}", cfg.seed);
    }
    let outcome = run_scenario(&cfg)?;
    for f in &outcome.manifest.outputs {
        eprintln!("wrote {}", cfg.output.dir.join(f).display());
    }
    if outcome.manifest.flagged {
        eprintln!("warning: trace or Hermiticity monitor flagged this run (see manifest)");
    }
    if let Some(r) = &outcome.report {
        for e in r.failures() {
            eprintln!("FAIL {} / {}: residual {:e} > {:e}", e.suite, e.name, e.residual, e.tolerance.unwrap_or(0.0));
        }
    }
    Ok(outcome.exit_code())
}

fn verify(args: &VerifyArgs) -> Result<ExitCode, CliError> {
    eprintln!("seed: {:#x}", args.seed);
    let ctx = QuantizationContext::new(args.hbar, args.dim, args.modes)?;
    let report = verify_with(&ctx, args.seed, args.inject_fault)?;
    let text = report.to_json();
    println!("{text}");
    if let Some(dir) = &args.out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("verification.json"), text + "\n")?;
    }
    for e in report.failures() {
        eprintln!("FAIL {} / {}: residual {:e}", e.suite, e.name, e.residual);
    }
    Ok(if report.passed() { ExitCode::Ok } else { ExitCode::Verification })
}

fn sweep(args: &SweepArgs) -> Result<ExitCode, CliError> {
    let path = args
        .common
        .config
        .as_deref()
        .ok_or_else(|| CliError::config("sweep needs --config with a sweep file".into()))?;
    let s = SweepConfig::load(path)?;
    if let Some(name) = args.common.scenario {
        if name != s.base.name {
            return Err(CliError::config(format!("--scenario {} conflicts with the sweep base", name.as_str())));
        }
    }
    s.base.validate()?;
    let results = run_sweep(&s, &args.common.overrides(), args.jobs)?;
    let mut worst = ExitCode::Ok;
    for r in &results {
        eprintln!("run {:03} hbar={} dim={} dt={} -> exit {}", r.index, r.hbar, r.dim, r.dt, r.exit_code);
        if let Some(e) = &r.error {
            eprintln!("  {e}");
        }
        if r.exit_code != 0 && worst == ExitCode::Ok {
            worst = code_from(r.exit_code);
        }
    }
    Ok(worst)
}

fn code_from(c: i32) -> ExitCode {
    match c {
        0 => ExitCode::Ok,
        2 => ExitCode::Config,
        3 => ExitCode::Divergence,
        4 => ExitCode::Infeasible,
        5 => ExitCode::Verification,
        _ => ExitCode::Runtime,
    }
}

/// Entry point shared by the binary and the tests; returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::Config.code() } else { ExitCode::Ok.code() };
        }
    };
    let result = match &cli.command {
        Command::Run(a) => run(a),
        Command::Verify(a) => verify(a),
        Command::Sweep(a) => sweep(a),
    };
    match result {
        Ok(code) => code.code(),
        Err(e) => {
            eprintln!("error: {e}");
            e.code.code()
        }
    }
}
