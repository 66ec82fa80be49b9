//! `smearspace` command-line driver.

mod commands;
mod config;
mod output;

use std::collections::BTreeMap;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use config::{ModeKind, RunConfig};
use output::write_atomic;

#[derive(Debug)]
pub enum CliError {
    /// Bad configuration or a domain error from the library (exit 2).
    Config(String),
    /// Reading or writing files failed (exit 3).
    Io(String),
}

impl From<smearspace::Error> for CliError {
    fn from(e: smearspace::Error) -> Self {
        CliError::Config(e.to_string())
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "error: {m}"),
            CliError::Io(m) => write!(f, "I/O error: {m}"),
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Debug, Parser)]
#[command(name = "smearspace", version, about = "Smeared-space quantum mechanics toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<FormatArg>,
    #[arg(long, global = true)]
    grid_n: Option<usize>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    sigma_g: Option<f64>,
    /// Extra `key=value` override; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Planck, de Sitter and smearing scales.
    Scales,
    /// Unified uncertainty products for Gaussian states.
    Uncertainty,
    /// Sequential measurements with collapse.
    Measure,
    /// Time evolution of a Gaussian packet.
    Evolve,
    /// Two-particle entanglement induced by smearing.
    Entangle,
    /// POVM-mode variances against smeared-mode variances.
    PovmCompare,
    /// Compton, Schwarzschild and unified radii.
    Massradius,
}

impl Command {
    fn default_mode(self) -> ModeKind {
        match self {
            Command::Scales | Command::Massradius => ModeKind::Physical,
            _ => ModeKind::Dimensionless,
        }
    }
}

fn merged_values(cli: &Cli) -> Result<BTreeMap<String, String>, CliError> {
    let mut values = match &cli.config {
        Some(path) => config::read_file(path)?,
        None => BTreeMap::new(),
    };
    for item in &cli.set {
        let (k, v) = item
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("--set expects KEY=VALUE, got {item:?}")))?;
        values.insert(k.trim().to_string(), v.trim().to_string());
    }
    let mut flag = |key: &str, value: Option<String>| {
        if let Some(v) = value {
            values.insert(key.to_string(), v);
        }
    };
    flag("seed", cli.seed.map(|s| s.to_string()));
    flag("output.path", cli.out.as_ref().map(|p| p.display().to_string()));
    flag(
        "output.format",
        cli.format.map(|f| match f {
            FormatArg::Csv => "csv".to_string(),
            FormatArg::Json => "json".to_string(),
        }),
    );
    flag("grid.n", cli.grid_n.map(|n| n.to_string()));
    flag("dimensionless.beta", cli.beta.map(|b| format!("{b:e}")));
    flag("dimensionless.sigma_g", cli.sigma_g.map(|s| format!("{s:e}")));
    Ok(values)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = RunConfig::from_values(merged_values(cli)?, cli.command.default_mode())?;
    let table = match cli.command {
        Command::Scales => commands::scales(&cfg),
        Command::Uncertainty => commands::uncertainty(&cfg),
        Command::Measure => commands::measure(&cfg),
        Command::Evolve => commands::evolve_cmd(&cfg),
        Command::Entangle => commands::entangle(&cfg),
        Command::PovmCompare => commands::povm_compare(&cfg),
        Command::Massradius => commands::massradius(&cfg),
    }?;
    let text = table.render(cfg.format, cfg.seed);
    match &cfg.out {
        Some(path) => write_atomic(path, &text),
        None => {
            use std::io::Write;
            std::io::stdout()
                .write_all(text.as_bytes())
                .map_err(|e| CliError::Io(format!("writing standard output: {e}")))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
