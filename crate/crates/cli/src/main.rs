mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use mcpg_core::{ControlLaw, Morphology};
use serde_json::json;

#[derive(Parser, Debug)]
#[command(name = "mcpg", version, about = "Chaotic CPG locomotion experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment directory. Defaults to `<out-root>/<command>-<config hash>`.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Root for default experiment directories.
    #[arg(long, global = true, env = "MCPG_OUT", default_value = "mcpg-out")]
    pub out_root: PathBuf,
    /// Extra output representation; CSV data is always written.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    Svg,
    Ascii,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Law {
    Published,
    Blended,
}

impl From<Law> for ControlLaw {
    fn from(l: Law) -> Self {
        match l {
            Law::Published => ControlLaw::Published,
            Law::Blended => ControlLaw::Blended,
        }
    }
}

/// Body plan and plant.
#[derive(Args, Debug, Clone)]
pub struct Body {
    #[arg(long)]
    pub morphology: Option<Morphology>,
    /// Plant config file (TOML). Its morphology wins over the default.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
pub struct Learning {
    /// Annealing factor; `inf` or `greedy` for strict greedy search.
    #[arg(long, default_value = "0.5", value_parser = parse_beta)]
    pub beta: f64,
    /// Required deviation magnitude, degrees.
    #[arg(long, default_value_t = 8.0)]
    pub e_req: f64,
    #[arg(long, default_value_t = 200)]
    pub max_trials: usize,
}

fn parse_beta(s: &str) -> Result<f64, String> {
    match s.trim().to_ascii_lowercase().as_str() {
        "greedy" => Ok(f64::INFINITY),
        t => t.parse::<f64>().map_err(|e| format!("{s}: {e}")),
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Iterate one controlled oscillator, or the whole network with `--network`.
    RunCpg(commands::RunCpg),
    /// Stance/swing diagram for a period assignment.
    Gait(commands::Gait),
    /// Learn a compensating period combination for one scenario.
    Learn(commands::Learn),
    /// Learn every committed disabled-leg scenario several times.
    Battery(commands::Battery),
    /// Compare learning cost across annealing factors.
    SweepBeta(commands::SweepBeta),
    /// Largest Lyapunov exponent of the uncontrolled map.
    Lyapunov(commands::Lyapunov),
}

fn fail(kind: &str, message: String, code: u8) -> ExitCode {
    eprintln!("{}", json!({ "error": { "kind": kind, "message": message } }));
    ExitCode::from(code)
}

fn error_kind(e: &anyhow::Error) -> &'static str {
    use mcpg_core::Error as E;
    match e.downcast_ref::<E>() {
        Some(E::InvalidArgument(_)) => "invalid-argument",
        Some(E::NotReady { .. }) => "not-ready",
        Some(E::UnsupportedPeriod(_)) => "unsupported-period",
        Some(E::InvalidScenario(_)) => "invalid-scenario",
        Some(E::InvalidConfig(_)) => "invalid-config",
        Some(E::Exhausted { .. }) => "exhausted",
        Some(E::NeighbourhoodExhausted) => "neighbourhood-exhausted",
        None if e.downcast_ref::<commands::Usage>().is_some() => "usage",
        None if e.downcast_ref::<std::io::Error>().is_some() => "io",
        None => "error",
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion) => {
            e.exit()
        }
        Err(e) => return fail("usage", e.render().to_string().trim_end().to_string(), 2),
    };
    let c = &cli.common;
    let result = match &cli.command {
        Command::RunCpg(a) => commands::run_cpg(a, c),
        Command::Gait(a) => commands::gait(a, c),
        Command::Learn(a) => commands::learn(a, c),
        Command::Battery(a) => commands::battery(a, c),
        Command::SweepBeta(a) => commands::sweep_beta(a, c),
        Command::Lyapunov(a) => commands::lyapunov(a, c),
    };
    match result {
        Ok(dir) => {
            println!("{}", dir.display());
            ExitCode::SUCCESS
        }
        Err(e) => {
            let kind = error_kind(&e);
            let code = if kind == "usage" { 2 } else { 1 };
            fail(kind, format!("{e:#}"), code)
        }
    }
}
