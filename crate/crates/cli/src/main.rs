//! `mcflab` command-line front end.
//!
//! Every subcommand reads a `key = value` config (plus `--set` overrides),
//! runs one library operation, writes its artifacts atomically into the
//! output directory together with a `manifest.json`, and exits with 0 on
//! pass, 1 on an estimate or property violation and 2 on bad input.

mod commands;
mod context;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use mcflab::io::GeometryFormat;

#[derive(Parser, Debug)]
#[command(name = "mcflab", version, about = "Mean curvature flow laboratory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Config file with `key = value` lines.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Seed for randomised inputs.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Geometry output format.
    #[arg(long, global = true, default_value = "json")]
    pub format: GeometryFormat,
    /// Config override, `KEY=VALUE`; repeatable.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    /// Run a flow and write its trajectory, singularity estimate and summary CSV.
    Flow,
    /// Build a self-shrinker and report its residual.
    Shrinker,
    /// Audit the Gaussian density along a flow.
    Monotonicity,
    /// Parabolic rescalings and the blowup ladder at a singular point.
    Rescale,
    /// Gauss–Bonnet identities and the local estimate on a mesh.
    GbCheck,
    /// Curvature estimates along a flow.
    Estimate,
    /// Small-energy scan of a flow in the unit parabolic cylinder.
    Scan,
    /// Random intersection-frame identity check.
    Lemma5Test,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Flow => "flow",
            Command::Shrinker => "shrinker",
            Command::Monotonicity => "monotonicity",
            Command::Rescale => "rescale",
            Command::GbCheck => "gb-check",
            Command::Estimate => "estimate",
            Command::Scan => "scan",
            Command::Lemma5Test => "lemma5-test",
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<mcflab::Error>() {
        Some(e) if !e.is_input() => 1,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match commands::run(cli.command, &cli.common) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
