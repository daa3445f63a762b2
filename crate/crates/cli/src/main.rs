use std::path::PathBuf;
use std::process::ExitCode;

use beam_soliton_cli::commands::{self, Context};
use beam_soliton_cli::{CliError, RunConfig};
use clap::{Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(version, about = "Find and verify travelling solitons of the nonlinear beam equation", long_about = None)]
struct Cli {
    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Overrides `output_dir`.
    #[arg(long, global = true, value_name = "DIR")]
    output: Option<PathBuf>,
    /// Overrides `seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,
    /// Progress on stderr.
    #[arg(long, global = true)]
    verbose: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check positivity, nondegeneracy and hylomorphy of the potential.
    CheckPotential,
    /// Scan E/|C| over scaled bumps.
    LambdaBounds,
    /// Minimize J for each configured delta and save the profiles.
    FindSoliton,
    /// Evolve a saved profile and check that it travels unchanged.
    Evolve {
        #[arg(long, value_name = "PATH")]
        snapshot: PathBuf,
    },
    /// Evolve perturbed copies of a saved profile.
    Stability {
        #[arg(long, value_name = "PATH")]
        snapshot: PathBuf,
    },
}

fn run(cli: Cli) -> Result<commands::Outcome, CliError> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = cli.output {
        config.output_dir = dir;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    let ctx = Context::new(config, cli.verbose);
    match cli.command {
        Command::CheckPotential => commands::check_potential(&ctx),
        Command::LambdaBounds => commands::lambda_bounds(&ctx),
        Command::FindSoliton => commands::find_soliton(&ctx),
        Command::Evolve { snapshot } => commands::evolve(&ctx, &snapshot),
        Command::Stability { snapshot } => commands::stability(&ctx, &snapshot),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(outcome) => {
            print!("{}", outcome.report);
            ExitCode::from(outcome.code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
