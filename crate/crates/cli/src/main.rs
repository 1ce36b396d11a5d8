use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use projdyn_cli::commands::{self, OutputPaths};
use projdyn_cli::config::{Overrides, RunConfig};
use projdyn_cli::error::CliError;

/// Simulate, project and verify homogeneous force fields.
///
/// Exit codes: 0 all checks pass, 1 a verification check failed,
/// 2 configuration error, 3 integration domain error.
#[derive(Parser)]
#[command(name = "projdyn", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// TOML run configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory; overrides `output.dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for generated instances; overrides `seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Relative tolerance of the integrator; overrides `integrator.rtol`.
    #[arg(long, global = true)]
    rtol: Option<f64>,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Integrate a configured problem.
    Simulate,
    /// Centrally project a free run onto a screen.
    Project,
    /// Run the verification battery.
    Verify,
    /// Run the Jacobi to Neumann correspondence chain.
    Correspond,
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    let mut cfg = match (&cli.config, cli.command) {
        (Some(path), _) => RunConfig::load(path)?,
        (None, Command::Verify) => RunConfig::default(),
        (None, _) => return Err(CliError::Config("--config is required".into())),
    };
    cfg.apply(Overrides {
        seed: cli.seed,
        rtol: cli.rtol,
    });
    let out = cli.out.as_deref();
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &OutputPaths::new(&cfg, out, "run")),
        Command::Project => commands::project(&cfg, &OutputPaths::new(&cfg, out, "projected")),
        Command::Verify => commands::verify(&cfg, &OutputPaths::new(&cfg, out, "verify")),
        Command::Correspond => commands::correspond(&cfg, &OutputPaths::new(&cfg, out, "correspond")),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("projdyn: {e}");
            e.into()
        }
    }
}
