use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use averager_cli::{run, Command, Options, RunConfig};
use clap::{Parser, Subcommand};

/// Averaging analysis of the zero-Hopf bifurcation in the jerk system.
#[derive(Parser, Debug)]
#[command(name = "averager", version)]
struct Cli {
    /// TOML run configuration; defaults to the three-orbit case at eps = 0.1.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory, overriding `output_dir` from the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Suppress the human-readable report.
    #[arg(long, global = true)]
    quiet: bool,
    /// Print the machine-readable summary to stdout.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand, Debug, Clone, Copy)]
enum Cmd {
    /// Equilibria, zero-Hopf verdict, orbit case and predicted averaged roots.
    Classify,
    /// Numeric averaged functions against their closed forms on a grid.
    Average,
    /// Periodic orbits of the full system for each eps, with trace files.
    Orbits,
    /// Warm-started eps sweep with scaling fits.
    Sweep,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let level = if cli.quiet { "error" } else { "warn" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();

    let command = match cli.command {
        Cmd::Classify => Command::Classify,
        Cmd::Average => Command::Average,
        Cmd::Orbits => Command::Orbits,
        Cmd::Sweep => Command::Sweep,
    };
    let opts = Options { out: cli.out, json: cli.json, quiet: cli.quiet };
    let result = cli
        .config
        .as_deref()
        .map_or_else(|| Ok(RunConfig::default()), RunConfig::load)
        .and_then(|cfg| run(command, &cfg, &opts));
    match result {
        Ok(output) => {
            print!("{}", output.stdout);
            let _ = std::io::stdout().flush();
            match output.failure {
                Some(e) => {
                    eprintln!("averager {}: {e}", command.name());
                    ExitCode::from(e.exit_code())
                }
                None => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("averager {}: {e}", command.name());
            ExitCode::from(e.exit_code())
        }
    }
}
