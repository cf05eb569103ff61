use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, ValueEnum};

use qball_cli::{run, RunConfig, Subcommand};

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Command {
    CheckPotential,
    Hylomorphy,
    Solve,
    Evolve,
    Threshold,
    All,
}

impl From<Command> for Subcommand {
    fn from(c: Command) -> Self {
        match c {
            Command::CheckPotential => Subcommand::CheckPotential,
            Command::Hylomorphy => Subcommand::Hylomorphy,
            Command::Solve => Subcommand::Solve,
            Command::Evolve => Subcommand::Evolve,
            Command::Threshold => Subcommand::Threshold,
            Command::All => Subcommand::All,
        }
    }
}

/// Charged Q-ball laboratory.
#[derive(Debug, Parser)]
#[command(name = "qball", version)]
struct Cli {
    /// Subcommand to run.
    #[arg(value_enum)]
    command: Command,
    /// Configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding `run.out`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads, overriding `run.workers`.
    #[arg(long)]
    workers: Option<usize>,
    /// Noise seed, overriding `run.seed`.
    #[arg(long)]
    seed: Option<u64>,
}

fn config_failure(subcommand: &str, operation: &str, message: &str) -> ExitCode {
    eprint!(
        "status=failed\nsubcommand={subcommand}\nmodule=cli\noperation={operation}\nmessage={}\n",
        message.replace('\n', " ")
    );
    ExitCode::from(2)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let sub: Subcommand = cli.command.into();
    let name = sub.name();
    let mut cfg = match RunConfig::from_path(&cli.config) {
        Ok(c) => c,
        Err(e) => return config_failure(name, "parse_config", &e.to_string()),
    };
    if let Some(out) = cli.out {
        cfg.run.out = out;
    }
    if let Some(w) = cli.workers {
        cfg.run.workers = w;
    }
    if let Some(s) = cli.seed {
        cfg.run.seed = s;
    }
    if let Err(e) = cfg.validate_run() {
        return config_failure(name, "parse_config", &e.to_string());
    }
    match run(sub, &cfg) {
        Ok(outcome) => {
            for line in &outcome.summary {
                println!("{line}");
            }
            println!("artifacts: {}", outcome.out_dir.display());
            match outcome.failure {
                None => ExitCode::SUCCESS,
                Some(f) => {
                    eprint!("{}", f.record(name));
                    ExitCode::from(1)
                }
            }
        }
        Err(e) => {
            eprint!("{}", e.record(name));
            ExitCode::from(1)
        }
    }
}
