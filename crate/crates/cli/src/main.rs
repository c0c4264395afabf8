//! Command-line front end for the card-based graph shuffle protocols.

mod commands;
mod target;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use cardshuffle::machine::DEFAULT_CAP;
use clap::{Parser, Subcommand};

use commands::VerifyConfig;
use target::{ProtocolKind, Target};

#[derive(Parser)]
#[command(name = "cardshuffle", version, about = "Card-based graph shuffle protocols")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print degree data, |Aut0(G)| and protocol costs.
    Info {
        /// Graph file, `cycle N` or `dihedral N`.
        #[arg(required = true, num_args = 1..=2)]
        target: Vec<String>,
    },
    /// Execute a protocol once with random face-down inputs and print the trace.
    Run {
        /// Graph file, `cycle N` or `dihedral N`.
        #[arg(num_args = 0..=2, required_unless_present = "demo")]
        target: Vec<String>,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolKind>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replay the built-in five-vertex example with fixed choices.
        #[arg(long, conflicts_with_all = ["protocol", "seed"])]
        demo: bool,
    },
    /// Check the output distribution and the shuffle-protocol conditions.
    Verify {
        /// Graph file, `cycle N` or `dihedral N`.
        #[arg(required = true, num_args = 1..=2)]
        target: Vec<String>,
        #[arg(long, value_enum)]
        protocol: Option<ProtocolKind>,
        /// Enumerate every branch (the default).
        #[arg(long, conflicts_with = "samples")]
        exhaustive: bool,
        /// Sample this many runs instead of enumerating.
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        samples: Option<u64>,
        /// Maximum number of branches to enumerate.
        #[arg(long, default_value_t = DEFAULT_CAP, value_parser = clap::value_parser!(u64).range(1..))]
        cap: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Also write the report to this file.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Exit status for an error: resource limits get 3, everything else 2.
fn error_code(err: &anyhow::Error) -> u8 {
    let limit = err.chain().any(|e| {
        matches!(
            e.downcast_ref::<cardshuffle::Error>(),
            Some(cardshuffle::Error::CapExceeded { .. } | cardshuffle::Error::GroupTooLarge { .. })
        )
    });
    if limit {
        3
    } else {
        2
    }
}

fn dispatch(cli: Cli) -> Result<u8> {
    match cli.command {
        Command::Info { target } => {
            print!("{}", commands::info(&Target::parse(&target)?)?);
            Ok(0)
        }
        Command::Run { target, protocol, seed, demo } => {
            if demo {
                if !target.is_empty() {
                    anyhow::bail!("--demo takes no target");
                }
                print!("{}", commands::demo()?);
                return Ok(0);
            }
            let target = Target::parse(&target)?;
            let kind = protocol.unwrap_or_else(|| target.default_protocol());
            print!("{}", commands::run(&target, kind, seed)?);
            Ok(0)
        }
        Command::Verify { target, protocol, exhaustive: _, samples, cap, seed, out } => {
            let target = Target::parse(&target)?;
            let kind = protocol.unwrap_or_else(|| target.default_protocol());
            let outcome = commands::verify(&target, kind, &VerifyConfig { cap, samples, seed })?;
            print!("{}", outcome.text);
            if let Some(path) = out {
                std::fs::write(&path, &outcome.text).map_err(|e| anyhow::anyhow!("cannot write {}: {e}", path.display()))?;
            }
            Ok(u8::from(outcome.failed))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(error_code(&err))
        }
    }
}
