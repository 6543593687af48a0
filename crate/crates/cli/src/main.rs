//! Command line for running demo elections with second-device ballot audit:
//! setup, cast, audit, tally, board verification, attack-scenario replays,
//! and the operation-count benchmark.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

mod commands;
mod config;
mod state;

use config::GroupArg;

#[derive(Parser)]
#[command(name = "castaudit", version, about = "Second-device ballot audit toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Create an election directory from a config file.
    Setup {
        /// Flat key=value config file.
        #[arg(long)]
        config: PathBuf,
        /// Election directory to create.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Override the group named in the config.
        #[arg(long, value_enum)]
        group: Option<GroupArg>,
    },
    /// Cast a ballot: encrypt, submit, and write the QR payload file.
    Cast {
        #[arg(long)]
        dir: PathBuf,
        /// Voter index.
        #[arg(long)]
        voter: u64,
        /// Ballot entries, comma separated for multi-entry ballots.
        #[arg(long)]
        vote: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Audit a cast ballot with the second device.
    Audit {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long)]
        voter: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// QR payload file (defaults to the one written by cast).
        #[arg(long)]
        payload: Option<PathBuf>,
    },
    /// Decrypt the board and count votes (demo tally).
    Tally {
        #[arg(long)]
        dir: PathBuf,
    },
    /// Re-verify every board record signature and the append-only chain.
    VerifyBoard {
        #[arg(long)]
        dir: PathBuf,
        /// Board export to verify (defaults to the directory's board).
        #[arg(long)]
        board: Option<PathBuf>,
    },
    /// Run a named multi-party scenario, honest or adversarial.
    Scenario {
        #[arg(long)]
        scenario: String,
        #[arg(long, value_enum, default_value = "tiny")]
        group: GroupArg,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Run over a local socket instead of in process.
        #[arg(long)]
        socket: bool,
        /// Also write the report to this path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Assert the audit operation counts and report timings.
    Bench {
        /// Group for the timing table (counts always cover the tiny group).
        #[arg(long, value_enum)]
        group: Option<GroupArg>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Setup { config, out, seed, group } => {
            commands::cmd_setup(&config, &out, seed, group)
        }
        Command::Cast { dir, voter, vote, seed } => commands::cmd_cast(&dir, voter, &vote, seed),
        Command::Audit { dir, voter, seed, payload } => {
            commands::cmd_audit(&dir, voter, seed, payload.as_deref())
        }
        Command::Tally { dir } => commands::cmd_tally(&dir),
        Command::VerifyBoard { dir, board } => commands::cmd_verify_board(&dir, board.as_deref()),
        Command::Scenario { scenario, group, seed, socket, out } => {
            commands::cmd_scenario(&scenario, group, seed, socket, out.as_deref())
        }
        Command::Bench { group, seed } => commands::cmd_bench(group, seed),
    };
    match outcome {
        Ok(outcome) => {
            println!("{}", serde_json::to_string_pretty(&outcome.report).expect("report serializes"));
            ExitCode::from(u8::try_from(outcome.exit).unwrap_or(1))
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
