//! `nonlocality-forge`: robustness quantifiers, certificate games and
//! verification suites from the command line.
//!
//! Exit codes: 0 success, 1 computational or assertion failure, 2 input error.

mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nonlocality_forge::suites::Suite;

use crate::output::Failure;

const THREADS_VAR: &str = "NONLOCALITY_FORGE_THREADS";

#[derive(Parser)]
#[command(name = "nonlocality-forge", version, about = "Robustness of Buscemi nonlocality, teleportation and entanglement")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
pub struct SolveFlags {
    /// Solver tolerance, within [1e-10, 1e-4].
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Report file. The report goes to stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write the conic program before solving.
    #[arg(long, value_name = "FILE")]
    pub dump_program: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// RoBN of a distributed measurement.
    Robn {
        #[arg(long, value_name = "FILE", required_unless_present = "alice", conflicts_with_all = ["alice", "bob", "state"])]
        measurement: Option<PathBuf>,
        /// Alice's POVM on [A, A′].
        #[arg(long, value_name = "FILE", requires_all = ["bob", "state"])]
        alice: Option<PathBuf>,
        /// Bob's POVM on [B′, B].
        #[arg(long, value_name = "FILE", requires_all = ["alice", "state"])]
        bob: Option<PathBuf>,
        /// Shared state on [A′, B′].
        #[arg(long, value_name = "FILE", requires_all = ["alice", "bob"])]
        state: Option<PathBuf>,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// RoE of a bipartite state.
    Roe {
        #[arg(long, value_name = "FILE")]
        state: PathBuf,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// RoT of a teleportation instrument.
    Rot {
        #[arg(long, value_name = "FILE")]
        instrument: PathBuf,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// RoBN of the Bell/Bell measurement on a state, next to its RoE.
    RobnState {
        #[arg(long, value_name = "FILE")]
        state: PathBuf,
        /// Alternating POVM re-optimization rounds.
        #[arg(long, default_value_t = 0)]
        seesaw_rounds: usize,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Discrimination game read off the RoBN certificate.
    Game {
        #[arg(long, value_name = "FILE")]
        measurement: PathBuf,
        /// Write the certificate ensemble here.
        #[arg(long, value_name = "FILE")]
        emit_ensemble: Option<PathBuf>,
        /// Compute quantum and classical scores.
        #[arg(long)]
        scores: bool,
        #[command(flatten)]
        flags: SolveFlags,
    },
    /// Run a verification suite.
    Verify {
        #[arg(long)]
        suite: Suite,
        #[arg(long, default_value_t = 10)]
        seeds: usize,
        /// Local dimension d of the seeded instances.
        #[arg(long, default_value_t = 2)]
        dims: usize,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Where counterexamples of failed cases are written.
        #[arg(long, value_name = "DIR", default_value = "counterexamples")]
        counterexample_dir: PathBuf,
    },
    /// Write the bundled fixture documents.
    Fixtures {
        #[arg(long, value_name = "DIR", default_value = "fixtures")]
        dir: PathBuf,
    },
}

fn configure_threads() -> Result<(), Failure> {
    let Ok(raw) = std::env::var(THREADS_VAR) else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Failure::Input(format!("{THREADS_VAR} must be a positive integer, got {raw:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Computation(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<(), Failure> {
    configure_threads()?;
    match cli.command {
        Command::Robn { measurement, alice, bob, state, flags } => {
            let source = match (measurement, alice, bob, state) {
                (Some(m), ..) => commands::MeasurementSource::File(m),
                (None, Some(a), Some(b), Some(s)) => commands::MeasurementSource::Parts { alice: a, bob: b, state: s },
                _ => return Err(Failure::Input("give --measurement or all of --alice, --bob, --state".into())),
            };
            commands::robn(&source, &flags)
        }
        Command::Roe { state, flags } => commands::roe(&state, &flags),
        Command::Rot { instrument, flags } => commands::rot(&instrument, &flags),
        Command::RobnState { state, seesaw_rounds, flags } => commands::robn_state(&state, seesaw_rounds, &flags),
        Command::Game { measurement, emit_ensemble, scores, flags } => {
            commands::game(&measurement, emit_ensemble.as_deref(), scores, &flags)
        }
        Command::Verify { suite, seeds, dims, tol, out, counterexample_dir } => {
            commands::verify(suite, seeds, dims, tol, out.as_deref(), &counterexample_dir)
        }
        Command::Fixtures { dir } => commands::fixtures(&dir),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message());
            ExitCode::from(f.code())
        }
    }
}
