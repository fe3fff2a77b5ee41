//! Command-line front end: training, evaluation, tampering detection, the
//! exact oracle and causal influence diagram queries.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};
use tamperlab::cid::DiagramKind;

pub const OUT_ENV: &str = "TAMPERLAB_OUT";

#[derive(Debug, Parser)]
#[command(name = "tamperlab", version, about = "User-tampering experiments for RL recommenders")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct GlobalArgs {
    /// JSON config: the environment document, optionally with `schedule`
    /// and `eval_episodes`
    #[arg(long, global = true, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Master seed, overriding the config
    #[arg(long, global = true, value_name = "N")]
    pub seed: Option<u64>,

    /// Output root; each run writes into <out>/<run-id>. TAMPERLAB_OUT
    /// takes precedence
    #[arg(long, global = true, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,

    /// Training episodes for `train` and `detect-tampering`, evaluation
    /// episodes per user for `evaluate`
    #[arg(long, global = true, value_name = "N")]
    pub episodes: Option<u64>,

    /// Name of the run directory [default: <command>-s<seed>]
    #[arg(long, global = true, value_name = "NAME")]
    pub run_id: Option<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a Q-learning recommender and write qtable.json
    Train,

    /// Evaluate a trained table against the random and bandit baselines
    Evaluate {
        /// Q-table written by `train`
        #[arg(long, value_name = "PATH")]
        qtable: PathBuf,

        /// Also evaluate the users that were not part of training
        #[arg(long)]
        unseen: bool,
    },

    /// Train with and without polarisation and compare the two policies
    DetectTampering {
        /// Evaluation episodes per user used to collect visited states
        #[arg(long, value_name = "N")]
        eval_episodes: Option<u64>,

        /// Give the counterfactual run its own exploration randomness
        #[arg(long)]
        independent_exploration: bool,

        /// Also report phase metrics for the unseen users
        #[arg(long)]
        unseen: bool,
    },

    /// Solve a small single-user world exactly and dump the optimal policy
    Oracle {
        /// User to solve for [default: first user of --config, else moderate-left]
        #[arg(long)]
        profile: Option<String>,

        /// Episode length [default: 6 without --config]
        #[arg(long)]
        horizon: Option<u32>,

        /// Fixed polarisation factor [default: 1.055 without --config]
        #[arg(long)]
        p: Option<f64>,
    },

    /// Build a causal influence diagram and report its incentives
    Cid {
        /// naive, extended, observation or rf-tampering
        builder: DiagramKind,

        #[arg(long, default_value_t = 3)]
        timesteps: usize,
    },
}

/// Exit status of a run that parsed but failed.
#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl From<tamperlab::Error> for Failure {
    fn from(e: tamperlab::Error) -> Self {
        Failure::Runtime(e.into())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            if !e.use_stderr() {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            let text = e.render().to_string();
            if text.contains("Usage:") {
                eprint!("{text}");
            } else {
                eprintln!("{}\n{}", text.trim_end(), Cli::command().render_usage());
            }
            return ExitCode::from(1);
        }
    };
    match commands::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}\n\nUsage: tamperlab [OPTIONS] <COMMAND>\n\nFor more information, try '--help'.");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
