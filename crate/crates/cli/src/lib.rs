//! Command-line front end for `expot`: generation, solving, verification,
//! benchmark sweeps and the circulation tools.

pub mod commands;
pub mod formats;

use std::path::PathBuf;

use clap::{Parser, Subcommand};
use thiserror::Error;

use commands::{BenchArgs, GenArgs, Mode, SolveArgs, VerifyArgs};

/// Why a command failed; each variant maps to a fixed exit status.
#[derive(Debug, Error)]
pub enum Failure {
    #[error("{0:#}")]
    Input(anyhow::Error),
    #[error("{0:#}")]
    Solver(anyhow::Error),
    #[error("verification failed:\n  {}", .0.join("\n  "))]
    Verify(Vec<String>),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Input(_) => 1,
            Failure::Solver(_) => 2,
            Failure::Verify(_) => 3,
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "expot",
    version,
    about = "Integral optimal transport by Sinkhorn scaling with regularization doubling"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write a seeded random integral instance.
    Gen {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        cost_max: u64,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        marg_max: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Solve an instance file and report cost, iterations and the gap bound.
    Solve {
        input: PathBuf,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
        #[arg(long, value_enum, default_value_t = Mode::Expsinkhorn)]
        mode: Mode,
        /// CSV trace of every scaling step.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Plan file to write.
        #[arg(long, short)]
        output: Option<PathBuf>,
        #[arg(long)]
        max_iters: Option<usize>,
        /// Scale fractional marginals by this denominator and round.
        #[arg(long)]
        rationalize: Option<u64>,
    },
    /// Check a plan (or a fresh solve with --self) against the exact optimum.
    Verify {
        input: PathBuf,
        plan: Option<PathBuf>,
        #[arg(long = "self", conflicts_with = "plan")]
        solve_self: bool,
        #[arg(long, default_value_t = 1e-3)]
        epsilon: f64,
    },
    /// Sweep epsilon and mode over seeded instances and report medians.
    Bench {
        #[arg(long, value_delimiter = ',', default_values_t = [1e-1, 1e-2, 1e-3])]
        eps_list: Vec<f64>,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [Mode::Expsinkhorn])]
        modes: Vec<Mode>,
        #[arg(long, value_delimiter = ',', default_values_t = [0u64])]
        seeds: Vec<u64>,
        /// Fixed instance instead of generated ones.
        #[arg(long)]
        input: Option<PathBuf>,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
        m: u64,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        cost_max: u64,
        #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
        marg_max: u64,
        #[arg(long)]
        max_iters: Option<usize>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Minimum-cost circulation tools on DIMACS-style files.
    Mcc {
        #[command(subcommand)]
        action: MccAction,
    },
}

#[derive(Debug, Subcommand)]
pub enum MccAction {
    /// Solve exactly and write the circulation.
    Solve {
        input: PathBuf,
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Write the equivalent transport instance.
    Reduce {
        input: PathBuf,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Runs a parsed command, appending its standard output to `out`.
pub fn run(cli: Cli, out: &mut String) -> Result<(), Failure> {
    match cli.command {
        Command::Gen {
            n,
            m,
            cost_max,
            marg_max,
            seed,
            output,
        } => commands::cmd_gen(
            &GenArgs {
                n: n as usize,
                m: m as usize,
                cost_max,
                marg_max,
                seed,
                output,
            },
            out,
        ),
        Command::Solve {
            input,
            epsilon,
            mode,
            trace,
            output,
            max_iters,
            rationalize,
        } => commands::cmd_solve(
            &SolveArgs {
                input,
                epsilon,
                mode,
                trace,
                output,
                max_iters,
                rationalize,
            },
            out,
        ),
        Command::Verify {
            input,
            plan,
            solve_self,
            epsilon,
        } => commands::cmd_verify(
            &VerifyArgs {
                input,
                plan,
                solve_self,
                epsilon,
            },
            out,
        ),
        Command::Bench {
            eps_list,
            modes,
            seeds,
            input,
            n,
            m,
            cost_max,
            marg_max,
            max_iters,
            output,
        } => commands::cmd_bench(
            &BenchArgs {
                eps_list,
                modes,
                seeds,
                input,
                n: n as usize,
                m: m as usize,
                cost_max,
                marg_max,
                max_iters,
                output,
            },
            out,
        ),
        Command::Mcc { action } => match action {
            MccAction::Solve { input, epsilon, output } => {
                commands::cmd_mcc_solve(&input, epsilon, output.as_deref(), out)
            }
            MccAction::Reduce { input, output } => commands::cmd_mcc_reduce(&input, output.as_deref(), out),
        },
    }
}
