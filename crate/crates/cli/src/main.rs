//! `rankflow`: simulate the ranking process, solve its limit and compare them.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(
    name = "rankflow",
    version,
    about = "Stochastic ranking process simulator and limit solver"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model and print its certified rate bound.
    Validate(Common),
    /// Run one N-particle simulation.
    Simulate(Common),
    /// Solve the limit and write the fields.
    Solve(Common),
    /// Integrate the limiting tagged-particle paths.
    Tagged(Common),
    /// Convergence study over the N and seed lists.
    Study(Common),
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Experiment file with sections {model, simulate, solve, study}.
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Output directory.
    #[arg(long, value_name = "DIR", default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed (for `study`, runs that single seed).
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; 1 runs sequentially.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Solver grid as `M,K`.
    #[arg(long, value_name = "M,K", value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
}

fn parse_grid(s: &str) -> Result<(usize, usize), String> {
    let (m, k) = s.split_once(',').ok_or("expected M,K")?;
    let parse = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((parse(m)?, parse(k)?))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Validate(c) => commands::validate(&c),
        Command::Simulate(c) => commands::simulate(&c),
        Command::Solve(c) => commands::solve(&c),
        Command::Tagged(c) => commands::tagged(&c),
        Command::Study(c) => commands::study(&c),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
