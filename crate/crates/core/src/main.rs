use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use impulse_control::harness;

#[derive(Parser)]
#[command(name = "impulse-control", version, about = "Sparse-in-time optimal control of the heat equation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the control problem at the configured resolution.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Convergence ladder against a finer reference solution.
    Rates {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ladder: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// State and adjoint solver errors against a manufactured solution.
    VerifyState {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        ladder: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Support of the optimal control over a list of α values.
    Sparsity {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        /// read the α values as fractions of α₀
        #[arg(long)]
        relative: bool,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (result, out) = match &cli.command {
        Command::Solve { config, out } => (harness::cmd_solve(config, out).map(|r| serde_json::to_string(&r)), out),
        Command::Rates { config, ladder, out } => {
            (harness::cmd_rates(config, ladder, out).map(|r| serde_json::to_string(&r.slopes)), out)
        }
        Command::VerifyState { config, ladder, out } => {
            (harness::cmd_verify_state(config, ladder, out).map(|r| serde_json::to_string(&r.slopes)), out)
        }
        Command::Sparsity { config, alphas, relative, out } => {
            (harness::cmd_sparsity(config, alphas, *relative, out).map(|r| serde_json::to_string(&r.rows)), out)
        }
    };
    match result {
        Ok(Ok(summary)) => {
            println!("{summary}");
            ExitCode::SUCCESS
        }
        Ok(Err(e)) => {
            eprintln!("{}", harness::write_error(Some(out), &e.into()));
            ExitCode::FAILURE
        }
        Err(e) => {
            eprintln!("{}", harness::write_error(Some(out), &e));
            ExitCode::FAILURE
        }
    }
}
