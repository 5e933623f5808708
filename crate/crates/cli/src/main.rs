use std::io;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use fracbvp::commands::{self, Overrides};
use fracbvp::exit;

/// Green's functions, fixed-point certificates and Picard solves for
/// three-point fractional boundary value problems.
#[derive(Debug, Parser)]
#[command(name = "fracbvp", version)]
struct Cli {
    /// Override solver.grid_size (number of quadrature nodes).
    #[arg(long, global = true, value_name = "N")]
    grid: Option<usize>,
    /// Override solver.tol (on the squared b-metric scale).
    #[arg(long, global = true, value_name = "X")]
    tol: Option<f64>,
    /// Override solver.max_iter.
    #[arg(long, global = true, value_name = "N")]
    max_iter: Option<usize>,
    /// Print structured JSON instead of tables.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate the certificate for the configured mode.
    Check { config: PathBuf },
    /// Run Picard iteration and write `t,u` to a CSV file.
    Solve {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Tabulate the Green's function on a uniform grid.
    Green {
        config: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[arg(long, default_value_t = 101)]
        resolution: usize,
    },
    /// Recompute the published constants of the two bundled examples.
    VerifyPaper,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { exit::CONFIG } else { exit::SUCCESS });
        }
    };
    let overrides = Overrides { grid: cli.grid, tol: cli.tol, max_iter: cli.max_iter };
    let mut out = io::stdout().lock();
    let result = match &cli.command {
        Command::Check { config } => commands::check(config, overrides, cli.json, &mut out),
        Command::Solve { config, output } => commands::solve(config, output, overrides, cli.json, &mut out),
        Command::Green { config, output, resolution } => commands::green(config, output, *resolution, &mut out),
        Command::VerifyPaper => commands::verify_paper(cli.json, &mut out),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
