use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use spd::{load_config, run, thread_count, Command, Overrides};

/// Straight-line finger and gripper analysis.
#[derive(Debug, Parser)]
#[command(name = "spd", version)]
struct Cli {
    command: Command,
    /// JSON config file.
    #[arg(long)]
    config: PathBuf,
    /// Output directory (default: `run.out_dir`, then `out`).
    #[arg(long)]
    out: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    /// Also write an SVG plot.
    #[arg(long)]
    svg: bool,
    /// Read angle inputs as degrees.
    #[arg(long)]
    deg: bool,
    /// Grid intervals.
    #[arg(long)]
    steps: Option<usize>,
    /// Monte Carlo sample count.
    #[arg(long)]
    samples: Option<usize>,
    /// Upper end of the crank-angle grid.
    #[arg(long, allow_negative_numbers = true)]
    theta_max: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let overrides = Overrides {
        command: Some(cli.command),
        out_dir: cli.out,
        seed: cli.seed,
        svg: cli.svg,
        deg: cli.deg,
        steps: cli.steps,
        samples: cli.samples,
        theta_max: cli.theta_max,
    };
    let result = load_config(&cli.config, &overrides)
        .map_err(spd::CliError::from)
        .and_then(|cfg| run(&cfg, cli.command, thread_count()));
    match result {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("spd: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
