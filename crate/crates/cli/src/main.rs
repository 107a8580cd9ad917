use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cybertwin_cli::config::{Config, Experiment};
use cybertwin_cli::{execute, CliError};

#[derive(Parser)]
#[command(name = "cybertwin", version, about = "Cyber-twin RSU experiments")]
struct Cli {
    /// TOML configuration file; defaults apply to every missing key.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Analytical M/M/m metrics against the simulator.
    QueueValidate,
    /// One simulator run: packet trace, windows and summary.
    Simulate,
    /// PS, KNN and SVM on both benchmark datasets.
    DetectBench,
    /// Mean delay and delivery rate per detector and message lifetime.
    DelayDelivery,
    /// Twin-side detection rate and memory across twinning rates.
    TwinningSweep,
    /// Detection cost with and without the twin.
    Resource,
    /// The experiment named by `experiment` in the config file.
    Run,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(paths) => {
            for p in paths {
                println!("{}", p.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    let experiment = match cli.command {
        Command::QueueValidate => Experiment::QueueValidate,
        Command::Simulate => Experiment::Simulate,
        Command::DetectBench => Experiment::DetectBench,
        Command::DelayDelivery => Experiment::DelayDelivery,
        Command::TwinningSweep => Experiment::TwinningSweep,
        Command::Resource => Experiment::Resource,
        Command::Run => cfg
            .experiment
            .ok_or_else(|| CliError::Config("`run` needs `experiment` in the config".into()))?,
    };
    execute(experiment, &cfg)
}
