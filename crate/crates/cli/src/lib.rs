//! Experiment harness: configuration, the experiment runners and CSV
//! reporting. The `cybertwin` binary is a thin clap front end over
//! [`execute`].

pub mod config;
pub mod experiments;
pub mod report;

use std::path::PathBuf;

use cybertwin::datasets::DatasetError;
use cybertwin::detection::DetectionError;
use cybertwin::queueing::QueueError;
use cybertwin::sim::SimError;
use cybertwin::twinning::TwinError;
use cybertwin::TableError;

use config::{Config, Experiment};
use report::Meta;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data error: {0}")]
    Data(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Data(_) => 3,
            CliError::Io(_) => 1,
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io(e) => CliError::Io(e),
            DatasetError::InvalidSplit(_) | DatasetError::Mapping(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<DetectionError> for CliError {
    fn from(e: DetectionError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<TableError> for CliError {
    fn from(e: TableError) -> Self {
        CliError::Data(e.to_string())
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidScenario(_) | SimError::InvalidWindow(_) => {
                CliError::Config(e.to_string())
            }
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<TwinError> for CliError {
    fn from(e: TwinError) -> Self {
        match e {
            TwinError::InvalidConfig(_) => CliError::Config(e.to_string()),
            TwinError::Io(e) => CliError::Io(e),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<QueueError> for CliError {
    fn from(e: QueueError) -> Self {
        CliError::Config(e.to_string())
    }
}

/// Validates `cfg`, runs `experiment` and writes its CSVs under `cfg.out`.
/// Returns the written paths.
pub fn execute(experiment: Experiment, cfg: &Config) -> Result<Vec<PathBuf>, CliError> {
    use experiments::*;

    cfg.validate()?;
    let meta = Meta {
        experiment: experiment.as_str().to_string(),
        seed: cfg.seed,
        config_hash: cfg.hash(),
    };
    let out = &cfg.out;
    match experiment {
        Experiment::QueueValidate => {
            let rows = queue_validate::run(cfg)?;
            Ok(vec![queue_validate::report(&rows).write(
                &meta,
                out,
                "queue_validate.csv",
            )?])
        }
        Experiment::Simulate => simulate::write(&simulate::run(cfg)?, &meta, cfg),
        Experiment::DetectBench => detect_bench::write(&detect_bench::run(cfg)?, &meta, cfg),
        Experiment::DelayDelivery => {
            let rows = delay_delivery::run(cfg)?;
            Ok(vec![delay_delivery::report(&rows).write(
                &meta,
                out,
                "delay_delivery.csv",
            )?])
        }
        Experiment::TwinningSweep => {
            let sweep = twinning::run(cfg)?;
            Ok(vec![
                twinning::report(&sweep).write(&meta, out, "twinning_sweep.csv")?,
                twinning::summary(&sweep).write(&meta, out, "twinning_sweep_summary.csv")?,
            ])
        }
        Experiment::Resource => {
            let rows = resource::run(cfg)?;
            Ok(vec![resource::report(&rows).write(
                &meta,
                out,
                "resource.csv",
            )?])
        }
    }
}
