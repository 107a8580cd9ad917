//! Inputs shared across experiments: benchmark tables, splits and the
//! detector used by the twin studies.

use cybertwin::datasets::synthetic::{
    build_benchmark, flood_scenario, windows_of, Benchmark, RawBundle,
};
use cybertwin::datasets::{load_csv, split, SchemaMapping, SplitSpec};
use cybertwin::detection::{LabelSource, MlpConfig, PsConfig, PsPipeline};
use cybertwin::FeatureTable;

use crate::config::Config;
use crate::CliError;

pub struct Datasets {
    pub benchmark: Benchmark,
    /// True when built from user-supplied files.
    pub real: bool,
}

pub fn mapping(cfg: &Config) -> Result<SchemaMapping, CliError> {
    match &cfg.data.mapping {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
            SchemaMapping::parse(&text).map_err(|e| CliError::Config(e.to_string()))
        }
        None => Ok(SchemaMapping::bundled()),
    }
}

pub fn load_datasets(cfg: &Config) -> Result<Datasets, CliError> {
    let mapping = mapping(cfg)?;
    let speeds = (cfg.data.rf_speeds[0], cfg.data.rf_speeds[1]);
    let (raw, real) = match (&cfg.data.rf_jamming, &cfg.data.ton_iot) {
        (Some([a, b]), Some(t)) => (
            RawBundle {
                rf_a: load_csv(a)?,
                rf_b: load_csv(b)?,
                ton: load_csv(t)?,
            },
            true,
        ),
        _ => (RawBundle::generate(&cfg.synthetic())?, false),
    };
    Ok(Datasets {
        benchmark: build_benchmark(&raw, speeds, &mapping, cfg.seed)?,
        real,
    })
}

pub struct Splits {
    pub train: FeatureTable,
    pub validation: FeatureTable,
    pub test: FeatureTable,
}

pub fn split_table(cfg: &Config, table: &FeatureTable) -> Result<Splits, CliError> {
    let s = cfg.detect_bench.split;
    let spec = SplitSpec::new(s.train, s.validation, s.test, true, cfg.seed);
    let (train, validation, test) = split(table, &spec)?;
    Ok(Splits {
        train,
        validation,
        test,
    })
}

pub fn ps_config(cfg: &Config, label_source: LabelSource) -> PsConfig {
    let ps = cfg.detect_bench.ps;
    PsConfig {
        k: ps.k,
        mlp: MlpConfig {
            hidden: ps.hidden,
            learning_rate: ps.learning_rate,
            ..MlpConfig::default()
        },
        epochs: ps.epochs,
        label_source,
        seed: cfg.seed,
    }
}

/// PS detector trained on the Dataset-2 train/validation split with the
/// configured main label source. Serves the twin and resource studies.
pub fn twin_detector(cfg: &Config, data: &Datasets) -> Result<PsPipeline, CliError> {
    let s = split_table(cfg, &data.benchmark.dataset2)?;
    Ok(PsPipeline::fit(
        &s.train,
        &s.validation,
        &ps_config(cfg, cfg.detect_bench.ps.label_source),
    )?)
}

/// Time-ordered RSU stream for the twin studies: a fresh flooding
/// realisation projected onto the Dataset-2 columns. With real files, the
/// Dataset-2 test split stands in.
pub fn evaluation_stream(cfg: &Config, data: &Datasets) -> Result<FeatureTable, CliError> {
    let columns = data.benchmark.dataset2.column_names().to_vec();
    if data.real {
        return Ok(split_table(cfg, &data.benchmark.dataset2)?.test);
    }
    let windows = windows_of(&flood_scenario(&cfg.synthetic(), 1))?;
    Ok(windows.select_columns_by_name(&columns)?)
}
