//! Where detection work lands. Without a twin the RSU classifies every
//! window; with a twin the RSU only forwards and the twin classifies the
//! mirrored windows. Cost is rows processed times inference
//! multiply-accumulates per row.

use cybertwin::twinning::TwinConfig;

use super::common::{evaluation_stream, load_datasets, twin_detector};
use super::twinning::{direct_detect, twin_detect};
use crate::config::Config;
use crate::report::{f6, Report};
use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct ResourceRow {
    pub mode: &'static str,
    pub gamma: Option<f64>,
    pub rsu_rows: u64,
    pub rsu_cost: u64,
    pub twin_rows: u64,
    pub twin_cost: u64,
    pub twin_ram_bytes: u64,
    pub detection_rate: f64,
}

pub fn run(cfg: &Config) -> Result<Vec<ResourceRow>, CliError> {
    let data = load_datasets(cfg)?;
    let ps = twin_detector(cfg, &data)?;
    let stream = evaluation_stream(cfg, &data)?;
    let ops = ps.inference_ops();
    let n = stream.n_rows() as u64;

    let without = ResourceRow {
        mode: "without_twin",
        gamma: None,
        rsu_rows: n,
        rsu_cost: n * ops,
        twin_rows: 0,
        twin_cost: 0,
        twin_ram_bytes: 0,
        detection_rate: direct_detect(&ps, &stream)?.detection_rate,
    };
    let config = TwinConfig {
        gamma: cfg.resource.gamma,
        sampling: cfg.resource.sampling,
        seed: cfg.seed,
    };
    let run = twin_detect(&ps, &stream, cfg.data.synthetic.window, &config)?;
    let with = ResourceRow {
        mode: "with_twin",
        gamma: Some(config.gamma),
        rsu_rows: 0,
        rsu_cost: 0,
        twin_rows: run.twin.taken,
        twin_cost: run.twin.taken * ops,
        twin_ram_bytes: run.twin.ram_bytes,
        detection_rate: run.report.detection_rate,
    };
    Ok(vec![without, with])
}

pub fn report(rows: &[ResourceRow]) -> Report {
    let mut r = Report::new(&[
        "mode",
        "gamma",
        "rsu_rows",
        "rsu_cost",
        "twin_rows",
        "twin_cost",
        "twin_ram_bytes",
        "detection_rate",
    ]);
    for row in rows {
        r.push(vec![
            row.mode.to_string(),
            row.gamma.map(f6).unwrap_or_default(),
            row.rsu_rows.to_string(),
            row.rsu_cost.to_string(),
            row.twin_rows.to_string(),
            row.twin_cost.to_string(),
            row.twin_ram_bytes.to_string(),
            f6(row.detection_rate),
        ]);
    }
    r
}
