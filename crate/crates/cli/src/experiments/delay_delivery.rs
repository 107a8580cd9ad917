//! Detection in the serving loop: each packet's service is lengthened by
//! the detector's per-row inference cost. Costs are multiply-accumulate
//! counts times a fixed seconds-per-op constant, so results do not depend
//! on the host machine.

use rayon::prelude::*;

use cybertwin::detection::{MlpConfig, MlpModel, PsConfig};
use cybertwin::sim::{run as simulate, Scenario};

use crate::config::Config;
use crate::report::{f6, Report};
use crate::CliError;

pub const METHODS: [&str; 3] = ["PS", "KNN", "SVM"];

#[derive(Debug, Clone, PartialEq)]
pub struct DelayRow {
    pub method: &'static str,
    pub lifetime: f64,
    pub ops_per_row: u64,
    pub service_overhead: f64,
    pub mean_delay: f64,
    pub delivery_rate: f64,
    pub completed: usize,
    pub dropped: usize,
}

/// Multiply-accumulates per classified row.
pub fn ops_per_row(cfg: &Config, method: &str) -> u64 {
    let dd = &cfg.delay_delivery;
    let d = dd.features as u64;
    match method {
        "PS" => {
            let k = PsConfig {
                k: cfg.detect_bench.ps.k,
                ..PsConfig::default()
            }
            .resolved_k(dd.features);
            let mlp = MlpConfig {
                hidden: cfg.detect_bench.ps.hidden,
                ..MlpConfig::default()
            };
            MlpModel::zeros(k, &mlp).inference_ops()
        }
        // One distance per stored row.
        "KNN" => dd.reference_rows as u64 * d,
        // One dot product.
        "SVM" => d,
        other => unreachable!("unknown method {other}"),
    }
}

pub fn run(cfg: &Config) -> Result<Vec<DelayRow>, CliError> {
    let dd = &cfg.delay_delivery;
    let jobs: Vec<(&'static str, f64)> = METHODS
        .iter()
        .flat_map(|m| dd.lifetimes.iter().map(move |l| (*m, *l)))
        .collect();
    jobs.par_iter()
        .map(|&(method, lifetime)| {
            let ops = ops_per_row(cfg, method);
            let overhead = ops as f64 * dd.seconds_per_op;
            // Same seed everywhere: common random numbers across the grid.
            let mut sc = Scenario::new(dd.params, dd.duration, cfg.seed);
            sc.message_lifetime = lifetime.is_finite().then_some(lifetime);
            sc.service_overhead = overhead;
            let trace = simulate(&sc)?;
            Ok(DelayRow {
                method,
                lifetime,
                ops_per_row: ops,
                service_overhead: overhead,
                mean_delay: trace.stats.mean_delay,
                delivery_rate: trace.stats.delivery_rate,
                completed: trace.stats.completed,
                dropped: trace.stats.dropped,
            })
        })
        .collect()
}

pub fn report(rows: &[DelayRow]) -> Report {
    let mut r = Report::new(&[
        "method",
        "lifetime",
        "ops_per_row",
        "service_overhead",
        "mean_delay",
        "delivery_rate",
        "completed",
        "dropped",
    ]);
    for row in rows {
        r.push(vec![
            row.method.to_string(),
            f6(row.lifetime),
            row.ops_per_row.to_string(),
            f6(row.service_overhead),
            f6(row.mean_delay),
            f6(row.delivery_rate),
            row.completed.to_string(),
            row.dropped.to_string(),
        ]);
    }
    r
}
