//! A single configured simulator run and its exports.

use std::path::PathBuf;

use cybertwin::sim::{run as simulate, windowize, write_trace_csv, TraceLog};

use crate::config::Config;
use crate::report::{f6, Meta, Report};
use crate::CliError;

pub fn run(cfg: &Config) -> Result<TraceLog, CliError> {
    Ok(simulate(&cfg.simulate.scenario(cfg.seed))?)
}

/// Writes the packet trace, the windowed features and a one-row summary.
pub fn write(trace: &TraceLog, meta: &Meta, cfg: &Config) -> Result<Vec<PathBuf>, CliError> {
    let dir = &cfg.out;
    std::fs::create_dir_all(dir)?;
    let mut body = Vec::new();
    write_trace_csv(&trace.packets, &mut body)?;
    let trace_path = dir.join("simulate_trace.csv");
    std::fs::write(&trace_path, crate::report::with_meta(meta, &body))?;

    let windows = windowize(trace, trace.scenario.feature_window)?;
    let mut body = Vec::new();
    windows.write_csv(&mut body)?;
    let windows_path = dir.join("simulate_windows.csv");
    std::fs::write(&windows_path, crate::report::with_meta(meta, &body))?;

    let s = &trace.stats;
    let mut summary = Report::new(&[
        "packets",
        "completed",
        "dropped",
        "mean_wait",
        "mean_queue_len",
        "mean_delay",
        "delivery_rate",
        "attack_packets",
        "attack_windows",
    ]);
    summary.push(vec![
        trace.packets.len().to_string(),
        s.completed.to_string(),
        s.dropped.to_string(),
        f6(s.mean_wait),
        f6(s.mean_queue_len),
        f6(s.mean_delay),
        f6(s.delivery_rate),
        trace
            .packets
            .iter()
            .filter(|p| p.label.is_attack())
            .count()
            .to_string(),
        windows.attack_count().unwrap_or(0).to_string(),
    ]);
    let summary_path = summary.write(meta, dir, "simulate_summary.csv")?;
    Ok(vec![trace_path, windows_path, summary_path])
}
