//! Detection on the twin side. The detector sees only mirrored rows; a
//! source window that was not mirrored inherits the verdict of the latest
//! mirrored window before it, or benign when there is none.

use rayon::prelude::*;

use cybertwin::detection::{evaluate, DetectionReport, PsPipeline};
use cybertwin::twinning::{
    held_state_index, mirror, records_from_table, table_from_records, TwinConfig, TwinStream,
};
use cybertwin::{FeatureTable, Label};

use super::common::{evaluation_stream, load_datasets, twin_detector};
use crate::config::Config;
use crate::report::{f6, Report};
use crate::CliError;

pub const RSU_ID: &str = "rsu-0";

#[derive(Debug, Clone, PartialEq)]
pub struct TwinRun {
    pub twin: TwinStream,
    /// One verdict per source window.
    pub verdicts: Vec<Label>,
    /// Against the full ground truth of the source stream.
    pub report: DetectionReport,
}

/// Mirrors `stream` at `config` and scores twin-side detection.
pub fn twin_detect(
    ps: &PsPipeline,
    stream: &FeatureTable,
    window: f64,
    config: &TwinConfig,
) -> Result<TwinRun, CliError> {
    let twin = mirror(records_from_table(stream, RSU_ID, window), config)?;
    let mirrored = if twin.records.is_empty() {
        Vec::new()
    } else {
        ps.predict(&table_from_records(&twin.records)?)?
    };
    let verdicts: Vec<Label> = held_state_index(&twin, stream.n_rows())
        .into_iter()
        .map(|held| held.map_or(Label::Benign, |i| mirrored[i]))
        .collect();
    let report = evaluate(&verdicts, stream.require_labels()?)?;
    Ok(TwinRun {
        twin,
        verdicts,
        report,
    })
}

/// Detection on the full stream without a twin.
pub fn direct_detect(ps: &PsPipeline, stream: &FeatureTable) -> Result<DetectionReport, CliError> {
    let pred = ps.predict(&stream.without_labels())?;
    Ok(evaluate(&pred, stream.require_labels()?)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub taken: u64,
    pub total: u64,
    pub achieved_rate: f64,
    pub detection_rate: f64,
    pub ram_bytes: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Sweep {
    /// Sorted by gamma.
    pub rows: Vec<SweepRow>,
    pub no_twin_rate: f64,
    /// Inclusive gamma bounds, when any gamma qualifies.
    pub recommended: Option<(f64, f64)>,
}

impl Sweep {
    pub fn at(&self, gamma: f64) -> Option<&SweepRow> {
        self.rows.iter().find(|r| r.gamma == gamma)
    }
}

/// Lower bound: smallest gamma from which every larger grid gamma keeps at
/// least `keep` of the full-rate detection. Upper bound: smallest gamma
/// reaching the best rate on the grid. Beyond it only memory grows.
pub fn recommended_range(rows: &[SweepRow], keep: f64) -> Option<(f64, f64)> {
    let full = rows.iter().find(|r| r.gamma == 100.0)?.detection_rate;
    let threshold = keep * full;
    let mut low = None;
    for r in rows.iter().rev() {
        if r.detection_rate >= threshold {
            low = Some(r.gamma);
        } else {
            break;
        }
    }
    let low = low?;
    let best = rows
        .iter()
        .filter(|r| r.gamma >= low)
        .map(|r| r.detection_rate)
        .fold(f64::NEG_INFINITY, f64::max);
    let high = rows
        .iter()
        .find(|r| r.gamma >= low && r.detection_rate == best)?
        .gamma;
    Some((low, high))
}

pub fn run(cfg: &Config) -> Result<Sweep, CliError> {
    let data = load_datasets(cfg)?;
    let ps = twin_detector(cfg, &data)?;
    let stream = evaluation_stream(cfg, &data)?;
    let window = cfg.data.synthetic.window;
    let ts = &cfg.twinning_sweep;
    let mut gammas = ts.gammas.clone();
    gammas.sort_by(f64::total_cmp);
    gammas.dedup();
    let rows = gammas
        .par_iter()
        .map(|&gamma| {
            let config = TwinConfig {
                gamma,
                sampling: ts.sampling,
                seed: cfg.seed,
            };
            let run = twin_detect(&ps, &stream, window, &config)?;
            Ok(SweepRow {
                gamma,
                taken: run.twin.taken,
                total: run.twin.total,
                achieved_rate: run.twin.achieved_rate()?,
                detection_rate: run.report.detection_rate,
                ram_bytes: run.twin.ram_bytes,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let no_twin_rate = direct_detect(&ps, &stream)?.detection_rate;
    let recommended = recommended_range(&rows, ts.keep_fraction);
    Ok(Sweep {
        rows,
        no_twin_rate,
        recommended,
    })
}

pub fn report(sweep: &Sweep) -> Report {
    let mut r = Report::new(&[
        "gamma",
        "taken",
        "total",
        "achieved_rate",
        "detection_rate",
        "ram_bytes",
    ]);
    for row in &sweep.rows {
        r.push(vec![
            f6(row.gamma),
            row.taken.to_string(),
            row.total.to_string(),
            f6(row.achieved_rate),
            f6(row.detection_rate),
            row.ram_bytes.to_string(),
        ]);
    }
    r
}

pub fn summary(sweep: &Sweep) -> Report {
    let mut r = Report::new(&[
        "no_twin_detection_rate",
        "recommended_low",
        "recommended_high",
    ]);
    let (low, high) = sweep
        .recommended
        .map_or((String::new(), String::new()), |(l, h)| (f6(l), f6(h)));
    r.push(vec![f6(sweep.no_twin_rate), low, high]);
    r
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(gamma: f64, detection_rate: f64) -> SweepRow {
        SweepRow {
            gamma,
            taken: 0,
            total: 0,
            achieved_rate: gamma,
            detection_rate,
            ram_bytes: 0,
        }
    }

    #[test]
    fn range_starts_after_last_dip() {
        let rows = [
            row(10.0, 0.99),
            row(50.0, 0.5),
            row(76.0, 0.985),
            row(90.0, 1.0),
            row(100.0, 1.0),
        ];
        assert_eq!(recommended_range(&rows, 0.98), Some((76.0, 90.0)));
    }

    #[test]
    fn range_needs_full_rate_row() {
        assert_eq!(recommended_range(&[row(50.0, 1.0)], 0.98), None);
    }
}
