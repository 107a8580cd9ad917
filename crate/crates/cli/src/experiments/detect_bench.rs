//! PS, KNN and SVM trained and scored on identical splits of both
//! benchmark datasets.

use std::path::PathBuf;

use cybertwin::detection::{
    evaluate, knn_predict, svm_predict, svm_train, DetectionReport, FsMethod, LabelSource,
    PsPipeline, SvmConfig,
};
use cybertwin::FeatureTable;

use super::common::{load_datasets, ps_config, split_table};
use crate::config::Config;
use crate::report::{f6, Meta, Report};
use crate::CliError;

/// Precision, F-measure and sensitivity (percent) of the published PS rows,
/// shown next to measured values when real files are supplied.
pub const PUBLISHED_PS: [(&str, [f64; 3]); 2] = [
    ("dataset-1", [98.96, 98.99, 99.03]),
    ("dataset-2", [97.53, 98.08, 98.64]),
];
/// Comparison band, percentage points.
pub const PUBLISHED_BAND: f64 = 3.0;

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub dataset: &'static str,
    pub method: &'static str,
    pub label_source: Option<LabelSource>,
    pub fs_method: Option<FsMethod>,
    pub selected: Vec<String>,
    pub report: DetectionReport,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DetectBench {
    /// One row per (dataset, method); PS uses the configured label source.
    pub rows: Vec<BenchRow>,
    /// PS under both label sources.
    pub ps_variants: Vec<BenchRow>,
    pub real_data: bool,
}

impl DetectBench {
    pub fn row(&self, dataset: &str, method: &str) -> Option<&BenchRow> {
        self.rows
            .iter()
            .find(|r| r.dataset == dataset && r.method == method)
    }
}

fn ps_row(
    cfg: &Config,
    dataset: &'static str,
    train: &FeatureTable,
    val: &FeatureTable,
    test: &FeatureTable,
    source: LabelSource,
) -> Result<BenchRow, CliError> {
    let ps = PsPipeline::fit(train, val, &ps_config(cfg, source))?;
    let pred = ps.predict(&test.without_labels())?;
    Ok(BenchRow {
        dataset,
        method: "PS",
        label_source: Some(source),
        fs_method: Some(ps.fs_outcome().method),
        selected: ps
            .selected_columns()
            .iter()
            .map(|s| s.to_string())
            .collect(),
        report: evaluate(&pred, test.require_labels()?)?,
    })
}

fn bench_dataset(
    cfg: &Config,
    dataset: &'static str,
    table: &FeatureTable,
) -> Result<(Vec<BenchRow>, Vec<BenchRow>), CliError> {
    let s = split_table(cfg, table)?;
    let truth = s.test.require_labels()?;
    let all: Vec<String> = table.column_names().to_vec();

    let variants = [LabelSource::GroundTruth, LabelSource::Unsupervised]
        .into_iter()
        .map(|src| ps_row(cfg, dataset, &s.train, &s.validation, &s.test, src))
        .collect::<Result<Vec<_>, _>>()?;
    let main_ps = variants
        .iter()
        .find(|r| r.label_source == Some(cfg.detect_bench.ps.label_source))
        .expect("both sources evaluated")
        .clone();

    let knn = knn_predict(&s.train, &s.test.without_labels(), cfg.detect_bench.knn_k)?;
    let svm_cfg = SvmConfig {
        epochs: cfg.detect_bench.svm.epochs,
        lambda_reg: cfg.detect_bench.svm.lambda_reg,
        eta0: cfg.detect_bench.svm.eta0,
        seed: cfg.seed,
    };
    let svm = svm_predict(&svm_train(&s.train, &svm_cfg)?, &s.test)?;
    let baseline = |method, pred: &[cybertwin::Label]| -> Result<BenchRow, CliError> {
        Ok(BenchRow {
            dataset,
            method,
            label_source: Some(LabelSource::GroundTruth),
            fs_method: None,
            selected: all.clone(),
            report: evaluate(pred, truth)?,
        })
    };
    let rows = vec![baseline("KNN", &knn)?, baseline("SVM", &svm)?, main_ps];
    Ok((rows, variants))
}

pub fn run(cfg: &Config) -> Result<DetectBench, CliError> {
    let data = load_datasets(cfg)?;
    let (d1, d2) = rayon::join(
        || bench_dataset(cfg, "dataset-1", &data.benchmark.dataset1),
        || bench_dataset(cfg, "dataset-2", &data.benchmark.dataset2),
    );
    let (mut rows, mut ps_variants) = d1?;
    let (rows2, variants2) = d2?;
    rows.extend(rows2);
    ps_variants.extend(variants2);
    Ok(DetectBench {
        rows,
        ps_variants,
        real_data: data.real,
    })
}

fn rows_report(rows: &[BenchRow]) -> Report {
    let mut r = Report::new(&[
        "dataset",
        "method",
        "label_source",
        "fs_method",
        "features",
        "precision",
        "f_measure",
        "sensitivity",
        "tp",
        "fp",
        "tn",
        "fn",
    ]);
    for row in rows {
        let m = &row.report;
        r.push(vec![
            row.dataset.to_string(),
            row.method.to_string(),
            row.label_source
                .map(|s| s.as_str().to_string())
                .unwrap_or_default(),
            row.fs_method
                .map(|f| f.as_str().to_string())
                .unwrap_or_default(),
            row.selected.join(";"),
            f6(m.precision),
            f6(m.f_measure),
            f6(m.sensitivity),
            m.tp.to_string(),
            m.fp.to_string(),
            m.tn.to_string(),
            m.fn_.to_string(),
        ]);
    }
    r
}

pub fn write(result: &DetectBench, meta: &Meta, cfg: &Config) -> Result<Vec<PathBuf>, CliError> {
    let mut paths = vec![
        rows_report(&result.rows).write(meta, &cfg.out, "detect_bench.csv")?,
        rows_report(&result.ps_variants).write(
            meta,
            &cfg.out,
            "detect_bench_ps_label_sources.csv",
        )?,
    ];
    if result.real_data {
        let mut r = Report::new(&[
            "dataset",
            "metric",
            "measured_pct",
            "published_pct",
            "within_band",
        ]);
        for (dataset, published) in PUBLISHED_PS {
            let Some(row) = result.row(dataset, "PS") else {
                continue;
            };
            let measured = [
                row.report.precision,
                row.report.f_measure,
                row.report.sensitivity,
            ];
            for ((name, got), want) in ["precision", "f_measure", "sensitivity"]
                .iter()
                .zip(measured)
                .zip(published)
            {
                let got = 100.0 * got;
                r.push(vec![
                    dataset.to_string(),
                    name.to_string(),
                    f6(got),
                    f6(want),
                    ((got - want).abs() <= PUBLISHED_BAND).to_string(),
                ]);
            }
        }
        paths.push(r.write(meta, &cfg.out, "detect_bench_published_comparison.csv")?);
    }
    Ok(paths)
}
