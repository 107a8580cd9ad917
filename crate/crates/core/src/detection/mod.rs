//! Security layer: feature selection, unsupervised labelling, the online
//! MLP detector, KNN and linear-SVM baselines, and detection metrics.

mod fs;
mod knn;
mod labelling;
mod metrics;
mod mlp;
mod pipeline;
mod svm;

pub use fs::{autofs_select, fs_score, AutoFsOutcome, FsMethod, FsResult, CHI2_BINS};
pub use knn::knn_predict;
pub use labelling::{gmm_refine, kmeans, label_unsupervised, GmmFit, KMeansFit};
pub use metrics::{evaluate, DetectionReport};
pub use mlp::{Gradients, MlpConfig, MlpModel, BATCH_SIZE};
pub use pipeline::{LabelSource, PsConfig, PsPipeline};
pub use svm::{svm_predict, svm_train, LinearSvm, SvmConfig};

use thiserror::Error;

use crate::table::{FeatureTable, TableError};
use crate::Label;

#[derive(Debug, Error)]
pub enum DetectionError {
    #[error("labels must contain both classes")]
    SingleClass,
    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("feature dimension {got} does not match model input {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("training loss became non-finite")]
    NonFiniteLoss,
    #[error("need at least {required} rows, got {got}")]
    TooFewRows { required: usize, got: usize },
    #[error("cluster collapsed to {size} members")]
    DegenerateCluster { size: usize },
    #[error("training set is empty")]
    EmptyTrain,
    #[error("k must be odd, got {0}")]
    EvenK(usize),
    #[error("{predicted} predictions for {truth} labels")]
    LengthMismatch { predicted: usize, truth: usize },
    #[error("no predictions to evaluate")]
    EmptyEvaluation,
    #[error("column `{0}` would leak ground truth into detector input")]
    LabelLeak(String),
    #[error("tables have different columns")]
    ColumnMismatch,
    #[error("malformed model file: {0}")]
    ModelFormat(String),
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, DetectionError>;

/// Column-name fragments that indicate ground truth.
const LEAKY_COLUMNS: [&str; 5] = ["label", "attack", "class", "type", "truth"];

/// Rejects feature columns whose names suggest they carry ground truth.
pub fn audit_feature_columns(names: &[String]) -> Result<()> {
    for n in names {
        let lower = n.to_ascii_lowercase();
        if LEAKY_COLUMNS.iter().any(|bad| lower.contains(bad)) {
            return Err(DetectionError::LabelLeak(n.clone()));
        }
    }
    Ok(())
}

pub(crate) fn require_both_classes(labels: &[Label]) -> Result<()> {
    let attacks = labels.iter().filter(|l| l.is_attack()).count();
    if attacks == 0 || attacks == labels.len() {
        return Err(DetectionError::SingleClass);
    }
    Ok(())
}

/// Zero-mean, unit-variance scaling fitted on one table.
#[derive(Debug, Clone, PartialEq)]
pub struct Standardizer {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl Standardizer {
    /// Columns with zero variance get a unit scale.
    pub fn fit(table: &FeatureTable) -> Self {
        let n = table.n_rows().max(1) as f64;
        let d = table.n_features();
        let mut means = vec![0.0; d];
        for row in table.rows() {
            for (m, v) in means.iter_mut().zip(row) {
                *m += v;
            }
        }
        means.iter_mut().for_each(|m| *m /= n);
        let mut vars = vec![0.0; d];
        for row in table.rows() {
            for j in 0..d {
                let c = row[j] - means[j];
                vars[j] += c * c;
            }
        }
        let stds = vars
            .iter()
            .map(|v| {
                let s = (v / n).sqrt();
                if s > 1e-12 {
                    s
                } else {
                    1.0
                }
            })
            .collect();
        Self { means, stds }
    }

    pub fn transform_row(&self, row: &[f64]) -> Vec<f64> {
        row.iter()
            .zip(self.means.iter().zip(&self.stds))
            .map(|(v, (m, s))| (v - m) / s)
            .collect()
    }

    pub fn transform(&self, table: &FeatureTable) -> Result<FeatureTable> {
        if table.n_features() != self.means.len() {
            return Err(DetectionError::DimensionMismatch {
                expected: self.means.len(),
                got: table.n_features(),
            });
        }
        let rows = table.rows().iter().map(|r| self.transform_row(r)).collect();
        Ok(FeatureTable::new(
            table.column_names().to_vec(),
            rows,
            table.labels().map(<[Label]>::to_vec),
        )?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn audit_catches_label_columns() {
        assert!(audit_feature_columns(&["arrival_count".into(), "mean_wait".into()]).is_ok());
        for bad in ["label", "label_hint", "Attack_Type", "type"] {
            assert!(matches!(
                audit_feature_columns(&[bad.to_string()]),
                Err(DetectionError::LabelLeak(_))
            ));
        }
    }

    #[test]
    fn standardizer_centres_and_scales() {
        let t = FeatureTable::new(
            vec!["a".into(), "c".into()],
            vec![vec![1.0, 5.0], vec![3.0, 5.0]],
            None,
        )
        .unwrap();
        let s = Standardizer::fit(&t);
        assert_eq!(s.means, vec![2.0, 5.0]);
        assert_eq!(s.stds, vec![1.0, 1.0]);
        let z = s.transform(&t).unwrap();
        assert_eq!(z.row(0), [-1.0, 0.0]);
    }
}
