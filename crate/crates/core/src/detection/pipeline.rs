//! The proposed-solution (PS) detector: AutoFS picks a feature subset,
//! labels come from ground truth or the unsupervised labeller, and the
//! five-layer MLP is trained on standardized selected features.

use super::{
    audit_feature_columns, autofs_select, label_unsupervised, AutoFsOutcome, DetectionError,
    MlpConfig, MlpModel, Result, Standardizer,
};
use crate::table::FeatureTable;
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    GroundTruth,
    Unsupervised,
}

impl LabelSource {
    pub fn as_str(self) -> &'static str {
        match self {
            LabelSource::GroundTruth => "ground_truth",
            LabelSource::Unsupervised => "unsupervised",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PsConfig {
    /// Features kept; `None` means `max(4, ceil(d / 2))` capped at `d`.
    pub k: Option<usize>,
    pub mlp: MlpConfig,
    pub epochs: usize,
    pub label_source: LabelSource,
    pub seed: u64,
}

impl Default for PsConfig {
    fn default() -> Self {
        Self {
            k: None,
            mlp: MlpConfig::default(),
            epochs: 60,
            label_source: LabelSource::GroundTruth,
            seed: 0,
        }
    }
}

impl PsConfig {
    pub fn resolved_k(&self, n_features: usize) -> usize {
        self.k
            .unwrap_or_else(|| 4.max(n_features.div_ceil(2)))
            .min(n_features)
    }
}

#[derive(Debug, Clone)]
pub struct PsPipeline {
    columns: Vec<String>,
    selected: Vec<usize>,
    fs: AutoFsOutcome,
    scaler: Standardizer,
    model: MlpModel,
}

impl PsPipeline {
    /// `validation` drives the AutoFS choice. With unsupervised labels,
    /// ground truth on either table is ignored.
    pub fn fit(train: &FeatureTable, validation: &FeatureTable, config: &PsConfig) -> Result<Self> {
        audit_feature_columns(train.column_names())?;
        if train.column_names() != validation.column_names() {
            return Err(DetectionError::ColumnMismatch);
        }
        let (train, validation) = match config.label_source {
            LabelSource::GroundTruth => (train.clone(), validation.clone()),
            LabelSource::Unsupervised => {
                let joint = train
                    .without_labels()
                    .concat(&validation.without_labels())?;
                let mut labels = label_unsupervised(&joint, config.seed)?;
                let val_labels = labels.split_off(train.n_rows());
                (
                    train.without_labels().with_labels(Some(labels))?,
                    validation.without_labels().with_labels(Some(val_labels))?,
                )
            }
        };
        let k = config.resolved_k(train.n_features());
        let fs = autofs_select(&train, &validation, k)?;
        let mut selected = fs.result.selected.clone();
        selected.sort_unstable();

        let reduced = train.select_columns(&selected)?;
        let scaler = Standardizer::fit(&reduced);
        let scaled = scaler.transform(&reduced)?;
        let mlp = MlpConfig {
            seed: config.seed,
            ..config.mlp
        };
        let mut model = MlpModel::new(selected.len(), &mlp);
        model.fit(&scaled, train.require_labels()?, config.epochs)?;
        Ok(Self {
            columns: train.column_names().to_vec(),
            selected,
            fs,
            scaler,
            model,
        })
    }

    pub fn fs_outcome(&self) -> &AutoFsOutcome {
        &self.fs
    }

    /// Selected column names in table order.
    pub fn selected_columns(&self) -> Vec<&str> {
        self.selected
            .iter()
            .map(|&j| self.columns[j].as_str())
            .collect()
    }

    pub fn model(&self) -> &MlpModel {
        &self.model
    }

    pub fn inference_ops(&self) -> u64 {
        self.model.inference_ops()
    }

    /// Classifies a row laid out like the training table.
    pub fn predict_row(&self, row: &[f64]) -> Result<Label> {
        if row.len() != self.columns.len() {
            return Err(DetectionError::DimensionMismatch {
                expected: self.columns.len(),
                got: row.len(),
            });
        }
        let picked: Vec<f64> = self.selected.iter().map(|&j| row[j]).collect();
        Ok(self.model.predict(&self.scaler.transform_row(&picked))?.0)
    }

    /// Classifies every row; columns are matched by name.
    pub fn predict(&self, table: &FeatureTable) -> Result<Vec<Label>> {
        let names: Vec<String> = self
            .selected
            .iter()
            .map(|&j| self.columns[j].clone())
            .collect();
        let reduced = table.select_columns_by_name(&names)?;
        let scaled = self.scaler.transform(&reduced)?;
        self.model.predict_table(&scaled)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::{evaluate, FsMethod};
    use crate::rng::stream_rng;
    use rand_distr::{Distribution, Normal};

    /// Columns 0 and 1 carry the class; columns 2..5 are noise.
    fn blobs(n: usize, seed: u64) -> FeatureTable {
        let mut rng = stream_rng(seed, 4242);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            let attack = i % 6 == 0;
            let c = if attack { 3.0 } else { 0.0 };
            let mut r = vec![c + noise.sample(&mut rng), c + noise.sample(&mut rng)];
            r.extend((0..3).map(|_| noise.sample(&mut rng)));
            rows.push(r);
            labels.push(if attack { Label::Attack } else { Label::Benign });
        }
        let names = ["arrival_count", "mean_wait", "n1", "n2", "n3"]
            .map(String::from)
            .to_vec();
        FeatureTable::new(names, rows, Some(labels)).unwrap()
    }

    #[test]
    fn default_k() {
        let c = PsConfig::default();
        assert_eq!(c.resolved_k(3), 3);
        assert_eq!(c.resolved_k(8), 4);
        assert_eq!(c.resolved_k(9), 5);
    }

    #[test]
    fn rejects_leaky_columns() {
        let t = blobs(60, 1);
        let rows = t.rows().to_vec();
        let mut names = t.column_names().to_vec();
        names[4] = "label_hint".into();
        let leaky = FeatureTable::new(names, rows, t.labels().map(<[Label]>::to_vec)).unwrap();
        assert!(matches!(
            PsPipeline::fit(&leaky, &leaky, &PsConfig::default()),
            Err(DetectionError::LabelLeak(_))
        ));
    }

    #[test]
    fn both_label_sources_detect_blobs() {
        let train = blobs(600, 1);
        let val = blobs(150, 2);
        let test = blobs(300, 3);
        for source in [LabelSource::GroundTruth, LabelSource::Unsupervised] {
            let cfg = PsConfig {
                label_source: source,
                ..PsConfig::default()
            };
            let ps = PsPipeline::fit(&train, &val, &cfg).unwrap();
            assert!(FsMethod::ALL.contains(&ps.fs_outcome().method));
            assert_eq!(ps.selected_columns().len(), 4);
            let pred = ps.predict(&test.without_labels()).unwrap();
            let r = evaluate(&pred, test.labels().unwrap()).unwrap();
            assert!(r.f_measure >= 0.85, "{source:?}: {r:?}");
            let by_row: Vec<Label> = test
                .rows()
                .iter()
                .map(|x| ps.predict_row(x).unwrap())
                .collect();
            assert_eq!(by_row, pred);
        }
    }
}
