//! Linear SVM trained by deterministic stochastic subgradient descent on
//! hinge loss with L2 regularization of the weights.
//!
//! Weights follow the step `min(1/(lambda t), eta0/sqrt(t))`; the bias is
//! unregularized and steps with `eta0/sqrt(t)`. Under very strong
//! regularization the weights vanish while the bias settles on the majority
//! class.

use rand::seq::SliceRandom;

use super::{require_both_classes, DetectionError, Result, Standardizer};
use crate::rng::{stream, stream_rng};
use crate::table::FeatureTable;
use crate::Label;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvmConfig {
    pub epochs: usize,
    pub lambda_reg: f64,
    pub eta0: f64,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        Self {
            epochs: 50,
            lambda_reg: 1e-3,
            eta0: 0.1,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearSvm {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub scaler: Standardizer,
}

impl LinearSvm {
    /// Affine score on raw (unscaled) features.
    pub fn score(&self, row: &[f64]) -> f64 {
        let z = self.scaler.transform_row(row);
        self.weights.iter().zip(&z).map(|(w, x)| w * x).sum::<f64>() + self.bias
    }
}

pub fn svm_train(train: &FeatureTable, config: &SvmConfig) -> Result<LinearSvm> {
    let labels = train.require_labels()?;
    require_both_classes(labels)?;
    let scaler = Standardizer::fit(train);
    let xs: Vec<Vec<f64>> = train
        .rows()
        .iter()
        .map(|r| scaler.transform_row(r))
        .collect();
    let ys: Vec<f64> = labels
        .iter()
        .map(|l| if l.is_attack() { 1.0 } else { -1.0 })
        .collect();

    let d = train.n_features();
    let mut w = vec![0.0; d];
    let mut b = 0.0;
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut rng = stream_rng(config.seed, stream::SVM);
    let mut t = 0u64;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let tf = t as f64;
            let eta_b = config.eta0 / tf.sqrt();
            let eta_w = (1.0 / (config.lambda_reg * tf)).min(eta_b);
            let x = &xs[i];
            let margin = ys[i] * (w.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + b);
            let shrink = 1.0 - eta_w * config.lambda_reg;
            if margin < 1.0 {
                for (wj, xj) in w.iter_mut().zip(x) {
                    *wj = shrink * *wj + eta_w * ys[i] * xj;
                }
                b += eta_b * ys[i];
            } else {
                w.iter_mut().for_each(|wj| *wj *= shrink);
            }
        }
    }
    Ok(LinearSvm {
        weights: w,
        bias: b,
        scaler,
    })
}

/// Attack iff the affine score is positive.
pub fn svm_predict(model: &LinearSvm, rows: &FeatureTable) -> Result<Vec<Label>> {
    if rows.n_features() != model.weights.len() {
        return Err(DetectionError::DimensionMismatch {
            expected: model.weights.len(),
            got: rows.n_features(),
        });
    }
    Ok(rows
        .rows()
        .iter()
        .map(|r| {
            if model.score(r) > 0.0 {
                Label::Attack
            } else {
                Label::Benign
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::detection::evaluate;
    use rand_distr::{Distribution, Normal};

    fn line() -> FeatureTable {
        let xs: Vec<f64> = (1..=20).map(|i| i as f64 * 0.25).collect();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for x in xs {
            rows.push(vec![x]);
            labels.push(Label::Attack);
            rows.push(vec![-x]);
            labels.push(Label::Benign);
        }
        FeatureTable::new(vec!["x".into()], rows, Some(labels)).unwrap()
    }

    #[test]
    fn separable_line() {
        let t = line();
        let m = svm_train(&t, &SvmConfig::default()).unwrap();
        let pred = svm_predict(&m, &t).unwrap();
        assert_eq!(
            evaluate(&pred, t.labels().unwrap()).unwrap().accuracy(),
            1.0
        );
    }

    #[test]
    fn heavy_regularization_flattens_the_model() {
        // 3:1 benign majority on a separable set.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..60 {
            let x = (i % 20) as f64 * 0.1 + 0.1;
            if i % 4 == 0 {
                rows.push(vec![x]);
                labels.push(Label::Attack);
            } else {
                rows.push(vec![-x]);
                labels.push(Label::Benign);
            }
        }
        let t = FeatureTable::new(vec!["x".into()], rows, Some(labels)).unwrap();
        let cfg = SvmConfig {
            epochs: 1,
            lambda_reg: 1e6,
            ..SvmConfig::default()
        };
        let m = svm_train(&t, &cfg).unwrap();
        assert!(m.weights.iter().all(|w| w.abs() < 1e-4), "{:?}", m.weights);
        let pred = svm_predict(&m, &t).unwrap();
        assert!(pred.iter().all(|p| *p == pred[0]));
        assert_eq!(pred[0], Label::Benign);
    }

    #[test]
    fn single_class_rejected() {
        let t = FeatureTable::new(
            vec!["x".into()],
            vec![vec![1.0], vec![2.0]],
            Some(vec![Label::Benign; 2]),
        )
        .unwrap();
        assert!(matches!(
            svm_train(&t, &SvmConfig::default()),
            Err(DetectionError::SingleClass)
        ));
    }

    #[test]
    fn blobs_are_classified() {
        let mut rng = stream_rng(5, 5);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let gen = |n: usize, rng: &mut rand_chacha::ChaCha8Rng| {
            let mut rows = Vec::new();
            let mut labels = Vec::new();
            for i in 0..n {
                let attack = i % 2 == 0;
                let c = if attack { 2.5 } else { -2.5 };
                rows.push(vec![c + noise.sample(rng), c + noise.sample(rng)]);
                labels.push(if attack { Label::Attack } else { Label::Benign });
            }
            FeatureTable::new(vec!["a".into(), "b".into()], rows, Some(labels)).unwrap()
        };
        let train = gen(200, &mut rng);
        let test = gen(200, &mut rng);
        let m = svm_train(&train, &SvmConfig::default()).unwrap();
        let r = evaluate(&svm_predict(&m, &test).unwrap(), test.labels().unwrap()).unwrap();
        assert!(r.accuracy() >= 0.95, "{r:?}");
    }
}
