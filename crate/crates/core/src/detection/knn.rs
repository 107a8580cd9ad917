//! K-nearest-neighbour baseline: majority vote over standardized
//! Euclidean neighbours, distance ties broken toward the lower row index.

use super::{DetectionError, Result, Standardizer};
use crate::table::FeatureTable;
use crate::Label;

/// Majority vote of the `k` nearest training rows by Euclidean distance on
/// features standardized with training statistics. Equal distances prefer
/// the lower training row index.
pub fn knn_predict(train: &FeatureTable, queries: &FeatureTable, k: usize) -> Result<Vec<Label>> {
    let labels = train.require_labels()?;
    if train.is_empty() {
        return Err(DetectionError::EmptyTrain);
    }
    if k.is_multiple_of(2) {
        return Err(DetectionError::EvenK(k));
    }
    if k == 0 || k > train.n_rows() {
        return Err(DetectionError::KOutOfRange {
            k,
            max: train.n_rows(),
        });
    }
    if queries.n_features() != train.n_features() {
        return Err(DetectionError::DimensionMismatch {
            expected: train.n_features(),
            got: queries.n_features(),
        });
    }
    let scaler = Standardizer::fit(train);
    let reference: Vec<Vec<f64>> = train
        .rows()
        .iter()
        .map(|r| scaler.transform_row(r))
        .collect();

    let mut dist: Vec<(f64, usize)> = Vec::with_capacity(reference.len());
    Ok(queries
        .rows()
        .iter()
        .map(|q| {
            let q = scaler.transform_row(q);
            dist.clear();
            dist.extend(reference.iter().enumerate().map(|(i, r)| {
                let d: f64 = r.iter().zip(&q).map(|(a, b)| (a - b) * (a - b)).sum();
                (d, i)
            }));
            let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            dist.select_nth_unstable_by(k - 1, cmp);
            let attacks = dist[..k]
                .iter()
                .filter(|(_, i)| labels[*i].is_attack())
                .count();
            if 2 * attacks > k {
                Label::Attack
            } else {
                Label::Benign
            }
        })
        .collect())
}
