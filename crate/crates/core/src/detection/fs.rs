//! Feature scoring with five selection methods and the AutoFS chooser that
//! keeps whichever method yields the best validation F-measure.
//!
//! Equal scores always resolve toward the lower column index.

use std::fmt;

use rand::seq::SliceRandom;

use super::svm::{svm_train, SvmConfig};
use super::{
    evaluate, require_both_classes, DetectionError, MlpConfig, MlpModel, Result, Standardizer,
};
use crate::rng::{stream, stream_rng};
use crate::table::FeatureTable;
use crate::Label;

/// Equal-width bins per feature for the chi-square statistic.
pub const CHI2_BINS: usize = 10;

const EPS: f64 = 1e-12;

/// Probe network used by backward elimination and AutoFS.
const PROBE_HIDDEN: [usize; 3] = [8, 8, 4];
const PROBE_EPOCHS: usize = 20;
const PROBE_SEED: u64 = 0x5eed;
const BACKWARD_TRAIN_FRACTION: f64 = 0.7;

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, serde::Serialize, serde::Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum FsMethod {
    Rfe,
    Backward,
    Chi2,
    Fisher,
    Anova,
}

impl FsMethod {
    /// Also the AutoFS tie-break order.
    pub const ALL: [FsMethod; 5] = [
        FsMethod::Rfe,
        FsMethod::Backward,
        FsMethod::Chi2,
        FsMethod::Fisher,
        FsMethod::Anova,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            FsMethod::Rfe => "rfe",
            FsMethod::Backward => "backward",
            FsMethod::Chi2 => "chi2",
            FsMethod::Fisher => "fisher",
            FsMethod::Anova => "anova",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        Self::ALL.into_iter().find(|m| m.as_str() == s)
    }
}

impl fmt::Display for FsMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FsResult {
    pub method: FsMethod,
    /// Higher is better. For `rfe` and `backward` the score encodes
    /// elimination order: survivors outrank every eliminated feature.
    pub scores: Vec<f64>,
    /// Exactly `k` column indices, best first.
    pub selected: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AutoFsOutcome {
    pub method: FsMethod,
    pub result: FsResult,
    pub validation_f: f64,
    /// Every candidate in tie-break order.
    pub candidates: Vec<(FsResult, f64)>,
}

pub fn fs_score(method: FsMethod, table: &FeatureTable, k: usize) -> Result<FsResult> {
    let labels = table.require_labels()?;
    require_both_classes(labels)?;
    let d = table.n_features();
    if k == 0 || k > d {
        return Err(DetectionError::KOutOfRange { k, max: d });
    }
    let scores = match method {
        FsMethod::Chi2 => (0..d)
            .map(|j| chi2_score(&table.column(j), labels))
            .collect(),
        FsMethod::Anova => (0..d)
            .map(|j| anova_score(&table.column(j), labels))
            .collect(),
        FsMethod::Fisher => (0..d)
            .map(|j| fisher_score(&table.column(j), labels))
            .collect(),
        FsMethod::Rfe => rfe_scores(table, k)?,
        FsMethod::Backward => backward_scores(table, k)?,
    };
    let selected = top_k(&scores, k);
    Ok(FsResult {
        method,
        scores,
        selected,
    })
}

/// Indices of the `k` highest scores, best first, lower index on ties.
fn top_k(scores: &[f64], k: usize) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

fn class_split(x: &[f64], labels: &[Label]) -> [Vec<f64>; 2] {
    let mut out = [Vec::new(), Vec::new()];
    for (v, l) in x.iter().zip(labels) {
        out[l.index()].push(*v);
    }
    out
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sum_sq_dev(x: &[f64], m: f64) -> f64 {
    x.iter().map(|v| (v - m) * (v - m)).sum()
}

fn chi2_score(x: &[f64], labels: &[Label]) -> f64 {
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    let mut counts = [[0.0f64; 2]; CHI2_BINS];
    for (v, l) in x.iter().zip(labels) {
        let s = if span > 0.0 { (v - lo) / span } else { 0.0 };
        let bin = ((s * CHI2_BINS as f64) as usize).min(CHI2_BINS - 1);
        counts[bin][l.index()] += 1.0;
    }
    let n = x.len() as f64;
    let class_totals = [0, 1].map(|c| counts.iter().map(|b| b[c]).sum::<f64>());
    let mut stat = 0.0;
    for bin in &counts {
        let row = bin[0] + bin[1];
        if row == 0.0 {
            continue;
        }
        for c in 0..2 {
            let expected = row * class_totals[c] / n;
            stat += (bin[c] - expected).powi(2) / expected;
        }
    }
    stat
}

fn anova_score(x: &[f64], labels: &[Label]) -> f64 {
    let groups = class_split(x, labels);
    let n = x.len() as f64;
    let grand = mean(x);
    let ssb: f64 = groups
        .iter()
        .map(|g| g.len() as f64 * (mean(g) - grand).powi(2))
        .sum();
    let ssw: f64 = groups.iter().map(|g| sum_sq_dev(g, mean(g))).sum();
    let msb = ssb / (2.0 - 1.0);
    let msw = if n > 2.0 { ssw / (n - 2.0) } else { 0.0 };
    msb / (msw + EPS)
}

fn fisher_score(x: &[f64], labels: &[Label]) -> f64 {
    let groups = class_split(x, labels);
    let grand = mean(x);
    let mut between = 0.0;
    let mut within = 0.0;
    for g in &groups {
        let m = mean(g);
        between += g.len() as f64 * (m - grand).powi(2);
        // n_c * population variance of class c
        within += sum_sq_dev(g, m);
    }
    between / (within + EPS)
}

/// Elimination-order scores: the i-th eliminated feature scores `i`;
/// survivors score `d - k + 1 + |w|` from the final fit.
fn elimination_scores(d: usize, eliminated: &[usize], survivors: &[(usize, f64)]) -> Vec<f64> {
    let mut scores = vec![0.0; d];
    for (step, &j) in eliminated.iter().enumerate() {
        scores[j] = step as f64;
    }
    let base = eliminated.len() as f64 + 1.0;
    for &(j, strength) in survivors {
        scores[j] = base + strength;
    }
    scores
}

fn rfe_scores(table: &FeatureTable, k: usize) -> Result<Vec<f64>> {
    let d = table.n_features();
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut eliminated = Vec::new();
    let config = SvmConfig {
        epochs: 20,
        ..SvmConfig::default()
    };
    loop {
        let model = svm_train(&table.select_columns(&remaining)?, &config)?;
        let weights: Vec<f64> = model.weights.iter().map(|w| w.abs()).collect();
        if remaining.len() == k {
            let survivors: Vec<(usize, f64)> = remaining.iter().copied().zip(weights).collect();
            return Ok(elimination_scores(d, &eliminated, &survivors));
        }
        // Weakest weight goes; among equals the higher column index goes.
        let mut worst = 0;
        for p in 1..remaining.len() {
            if weights[p] <= weights[worst] {
                worst = p;
            }
        }
        eliminated.push(remaining.remove(worst));
    }
}

/// Stratified split of row indices into (train, validation) under a fixed
/// stream. Falls back to using all rows for both when a class is too small.
fn probe_split(labels: &[Label], fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut rng = stream_rng(seed, stream::SPLIT);
    let mut train = Vec::new();
    let mut val = Vec::new();
    for class in [Label::Benign, Label::Attack] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < 2 {
            let all: Vec<usize> = (0..labels.len()).collect();
            return (all.clone(), all);
        }
        idx.shuffle(&mut rng);
        let n_train = ((idx.len() as f64 * fraction).round() as usize).clamp(1, idx.len() - 1);
        train.extend_from_slice(&idx[..n_train]);
        val.extend_from_slice(&idx[n_train..]);
    }
    train.sort_unstable();
    val.sort_unstable();
    (train, val)
}

/// Validation F-measure of a small MLP trained on the given columns.
/// Column order does not affect the outcome.
fn probe_f_measure(train: &FeatureTable, val: &FeatureTable, columns: &[usize]) -> Result<f64> {
    let mut cols = columns.to_vec();
    cols.sort_unstable();
    let tr = train.select_columns(&cols)?;
    let va = val.select_columns(&cols)?;
    let scaler = Standardizer::fit(&tr);
    let tr = scaler.transform(&tr)?;
    let va = scaler.transform(&va)?;
    let config = MlpConfig {
        hidden: PROBE_HIDDEN,
        seed: PROBE_SEED,
        ..MlpConfig::default()
    };
    let mut model = MlpModel::new(cols.len(), &config);
    model.fit(&tr, tr.require_labels()?, PROBE_EPOCHS)?;
    let pred = model.predict_table(&va)?;
    Ok(evaluate(&pred, va.require_labels()?)?.f_measure)
}

fn backward_scores(table: &FeatureTable, k: usize) -> Result<Vec<f64>> {
    let d = table.n_features();
    let (tr_idx, va_idx) =
        probe_split(table.require_labels()?, BACKWARD_TRAIN_FRACTION, PROBE_SEED);
    let train = table.select_rows(&tr_idx);
    let val = table.select_rows(&va_idx);
    let mut remaining: Vec<usize> = (0..d).collect();
    let mut eliminated = Vec::new();
    while remaining.len() > k {
        // Drop the feature whose removal leaves the best F; among equals the
        // higher column index goes.
        let mut best: Option<(usize, f64)> = None;
        for p in 0..remaining.len() {
            let mut without = remaining.clone();
            without.remove(p);
            let f = probe_f_measure(&train, &val, &without)?;
            if best.is_none_or(|(_, bf)| f >= bf) {
                best = Some((p, f));
            }
        }
        let (p, _) = best.expect("remaining is nonempty");
        eliminated.push(remaining.remove(p));
    }
    // Survivors ranked by how much F drops when each one is removed alone.
    let full = if remaining.len() > 1 {
        probe_f_measure(&train, &val, &remaining)?
    } else {
        0.0
    };
    let mut survivors = Vec::with_capacity(remaining.len());
    for p in 0..remaining.len() {
        let strength = if remaining.len() > 1 {
            let mut without = remaining.clone();
            without.remove(p);
            (full - probe_f_measure(&train, &val, &without)?).max(0.0)
        } else {
            0.0
        };
        survivors.push((remaining[p], strength));
    }
    Ok(elimination_scores(d, &eliminated, &survivors))
}

/// Runs every method on `train`, probes each selected set on `validation`,
/// and keeps the best. A later method in [`FsMethod::ALL`] must be strictly
/// better to displace an earlier one.
pub fn autofs_select(
    train: &FeatureTable,
    validation: &FeatureTable,
    k: usize,
) -> Result<AutoFsOutcome> {
    if train.column_names() != validation.column_names() {
        return Err(DetectionError::ColumnMismatch);
    }
    require_both_classes(validation.require_labels()?)?;
    let mut candidates = Vec::with_capacity(FsMethod::ALL.len());
    for method in FsMethod::ALL {
        let result = fs_score(method, train, k)?;
        let f = probe_f_measure(train, validation, &result.selected)?;
        candidates.push((result, f));
    }
    let mut best = 0;
    for (i, (_, f)) in candidates.iter().enumerate().skip(1) {
        if *f > candidates[best].1 {
            best = i;
        }
    }
    let (result, validation_f) = candidates[best].clone();
    Ok(AutoFsOutcome {
        method: result.method,
        result,
        validation_f,
        candidates,
    })
}
