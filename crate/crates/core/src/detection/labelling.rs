//! Unsupervised labelling: k-means seeds a diagonal-covariance Gaussian
//! mixture, EM refines it, and the smaller component is called attack.

use rand::Rng;

use super::{DetectionError, Result, Standardizer};
use crate::rng::{stream, stream_rng};
use crate::table::FeatureTable;
use crate::Label;

pub const MIN_ROWS: usize = 10;
const MAX_ITERATIONS: usize = 100;
const TOLERANCE: f64 = 1e-6;
const VARIANCE_FLOOR: f64 = 1e-6;
/// Column whose higher cluster mean marks the attack cluster when the two
/// clusters have equal size.
const TIE_COLUMN: &str = "arrival_count";

#[derive(Debug, Clone, PartialEq)]
pub struct KMeansFit {
    pub centroids: Vec<Vec<f64>>,
    pub assignments: Vec<usize>,
    pub iterations: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GmmFit {
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    /// Per row, per component; each row sums to 1.
    pub responsibilities: Vec<Vec<f64>>,
    pub log_likelihood: f64,
    pub iterations: usize,
}

impl GmmFit {
    /// Component with the largest responsibility, lower index on ties.
    pub fn hard_assignments(&self) -> Vec<usize> {
        self.responsibilities
            .iter()
            .map(|r| {
                let mut best = 0;
                for c in 1..r.len() {
                    if r[c] > r[best] {
                        best = c;
                    }
                }
                best
            })
            .collect()
    }
}

fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn nearest(centroids: &[Vec<f64>], x: &[f64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (c, m) in centroids.iter().enumerate() {
        let d = sq_dist(m, x);
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

/// Lloyd iterations from a k-means++ seeding. Stops when no centroid moves
/// more than the tolerance or after the iteration cap.
pub fn kmeans(rows: &[Vec<f64>], k: usize, seed: u64) -> Result<KMeansFit> {
    if k == 0 || rows.len() < k {
        return Err(DetectionError::TooFewRows {
            required: k.max(1),
            got: rows.len(),
        });
    }
    let mut rng = stream_rng(seed, stream::KMEANS);
    let mut centroids = vec![rows[rng.random_range(0..rows.len())].clone()];
    let mut d2: Vec<f64> = rows.iter().map(|r| sq_dist(r, &centroids[0])).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let next = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut pick = rows.len() - 1;
            for (i, w) in d2.iter().enumerate() {
                if target < *w {
                    pick = i;
                    break;
                }
                target -= w;
            }
            pick
        } else {
            rng.random_range(0..rows.len())
        };
        centroids.push(rows[next].clone());
        for (dist, r) in d2.iter_mut().zip(rows) {
            *dist = dist.min(sq_dist(r, &centroids[centroids.len() - 1]));
        }
    }

    let dim = rows[0].len();
    let mut assignments = vec![0; rows.len()];
    let mut iterations = 0;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        for (a, r) in assignments.iter_mut().zip(rows) {
            *a = nearest(&centroids, r).0;
        }
        let mut sums = vec![vec![0.0; dim]; k];
        let mut counts = vec![0usize; k];
        for (a, r) in assignments.iter().zip(rows) {
            counts[*a] += 1;
            for (s, v) in sums[*a].iter_mut().zip(r) {
                *s += v;
            }
        }
        let mut shift = 0.0f64;
        for c in 0..k {
            if counts[c] == 0 {
                continue;
            }
            let updated: Vec<f64> = sums[c].iter().map(|s| s / counts[c] as f64).collect();
            shift = shift.max(sq_dist(&updated, &centroids[c]).sqrt());
            centroids[c] = updated;
        }
        if shift <= TOLERANCE {
            break;
        }
    }
    for (a, r) in assignments.iter_mut().zip(rows) {
        *a = nearest(&centroids, r).0;
    }
    Ok(KMeansFit {
        centroids,
        assignments,
        iterations,
    })
}

fn log_density(x: &[f64], mean: &[f64], var: &[f64]) -> f64 {
    let ln_2pi = (2.0 * std::f64::consts::PI).ln();
    x.iter()
        .zip(mean.iter().zip(var))
        .map(|(v, (m, s2))| -0.5 * (ln_2pi + s2.ln() + (v - m) * (v - m) / s2))
        .sum()
}

/// M-step from hard or soft memberships.
fn m_step(
    rows: &[Vec<f64>],
    resp: &[Vec<f64>],
    k: usize,
) -> (Vec<f64>, Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let dim = rows[0].len();
    let n = rows.len() as f64;
    let mut weights = vec![0.0; k];
    let mut means = vec![vec![0.0; dim]; k];
    let mut variances = vec![vec![0.0; dim]; k];
    for c in 0..k {
        let nk: f64 = resp.iter().map(|r| r[c]).sum();
        weights[c] = nk / n;
        if nk <= 0.0 {
            variances[c] = vec![1.0; dim];
            continue;
        }
        for (r, x) in resp.iter().zip(rows) {
            for (m, v) in means[c].iter_mut().zip(x) {
                *m += r[c] * v;
            }
        }
        means[c].iter_mut().for_each(|m| *m /= nk);
        for (r, x) in resp.iter().zip(rows) {
            for j in 0..dim {
                let d = x[j] - means[c][j];
                variances[c][j] += r[c] * d * d;
            }
        }
        variances[c]
            .iter_mut()
            .for_each(|v| *v = (*v / nk).max(VARIANCE_FLOOR));
    }
    (weights, means, variances)
}

/// EM for a diagonal Gaussian mixture initialised from a k-means partition.
/// Stops when the mean log-likelihood changes by at most the tolerance.
pub fn gmm_refine(rows: &[Vec<f64>], init: &KMeansFit) -> Result<GmmFit> {
    let k = init.centroids.len();
    if rows.len() != init.assignments.len() || rows.is_empty() {
        return Err(DetectionError::LengthMismatch {
            predicted: init.assignments.len(),
            truth: rows.len(),
        });
    }
    let mut resp: Vec<Vec<f64>> = init
        .assignments
        .iter()
        .map(|&a| (0..k).map(|c| if c == a { 1.0 } else { 0.0 }).collect())
        .collect();
    let (mut weights, mut means, mut variances) = m_step(rows, &resp, k);
    let mut prev = f64::NEG_INFINITY;
    let mut log_likelihood = prev;
    let mut iterations = 0;
    let mut logp = vec![0.0; k];
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let mut total = 0.0;
        for (r, x) in resp.iter_mut().zip(rows) {
            for c in 0..k {
                logp[c] = if weights[c] > 0.0 {
                    weights[c].ln() + log_density(x, &means[c], &variances[c])
                } else {
                    f64::NEG_INFINITY
                };
            }
            let max = logp.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let norm = max + logp.iter().map(|l| (l - max).exp()).sum::<f64>().ln();
            for c in 0..k {
                r[c] = (logp[c] - norm).exp();
            }
            total += norm;
        }
        log_likelihood = total / rows.len() as f64;
        if !log_likelihood.is_finite() {
            return Err(DetectionError::NonFiniteLoss);
        }
        (weights, means, variances) = m_step(rows, &resp, k);
        if (log_likelihood - prev).abs() <= TOLERANCE {
            break;
        }
        prev = log_likelihood;
    }
    Ok(GmmFit {
        weights,
        means,
        variances,
        responsibilities: resp,
        log_likelihood,
        iterations,
    })
}

/// Hard labels for an unlabelled table. Features are standardized
/// internally; the smaller component is attack.
pub fn label_unsupervised(table: &FeatureTable, seed: u64) -> Result<Vec<Label>> {
    if table.n_rows() < MIN_ROWS {
        return Err(DetectionError::TooFewRows {
            required: MIN_ROWS,
            got: table.n_rows(),
        });
    }
    let scaler = Standardizer::fit(table);
    let rows: Vec<Vec<f64>> = table
        .rows()
        .iter()
        .map(|r| scaler.transform_row(r))
        .collect();
    let fit = gmm_refine(&rows, &kmeans(&rows, 2, seed)?)?;
    let hard = fit.hard_assignments();
    let mut sizes = [0usize; 2];
    for &a in &hard {
        sizes[a] += 1;
    }
    if let Some(&size) = sizes.iter().find(|&&s| s < 2) {
        return Err(DetectionError::DegenerateCluster { size });
    }
    let attack = if sizes[0] != sizes[1] {
        if sizes[0] < sizes[1] {
            0
        } else {
            1
        }
    } else {
        let col = table.column_index(TIE_COLUMN).unwrap_or(0);
        let mut sums = [0.0; 2];
        for (a, r) in hard.iter().zip(table.rows()) {
            sums[*a] += r[col];
        }
        // Equal sizes, so sums compare like means.
        if sums[1] > sums[0] {
            1
        } else {
            0
        }
    };
    Ok(hard
        .into_iter()
        .map(|a| {
            if a == attack {
                Label::Attack
            } else {
                Label::Benign
            }
        })
        .collect())
}
