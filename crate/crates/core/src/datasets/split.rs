//! Seeded train/validation/test splitting, optionally stratified by class.

use rand::seq::SliceRandom;

use super::{DatasetError, Result};
use crate::rng::{stream, stream_rng};
use crate::table::FeatureTable;
use crate::Label;

/// Smallest class size a stratified split accepts.
const MIN_CLASS_ROWS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct SplitSpec {
    pub train: f64,
    pub validation: f64,
    pub test: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train: f64, validation: f64, test: f64, stratified: bool, seed: u64) -> Self {
        Self {
            train,
            validation,
            test,
            stratified,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train", self.train),
            ("validation", self.validation),
            ("test", self.test),
        ] {
            if !(f > 0.0 && f < 1.0) {
                return Err(DatasetError::InvalidSplit(format!(
                    "{name} fraction {f} not in (0, 1)"
                )));
            }
        }
        let sum = self.train + self.validation + self.test;
        if (sum - 1.0).abs() > 1e-9 {
            return Err(DatasetError::InvalidSplit(format!(
                "fractions sum to {sum}"
            )));
        }
        Ok(())
    }
}

/// Partitions a shuffled index list by largest-remainder rounding, so each
/// part is within one row of its exact share.
fn cut(idx: &[usize], spec: &SplitSpec) -> [Vec<usize>; 3] {
    let n = idx.len() as f64;
    let exact = [spec.train * n, spec.validation * n, spec.test * n];
    let mut counts = exact.map(|e| e.floor() as usize);
    let mut left = idx.len() - counts.iter().sum::<usize>();
    let mut order = [0, 1, 2];
    order.sort_by(|&a, &b| {
        (exact[b] - exact[b].floor())
            .total_cmp(&(exact[a] - exact[a].floor()))
            .then(a.cmp(&b))
    });
    for &p in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[p] += 1;
        left -= 1;
    }
    let (a, rest) = idx.split_at(counts[0]);
    let (b, c) = rest.split_at(counts[1]);
    [a.to_vec(), b.to_vec(), c.to_vec()]
}

/// Train, validation and test tables. Rows keep their original relative
/// order within each part.
pub fn split(
    table: &FeatureTable,
    spec: &SplitSpec,
) -> Result<(FeatureTable, FeatureTable, FeatureTable)> {
    spec.validate()?;
    let labels = table.require_labels()?;
    let mut rng = stream_rng(spec.seed, stream::SPLIT);
    let mut parts: [Vec<usize>; 3] = Default::default();
    if spec.stratified {
        for class in [Label::Benign, Label::Attack] {
            let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            if idx.len() < MIN_CLASS_ROWS {
                return Err(DatasetError::ClassTooSmall {
                    class: class.as_str(),
                    got: idx.len(),
                    required: MIN_CLASS_ROWS,
                });
            }
            idx.shuffle(&mut rng);
            for (p, part) in parts.iter_mut().zip(cut(&idx, spec)) {
                p.extend(part);
            }
        }
    } else {
        let mut idx: Vec<usize> = (0..labels.len()).collect();
        if idx.len() < MIN_CLASS_ROWS {
            return Err(DatasetError::InsufficientSamples {
                what: "split input".into(),
                required: MIN_CLASS_ROWS,
                got: idx.len(),
            });
        }
        idx.shuffle(&mut rng);
        parts = cut(&idx, spec);
    }
    for p in parts.iter_mut() {
        p.sort_unstable();
    }
    let [a, b, c] = parts;
    Ok((
        table.select_rows(&a),
        table.select_rows(&b),
        table.select_rows(&c),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn table(n: usize, n_attack: usize) -> FeatureTable {
        let rows = (0..n).map(|i| vec![i as f64]).collect();
        let labels = (0..n)
            .map(|i| {
                if i < n_attack {
                    Label::Attack
                } else {
                    Label::Benign
                }
            })
            .collect();
        FeatureTable::new(vec!["id".into()], rows, Some(labels)).unwrap()
    }

    fn ids(t: &FeatureTable) -> Vec<usize> {
        t.rows().iter().map(|r| r[0] as usize).collect()
    }

    #[test]
    fn fraction_arithmetic() {
        let (a, b, c) = split(&table(100, 30), &SplitSpec::new(0.6, 0.2, 0.2, false, 1)).unwrap();
        assert_eq!((a.n_rows(), b.n_rows(), c.n_rows()), (60, 20, 20));
    }

    #[test]
    fn stratified_dataset2_shape() {
        // 2400 rows, 400 attacks: 70/15/15 gives 280/60/60 attacks.
        let (a, b, c) =
            split(&table(2400, 400), &SplitSpec::new(0.7, 0.15, 0.15, true, 9)).unwrap();
        let counts = [&a, &b, &c].map(|t| t.attack_count().unwrap());
        for (got, want) in counts.iter().zip([280usize, 60, 60]) {
            assert!(got.abs_diff(want) <= 1, "{counts:?}");
        }
        assert_eq!(a.n_rows() + b.n_rows() + c.n_rows(), 2400);
    }

    #[test]
    fn single_class_stratified() {
        let err = split(&table(50, 0), &SplitSpec::new(0.6, 0.2, 0.2, true, 1)).unwrap_err();
        assert!(matches!(
            err,
            DatasetError::ClassTooSmall {
                class: "attack",
                got: 0,
                ..
            }
        ));
    }

    #[test]
    fn bad_fractions() {
        assert!(split(&table(50, 10), &SplitSpec::new(0.6, 0.2, 0.3, true, 1)).is_err());
        assert!(split(&table(50, 10), &SplitSpec::new(1.0, 0.0, 0.0, true, 1)).is_err());
    }

    proptest! {
        #[test]
        fn partition_and_determinism(n in 10usize..300, frac in 0.05f64..0.5, seed in 0u64..1000, stratified: bool) {
            let n_attack = ((n as f64 * frac) as usize).max(3);
            let t = table(n, n_attack);
            let spec = SplitSpec::new(0.7, 0.15, 0.15, stratified, seed);
            let (a, b, c) = split(&t, &spec).unwrap();
            let mut all: Vec<usize> = [ids(&a), ids(&b), ids(&c)].concat();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            let again = split(&t, &spec).unwrap();
            prop_assert_eq!((a.clone(), b.clone(), c.clone()), again);
            if stratified {
                for (part, f) in [(&a, 0.7), (&b, 0.15), (&c, 0.15)] {
                    let want = n_attack as f64 * f;
                    prop_assert!((part.attack_count().unwrap() as f64 - want).abs() <= 1.0 + 1e-9);
                }
            }
        }
    }
}
