//! Confusion counts and the derived precision, sensitivity and F-measure.

use std::io::Write;

use super::{DetectionError, Result};
use crate::Label;

/// Confusion counts with attack as the positive class. Ratios whose
/// denominator vanishes are 0.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct DetectionReport {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    pub fn_: u64,
    pub precision: f64,
    pub f_measure: f64,
    pub sensitivity: f64,
    pub detection_rate: f64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl DetectionReport {
    pub fn from_counts(tp: u64, fp: u64, tn: u64, fn_: u64) -> Self {
        let precision = ratio(tp, tp + fp);
        let sensitivity = ratio(tp, tp + fn_);
        let f_measure = if precision + sensitivity == 0.0 {
            0.0
        } else {
            2.0 * precision * sensitivity / (precision + sensitivity)
        };
        Self {
            tp,
            fp,
            tn,
            fn_,
            precision,
            f_measure,
            sensitivity,
            detection_rate: sensitivity,
        }
    }

    pub fn accuracy(&self) -> f64 {
        ratio(self.tp + self.tn, self.tp + self.fp + self.tn + self.fn_)
    }

    pub const CSV_HEADER: &'static str =
        "tp,fp,tn,fn,precision,f_measure,sensitivity,detection_rate";

    pub fn csv_fields(&self) -> String {
        format!(
            "{},{},{},{},{:.6},{:.6},{:.6},{:.6}",
            self.tp,
            self.fp,
            self.tn,
            self.fn_,
            self.precision,
            self.f_measure,
            self.sensitivity,
            self.detection_rate
        )
    }

    /// Header plus one data row.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        writeln!(w, "{}", self.csv_fields())
    }
}

pub fn evaluate(predicted: &[Label], truth: &[Label]) -> Result<DetectionReport> {
    if predicted.len() != truth.len() {
        return Err(DetectionError::LengthMismatch {
            predicted: predicted.len(),
            truth: truth.len(),
        });
    }
    if predicted.is_empty() {
        return Err(DetectionError::EmptyEvaluation);
    }
    let (mut tp, mut fp, mut tn, mut fn_) = (0, 0, 0, 0);
    for (p, t) in predicted.iter().zip(truth) {
        match (p, t) {
            (Label::Attack, Label::Attack) => tp += 1,
            (Label::Attack, Label::Benign) => fp += 1,
            (Label::Benign, Label::Benign) => tn += 1,
            (Label::Benign, Label::Attack) => fn_ += 1,
        }
    }
    Ok(DetectionReport::from_counts(tp, fp, tn, fn_))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use Label::{Attack as A, Benign as B};

    #[test]
    fn perfect_prediction() {
        let truth = [A, B, B, A];
        let r = evaluate(&truth, &truth).unwrap();
        assert_eq!((r.precision, r.f_measure, r.sensitivity), (1.0, 1.0, 1.0));
    }

    #[test]
    fn all_benign_predictor() {
        let r = evaluate(&[B, B, B], &[A, B, A]).unwrap();
        assert_eq!(r.sensitivity, 0.0);
        assert_eq!(r.precision, 0.0);
        assert_eq!(r.f_measure, 0.0);
    }

    #[test]
    fn symmetric_confusion() {
        let r = DetectionReport::from_counts(90, 10, 90, 10);
        assert!((r.precision - 0.9).abs() < 1e-15);
        assert!((r.sensitivity - 0.9).abs() < 1e-15);
        assert!((r.f_measure - 0.9).abs() < 1e-15);
    }

    #[test]
    fn errors() {
        assert!(matches!(
            evaluate(&[A], &[A, B]),
            Err(DetectionError::LengthMismatch { .. })
        ));
        assert!(matches!(
            evaluate(&[], &[]),
            Err(DetectionError::EmptyEvaluation)
        ));
    }

    #[test]
    fn csv_row() {
        let mut buf = Vec::new();
        DetectionReport::from_counts(1, 0, 1, 1)
            .write_csv(&mut buf)
            .unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "tp,fp,tn,fn,precision,f_measure,sensitivity,detection_rate\n1,0,1,1,1.000000,0.666667,0.500000,0.500000\n"
        );
    }

    proptest! {
        #[test]
        fn identities(tp in 0u64..500, fp in 0u64..500, tn in 0u64..500, fn_ in 0u64..500) {
            let r = DetectionReport::from_counts(tp, fp, tn, fn_);
            let p = if tp + fp == 0 { 0.0 } else { tp as f64 / (tp + fp) as f64 };
            let s = if tp + fn_ == 0 { 0.0 } else { tp as f64 / (tp + fn_) as f64 };
            let f = if p + s == 0.0 { 0.0 } else { 2.0 * p * s / (p + s) };
            prop_assert_eq!(r.precision, p);
            prop_assert_eq!(r.sensitivity, s);
            prop_assert_eq!(r.f_measure, f);
            prop_assert_eq!(r.detection_rate, r.sensitivity);
            for v in [r.precision, r.sensitivity, r.f_measure] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
        }
    }
}
