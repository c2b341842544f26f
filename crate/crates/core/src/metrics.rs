//! Classification error rate, RMSE against one-hot targets, confusion counts.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{ensure_len, invalid, Error, Result};
use crate::math::sqrt;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Metrics {
    /// Fraction of misclassified samples.
    pub err: f64,
    pub rmse: f64,
}

/// `ERR = N_F / N` and `RMSE = sqrt(Σ_k ||y_k − F(x_k)||² / (M N))`.
///
/// `scores` holds one row of `num_classes` outputs per sample.
pub fn compute_metrics(
    predictions: &[usize],
    scores: &[Vec<f64>],
    labels: &[usize],
    num_classes: usize,
) -> Result<Metrics> {
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if num_classes == 0 {
        return Err(invalid("num_classes", "must be at least 1"));
    }
    ensure_len("predictions", labels.len(), predictions.len())?;
    ensure_len("scores", labels.len(), scores.len())?;
    let mut wrong = 0usize;
    let mut squared = 0.0;
    for ((&pred, row), &label) in predictions.iter().zip(scores).zip(labels) {
        ensure_len("score row", num_classes, row.len())?;
        if label >= num_classes {
            return Err(Error::OutOfRange {
                name: "label",
                value: label as f64,
                min: 0.0,
                max: num_classes as f64 - 1.0,
            });
        }
        wrong += usize::from(pred != label);
        squared += row
            .iter()
            .enumerate()
            .map(|(k, &f)| {
                let y = if k == label { 1.0 } else { 0.0 };
                (y - f) * (y - f)
            })
            .sum::<f64>();
    }
    let n = labels.len() as f64;
    Ok(Metrics {
        err: wrong as f64 / n,
        rmse: sqrt(squared / (num_classes as f64 * n)),
    })
}

/// `counts[label][prediction]`.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        Self {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn record(&mut self, label: usize, prediction: usize) {
        self.counts[label][prediction] += 1;
    }

    pub fn merge(&mut self, other: &Self) {
        for (row, other_row) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(other_row) {
                *c += o;
            }
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.counts.len()).map(|k| self.counts[k][k]).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn error_rate_counts_wrong_predictions() {
        let labels = vec![0usize; 1000];
        let predictions: Vec<usize> = (0..1000).map(|k| usize::from(k < 282)).collect();
        let scores = vec![vec![0.5, 0.5]; 1000];
        let m = compute_metrics(&predictions, &scores, &labels, 2).unwrap();
        assert!((m.err - 0.282).abs() < 1e-15);
    }

    #[test]
    fn perfect_scores() {
        let labels = vec![0, 2, 1];
        let scores = vec![vec![1.0, 0.0, 0.0], vec![0.0, 0.0, 1.0], vec![0.0, 1.0, 0.0]];
        let m = compute_metrics(&labels, &scores, &labels, 3).unwrap();
        assert_eq!(m, Metrics { err: 0.0, rmse: 0.0 });
    }

    #[test]
    fn rmse_hand_value() {
        let m = compute_metrics(&[0], &[vec![0.5, 0.5]], &[0], 2).unwrap();
        assert!((m.rmse - 0.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_empty_and_mismatched_input() {
        assert_eq!(compute_metrics(&[], &[], &[], 2).unwrap_err(), Error::EmptyDataset);
        assert!(compute_metrics(&[0, 1], &[vec![1.0, 0.0]], &[0], 2).is_err());
    }

    #[test]
    fn confusion_totals() {
        let mut c = ConfusionMatrix::new(3);
        c.record(0, 0);
        c.record(1, 2);
        let mut d = ConfusionMatrix::new(3);
        d.record(2, 2);
        c.merge(&d);
        assert_eq!(c.total(), 3);
        assert_eq!(c.correct(), 2);
    }
}
