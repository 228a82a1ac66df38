use std::collections::HashSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::dataset::{Dataset, RowOrigin};
use super::gbdt::{train, GbdtModel, GbdtParams};
use super::smote::{smote, DEFAULT_K};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    pub fn_: usize,
}

impl Confusion {
    pub fn from_flags(predicted: impl IntoIterator<Item = bool>, actual: &[u8]) -> Self {
        let mut c = Confusion::default();
        for (p, &y) in predicted.into_iter().zip(actual) {
            match (p, y == 1) {
                (true, true) => c.tp += 1,
                (true, false) => c.fp += 1,
                (false, false) => c.tn += 1,
                (false, true) => c.fn_ += 1,
            }
        }
        c
    }

    pub fn total(&self) -> usize {
        self.tp + self.fp + self.tn + self.fn_
    }

    pub fn add(&mut self, other: &Confusion) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.tn += other.tn;
        self.fn_ += other.fn_;
    }

    pub fn metrics(&self) -> Metrics {
        let ratio = |a: usize, b: usize| if b == 0 { 0.0 } else { a as f64 / b as f64 };
        let precision = ratio(self.tp, self.tp + self.fp);
        let recall = ratio(self.tp, self.tp + self.fn_);
        Metrics {
            accuracy: ratio(self.tp + self.tn, self.total()),
            precision,
            recall,
            f1: if precision + recall > 0.0 { 2.0 * precision * recall / (precision + recall) } else { 0.0 },
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    pub fn mean(items: &[Metrics]) -> Metrics {
        let n = items.len().max(1) as f64;
        Metrics {
            accuracy: items.iter().map(|m| m.accuracy).sum::<f64>() / n,
            precision: items.iter().map(|m| m.precision).sum::<f64>() / n,
            recall: items.iter().map(|m| m.recall).sum::<f64>() / n,
            f1: items.iter().map(|m| m.f1).sum::<f64>() / n,
        }
    }
}

pub fn evaluate(model: &GbdtModel, data: &Dataset) -> Result<Confusion> {
    let preds = model.predict_dataset(data)?;
    Ok(Confusion::from_flags(preds.iter().map(|p| p.flag), &data.labels))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FoldReport {
    pub fold: usize,
    pub train_rows: usize,
    pub validation_rows: usize,
    pub synthetic_rows: usize,
    pub confusion: Confusion,
    pub metrics: Metrics,
    /// Synthetic rows in the validation fold, or synthetic rows derived from
    /// validation observations. Always zero.
    pub leaked_rows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<FoldReport>,
    pub mean: Metrics,
    pub confusion: Confusion,
    pub rebalanced: bool,
}

/// Stratified fold assignment: each class is shuffled, the classes are
/// concatenated, and rows are dealt round-robin, so fold sizes differ by at
/// most one and class shares are preserved.
pub fn stratified_folds(labels: &[u8], folds: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order = Vec::with_capacity(labels.len());
    for class in [1u8, 0u8] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        idx.shuffle(&mut rng);
        order.extend(idx);
    }
    let mut out = vec![Vec::new(); folds];
    for (j, i) in order.into_iter().enumerate() {
        out[j % folds].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

pub fn cross_validate(data: &Dataset, params: &GbdtParams, folds: usize, rebalance: bool, seed: u64) -> Result<CvReport> {
    if folds < 2 || data.n_rows() < folds {
        return Err(Error::InsufficientData(format!(
            "{} rows cannot be split into {folds} folds",
            data.n_rows()
        )));
    }
    let assignment = stratified_folds(&data.labels, folds, seed);
    let reports: Vec<Result<FoldReport>> = (0..folds)
        .into_par_iter()
        .map(|k| {
            let validation_idx = &assignment[k];
            let train_idx: Vec<usize> = assignment
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != k)
                .flat_map(|(_, f)| f.iter().copied())
                .collect();
            let validation = data.subset(validation_idx);
            let mut training = data.subset(&train_idx);
            if rebalance {
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (0x9e37_79b9_7f4a_7c15u64.wrapping_mul(k as u64 + 1)));
                training = smote(&training, DEFAULT_K, &mut rng)?;
            }
            let model = train(&training, params)?;
            let confusion = evaluate(&model, &validation)?;

            let validation_ids: HashSet<usize> = validation
                .origins
                .iter()
                .filter_map(|o| match o {
                    RowOrigin::Observed(id) => Some(*id),
                    RowOrigin::Synthetic { .. } => None,
                })
                .collect();
            let leaked_rows = validation.origins.iter().filter(|o| o.is_synthetic()).count()
                + training
                    .origins
                    .iter()
                    .filter(|o| match o {
                        RowOrigin::Synthetic { parent, neighbor, .. } => {
                            validation_ids.contains(parent) || validation_ids.contains(neighbor)
                        }
                        RowOrigin::Observed(_) => false,
                    })
                    .count();
            Ok(FoldReport {
                fold: k,
                train_rows: training.n_rows(),
                validation_rows: validation.n_rows(),
                synthetic_rows: training.origins.iter().filter(|o| o.is_synthetic()).count(),
                metrics: confusion.metrics(),
                confusion,
                leaked_rows,
            })
        })
        .collect();
    let folds: Vec<FoldReport> = reports.into_iter().collect::<Result<_>>()?;
    let mean = Metrics::mean(&folds.iter().map(|f| f.metrics).collect::<Vec<_>>());
    let mut confusion = Confusion::default();
    for f in &folds {
        confusion.add(&f.confusion);
    }
    Ok(CvReport {
        folds,
        mean,
        confusion,
        rebalanced: rebalance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::{Column, ColumnKind};

    #[test]
    fn fold_sizes_balanced() {
        let labels: Vec<u8> = (0..1000).map(|i| (i % 7 == 0) as u8).collect();
        let folds = stratified_folds(&labels, 10, 1);
        assert!(folds.iter().all(|f| f.len() == 100));
        let labels: Vec<u8> = (0..1003).map(|i| (i % 5 == 0) as u8).collect();
        let folds = stratified_folds(&labels, 10, 1);
        let (lo, hi) = folds.iter().fold((usize::MAX, 0), |(lo, hi), f| (lo.min(f.len()), hi.max(f.len())));
        assert!(hi - lo <= 1);
        for f in &folds {
            let pos = f.iter().filter(|&&i| labels[i] == 1).count();
            assert!((20..=21).contains(&pos));
        }
    }

    #[test]
    fn metric_arithmetic() {
        let c = Confusion { tp: 8, fp: 2, tn: 85, fn_: 5 };
        let m = c.metrics();
        assert!((m.accuracy - 0.93).abs() < 1e-12);
        assert!((m.precision - 0.8).abs() < 1e-12);
        assert!((m.recall - 8.0 / 13.0).abs() < 1e-12);
    }

    #[test]
    fn separable_data_scores_perfectly() {
        let cols = vec![Column::new("x", ColumnKind::Continuous)];
        let rows: Vec<Vec<f64>> = (0..200).map(|i| vec![if i < 40 { i as f64 } else { i as f64 + 100.0 }]).collect();
        let labels: Vec<u8> = (0..200).map(|i| (i < 40) as u8).collect();
        let d = Dataset::new(cols, rows, labels).unwrap();
        let params = GbdtParams { trees: 5, learning_rate: 1.0, min_leaf_rows: 5, ..Default::default() };
        for rebalance in [false, true] {
            let r = cross_validate(&d, &params, 10, rebalance, 3).unwrap();
            assert_eq!(r.mean.accuracy, 1.0);
            assert!(r.folds.iter().all(|f| f.leaked_rows == 0));
        }
    }

    #[test]
    fn too_few_rows() {
        let cols = vec![Column::new("x", ColumnKind::Continuous)];
        let d = Dataset::new(cols, vec![vec![0.0]; 5], vec![0, 1, 0, 1, 0]).unwrap();
        assert!(matches!(
            cross_validate(&d, &GbdtParams::default(), 10, false, 0),
            Err(Error::InsufficientData(_))
        ));
    }
}
