//! External clustering metrics: accuracy under optimal label matching,
//! normalized mutual information, adjusted Rand index and macro F1.
//!
//! | metric | range | symmetric in its arguments |
//! |--------|-------|----------------------------|
//! | [`accuracy`] | [0, 1] | no |
//! | [`nmi`] | [0, 1] | yes |
//! | [`ari`] | [-1, 1] | yes |
//! | [`macro_f1`] | [0, 1] | no |
//!
//! Accuracy and macro F1 first map predicted clusters onto true classes with
//! [`hungarian_match`]; when the counts differ the contingency table is
//! zero-padded to square, so surplus clusters match nothing. NMI divides by
//! the arithmetic mean of the two entropies.

mod hungarian;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::DenseMatrix;

pub use hungarian::hungarian_match;

/// Co-occurrence counts between predicted clusters (rows) and true classes
/// (columns), over the distinct ids actually present.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    pub counts: Vec<Vec<u64>>,
    pub pred_ids: Vec<usize>,
    pub true_ids: Vec<usize>,
    pub n: u64,
}

fn distinct(labels: &[usize]) -> Vec<usize> {
    let mut ids = labels.to_vec();
    ids.sort_unstable();
    ids.dedup();
    ids
}

impl ContingencyTable {
    pub fn new(y_true: &[usize], y_pred: &[usize]) -> Result<Self> {
        if y_true.len() != y_pred.len() {
            return Err(Error::Contract(format!(
                "label vectors differ in length: {} true vs {} predicted",
                y_true.len(),
                y_pred.len()
            )));
        }
        if y_true.is_empty() {
            return Err(Error::Contract("label vectors are empty".into()));
        }
        let pred_ids = distinct(y_pred);
        let true_ids = distinct(y_true);
        let mut counts = vec![vec![0u64; true_ids.len()]; pred_ids.len()];
        for (t, p) in y_true.iter().zip(y_pred) {
            let r = pred_ids.binary_search(p).expect("present");
            let c = true_ids.binary_search(t).expect("present");
            counts[r][c] += 1;
        }
        Ok(Self {
            counts,
            pred_ids,
            true_ids,
            n: y_true.len() as u64,
        })
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.true_ids.len())
            .map(|c| self.counts.iter().map(|r| r[c]).sum())
            .collect()
    }

    /// Best cluster → class mapping: `mapping[r]` is the class column matched
    /// to predicted row `r`, or `None` for a surplus cluster.
    pub fn best_mapping(&self) -> Result<Vec<Option<usize>>> {
        let (rows, cols) = (self.pred_ids.len(), self.true_ids.len());
        let k = rows.max(cols);
        let cost = DenseMatrix::from_fn(k, k, |r, c| {
            if r < rows && c < cols {
                -(self.counts[r][c] as f64)
            } else {
                0.0
            }
        });
        let perm = hungarian_match(&cost)?;
        Ok(perm[..rows]
            .iter()
            .map(|&c| (c < cols).then_some(c))
            .collect())
    }
}

/// Fraction of samples correctly labeled under the best one-to-one relabeling
/// of predicted clusters.
pub fn accuracy(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(y_true, y_pred)?;
    let mapping = table.best_mapping()?;
    let hits: u64 = mapping
        .iter()
        .enumerate()
        .filter_map(|(r, c)| c.map(|c| table.counts[r][c]))
        .sum();
    Ok(hits as f64 / table.n as f64)
}

fn entropy(sums: &[u64], n: f64) -> f64 {
    sums.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the arithmetic mean of the entropies.
/// Returns 0 when that mean is 0.
pub fn nmi(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(y_true, y_pred)?;
    let n = table.n as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let mut mi = 0.0;
    for (r, row) in table.counts.iter().enumerate() {
        for (c, &count) in row.iter().enumerate() {
            if count > 0 {
                let joint = count as f64 / n;
                mi += joint * (count as f64 * n / (rows[r] as f64 * cols[c] as f64)).ln();
            }
        }
    }
    let norm = 0.5 * (entropy(&rows, n) + entropy(&cols, n));
    if norm <= 0.0 {
        return Ok(0.0);
    }
    Ok((mi / norm).clamp(0.0, 1.0))
}

fn pairs(c: u64) -> f64 {
    (c as f64) * (c as f64 - 1.0) / 2.0
}

/// Adjusted Rand index. Degenerate cases where the chance-corrected maximum
/// equals the expectation (for example both partitions trivial) score 1.
pub fn ari(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(y_true, y_pred)?;
    let index: f64 = table.counts.iter().flatten().map(|&c| pairs(c)).sum();
    let a: f64 = table.row_sums().into_iter().map(pairs).sum();
    let b: f64 = table.col_sums().into_iter().map(pairs).sum();
    let total = pairs(table.n);
    let expected = if total > 0.0 { a * b / total } else { 0.0 };
    let max = 0.5 * (a + b);
    let denom = max - expected;
    if denom == 0.0 {
        return Ok(1.0);
    }
    Ok(((index - expected) / denom).clamp(-1.0, 1.0))
}

/// Unweighted mean F1 over true classes after optimal cluster relabeling.
/// A class with zero precision and recall contributes 0.
pub fn macro_f1(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(y_true, y_pred)?;
    let mapping = table.best_mapping()?;
    let classes = table.true_ids.len();
    let rows = table.row_sums();
    let cols = table.col_sums();
    let mut predicted = vec![0u64; classes];
    let mut hits = vec![0u64; classes];
    for (r, c) in mapping.iter().enumerate() {
        if let Some(c) = *c {
            predicted[c] += rows[r];
            hits[c] += table.counts[r][c];
        }
    }
    let f1: f64 = (0..classes)
        .map(|c| {
            let precision = if predicted[c] > 0 {
                hits[c] as f64 / predicted[c] as f64
            } else {
                0.0
            };
            let recall = hits[c] as f64 / cols[c] as f64;
            if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            }
        })
        .sum();
    Ok(f1 / classes as f64)
}

/// All four scores for one labeling.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClusteringScores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub f1: f64,
}

impl ClusteringScores {
    pub fn compute(y_true: &[usize], y_pred: &[usize]) -> Result<Self> {
        Ok(Self {
            acc: accuracy(y_true, y_pred)?,
            nmi: nmi(y_true, y_pred)?,
            ari: ari(y_true, y_pred)?,
            f1: macro_f1(y_true, y_pred)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accuracy_cases() {
        assert_eq!(accuracy(&[0, 1, 2, 2], &[0, 1, 2, 2]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 1, 2, 2], &[5, 3, 9, 9]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.75);
        assert!(accuracy(&[0, 1], &[0]).is_err());
    }

    #[test]
    fn accuracy_with_unequal_cluster_counts() {
        // three clusters against two classes: the surplus cluster scores nothing
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 2, 2]).unwrap(), 0.75);
        // one cluster against two classes
        assert_eq!(accuracy(&[0, 0, 0, 1], &[3, 3, 3, 3]).unwrap(), 0.75);
    }

    #[test]
    fn nmi_cases() {
        assert!((nmi(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&[0, 0, 1, 1], &[2, 2, 2, 2]).unwrap(), 0.0);
        assert!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-12);
        assert_eq!(nmi(&[0, 0], &[1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn ari_cases() {
        assert_eq!(ari(&[0, 0, 1, 1], &[3, 3, 1, 1]).unwrap(), 1.0);
        assert!((ari(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap() + 0.5).abs() < 1e-12);
    }

    #[test]
    fn macro_f1_cases() {
        assert_eq!(macro_f1(&[0, 1, 1, 2], &[0, 1, 1, 2]).unwrap(), 1.0);
        assert_eq!(macro_f1(&[0, 1, 1, 2], &[2, 0, 0, 1]).unwrap(), 1.0);
        assert!((macro_f1(&[0, 0, 1, 1], &[0, 0, 0, 0]).unwrap() - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetry_documented() {
        let (a, b) = ([0, 0, 1, 1, 2, 2], [0, 0, 0, 1, 1, 1]);
        // F1 averages over the classes of its first argument: 3 here, 2 reversed
        assert!((macro_f1(&a, &b).unwrap() - 1.6 / 3.0).abs() < 1e-12);
        assert!((macro_f1(&b, &a).unwrap() - 0.8).abs() < 1e-12);
        assert_eq!(nmi(&a, &b).unwrap(), nmi(&b, &a).unwrap());
        assert_eq!(ari(&a, &b).unwrap(), ari(&b, &a).unwrap());
    }

    #[test]
    fn scores_bundle() {
        let s = ClusteringScores::compute(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap();
        assert_eq!((s.acc, s.ari, s.f1), (1.0, 1.0, 1.0));
    }
}
