//! External clustering scores against ground truth: ACC and macro-F1 after
//! an optimal cluster-to-class matching, NMI, and ARI.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Optimal assignment for a square cost matrix (Kuhn-Munkres with row
/// potentials, `O(m³)`). Returns `perm` with row `i` matched to column
/// `perm[i]`.
pub fn hungarian(cost: &Array2<f64>) -> Result<Vec<usize>> {
    let (m, cols) = cost.dim();
    if m != cols {
        return Err(Error::shape("hungarian cost", format!("{m}x{m}"), format!("{m}x{cols}")));
    }
    if let Some(((row, col), _)) = cost.indexed_iter().find(|(_, v)| !v.is_finite()) {
        return Err(Error::NonFiniteCost { row, col });
    }
    if m == 0 {
        return Ok(Vec::new());
    }
    // 1-based arrays; column 0 is the virtual start of each augmenting path.
    let mut u = vec![0.0; m + 1];
    let mut v = vec![0.0; m + 1];
    let mut row_of = vec![0usize; m + 1];
    let mut way = vec![0usize; m + 1];
    for i in 1..=m {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; m + 1];
        let mut used = vec![false; m + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=m {
                if used[j] {
                    continue;
                }
                let reduced = cost[[i0 - 1, j - 1]] - u[i0] - v[j];
                if reduced < minv[j] {
                    minv[j] = reduced;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=m {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut perm = vec![0usize; m];
    for j in 1..=m {
        perm[row_of[j] - 1] = j - 1;
    }
    Ok(perm)
}

/// Counts of (predicted cluster, true class) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct ContingencyTable {
    pub counts: Array2<u64>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::LengthMismatch {
                pred: pred.len(),
                truth: truth.len(),
            });
        }
        let kp = pred.iter().max().map_or(0, |m| m + 1);
        let kt = truth.iter().max().map_or(0, |m| m + 1);
        let mut counts = Array2::<u64>::zeros((kp, kt));
        for (&p, &t) in pred.iter().zip(truth) {
            counts[[p, t]] += 1;
        }
        Ok(ContingencyTable {
            counts,
            n: pred.len() as u64,
        })
    }

    fn row_sums(&self) -> Vec<u64> {
        self.counts.rows().into_iter().map(|r| r.sum()).collect()
    }

    fn col_sums(&self) -> Vec<u64> {
        self.counts.columns().into_iter().map(|c| c.sum()).collect()
    }

    /// Best cluster → class map, zero-padding to square. Clusters matched to
    /// a padding column map to `None`.
    ///
    /// Matches maximize hits first. Ties are broken by the summed per-class
    /// F1 `2·n_ij / (r_i + c_j)`, which keeps macro-F1 independent of how
    /// the clusters happen to be numbered.
    pub fn best_mapping(&self) -> Result<Vec<Option<usize>>> {
        let (kp, kt) = self.counts.dim();
        let m = kp.max(kt);
        let rows = self.row_sums();
        let cols = self.col_sums();
        // F1 sums stay below m, so this weight never outranks one hit.
        let weight = 0.5 / (m as f64 + 1.0);
        let mut cost = Array2::<f64>::zeros((m, m));
        for ((i, j), &c) in self.counts.indexed_iter() {
            let f1 = if c > 0 { 2.0 * c as f64 / (rows[i] + cols[j]) as f64 } else { 0.0 };
            cost[[i, j]] = -(c as f64) - weight * f1;
        }
        let perm = hungarian(&cost)?;
        Ok((0..kp).map(|i| Some(perm[i]).filter(|&j| j < kt)).collect())
    }
}

/// Fraction of nodes whose cluster maps to their class under the optimal
/// matching.
pub fn accuracy(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n == 0 {
        return Ok(0.0);
    }
    let mapping = table.best_mapping()?;
    let hits: u64 = mapping
        .iter()
        .enumerate()
        .filter_map(|(i, m)| m.map(|j| table.counts[[i, j]]))
        .sum();
    Ok(hits as f64 / table.n as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum NmiNormalization {
    /// `√(H(pred)·H(truth))`
    #[default]
    Geometric,
    /// `(H(pred) + H(truth)) / 2`
    Arithmetic,
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    nmi_with(pred, truth, NmiNormalization::Geometric)
}

pub fn nmi_with(pred: &[usize], truth: &[usize], normalization: NmiNormalization) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n == 0 {
        return Ok(0.0);
    }
    let n = table.n as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let hp = entropy(&rows, n);
    let ht = entropy(&cols, n);
    if hp == 0.0 && ht == 0.0 {
        // both partitions are a single block
        return Ok(1.0);
    }
    if hp == 0.0 || ht == 0.0 {
        return Ok(0.0);
    }
    let mut mi = 0.0;
    for ((i, j), &c) in table.counts.indexed_iter() {
        if c > 0 {
            let c = c as f64;
            mi += c / n * (n * c / (rows[i] as f64 * cols[j] as f64)).ln();
        }
    }
    let denom = match normalization {
        NmiNormalization::Geometric => (hp * ht).sqrt(),
        NmiNormalization::Arithmetic => 0.5 * (hp + ht),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn pairs(c: u64) -> f64 {
    let c = c as f64;
    c * (c - 1.0) / 2.0
}

pub fn ari(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let index: f64 = table.counts.iter().map(|&c| pairs(c)).sum();
    let a: f64 = table.row_sums().into_iter().map(pairs).sum();
    let b: f64 = table.col_sums().into_iter().map(pairs).sum();
    let total = pairs(table.n);
    if total == 0.0 {
        return Ok(1.0);
    }
    let expected = a * b / total;
    let max = 0.5 * (a + b);
    if max == expected {
        // both partitions trivial (all singletons or one block each)
        return Ok(if index == max { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Macro F1 over the classes present in `truth`, after remapping `pred`
/// with the accuracy matching. Undefined precision or recall gives F1 = 0.
pub fn macro_f1(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let mapping = table.best_mapping()?;
    let kt = table.counts.ncols();
    let mapped: Vec<Option<usize>> = pred.iter().map(|&p| mapping[p]).collect();
    let mut tp = vec![0u64; kt];
    let mut fp = vec![0u64; kt];
    let mut fn_ = vec![0u64; kt];
    for (&m, &t) in mapped.iter().zip(truth) {
        match m {
            Some(c) if c == t => tp[t] += 1,
            Some(c) => {
                fp[c] += 1;
                fn_[t] += 1;
            }
            None => fn_[t] += 1,
        }
    }
    let present: Vec<usize> = (0..kt).filter(|&c| tp[c] + fn_[c] > 0).collect();
    if present.is_empty() {
        return Ok(0.0);
    }
    let total: f64 = present
        .iter()
        .map(|&c| {
            if tp[c] + fp[c] == 0 || tp[c] == 0 {
                return 0.0;
            }
            let precision = tp[c] as f64 / (tp[c] + fp[c]) as f64;
            let recall = tp[c] as f64 / (tp[c] + fn_[c]) as f64;
            2.0 * precision * recall / (precision + recall)
        })
        .sum();
    Ok(total / present.len() as f64)
}

/// ACC, NMI, ARI and macro-F1 together.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusteringScores {
    pub acc: f64,
    pub nmi: f64,
    pub ari: f64,
    pub f1: f64,
}

impl ClusteringScores {
    pub fn evaluate(pred: &[usize], truth: &[usize]) -> Result<Self> {
        Self::evaluate_with(pred, truth, NmiNormalization::Geometric)
    }

    pub fn evaluate_with(pred: &[usize], truth: &[usize], normalization: NmiNormalization) -> Result<Self> {
        Ok(ClusteringScores {
            acc: accuracy(pred, truth)?,
            nmi: nmi_with(pred, truth, normalization)?,
            ari: ari(pred, truth)?,
            f1: macro_f1(pred, truth)?,
        })
    }
}

impl std::fmt::Display for ClusteringScores {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "ACC={:.4} NMI={:.4} ARI={:.4} F1={:.4}",
            self.acc, self.nmi, self.ari, self.f1
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn total(cost: &Array2<f64>, perm: &[usize]) -> f64 {
        perm.iter().enumerate().map(|(i, &j)| cost[[i, j]]).sum()
    }

    #[test]
    fn hungarian_small_example() {
        let cost = array![[4.0, 1.0, 3.0], [2.0, 0.0, 5.0], [3.0, 2.0, 2.0]];
        let perm = hungarian(&cost).unwrap();
        assert_eq!(perm, vec![1, 0, 2]);
        assert_eq!(total(&cost, &perm), 5.0);
    }

    #[test]
    fn hungarian_avoids_costly_diagonal() {
        let cost = Array2::<f64>::eye(3);
        let perm = hungarian(&cost).unwrap();
        assert_eq!(total(&cost, &perm), 0.0);
        assert!(perm.iter().enumerate().all(|(i, &j)| i != j));
    }

    #[test]
    fn hungarian_ties_give_identity() {
        let cost = Array2::from_elem((4, 4), 2.5);
        assert_eq!(hungarian(&cost).unwrap(), vec![0, 1, 2, 3]);
    }

    #[test]
    fn hungarian_rejects_nan() {
        let cost = array![[0.0, f64::NAN], [1.0, 1.0]];
        assert!(matches!(hungarian(&cost), Err(Error::NonFiniteCost { row: 0, col: 1 })));
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&[0, 1, 2, 1], &[0, 1, 2, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[2, 0, 1, 0], &[0, 1, 2, 1]).unwrap(), 1.0);
        assert_eq!(accuracy(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap(), 0.75);
        assert!(matches!(accuracy(&[0], &[0, 1]), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn nmi_examples() {
        assert!((nmi(&[1, 1, 0, 0, 2], &[0, 0, 2, 2, 1]).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(nmi(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
        assert!(nmi(&[0, 0, 1, 1], &[0, 1, 0, 1]).unwrap().abs() < 1e-15);
    }

    #[test]
    fn ari_examples() {
        assert_eq!(ari(&[0, 0, 1, 1, 2], &[1, 1, 0, 0, 2]).unwrap(), 1.0);
        assert_eq!(ari(&[0, 0, 0, 0], &[0, 0, 1, 1]).unwrap(), 0.0);
    }

    #[test]
    fn macro_f1_examples() {
        assert_eq!(macro_f1(&[0, 1, 2], &[0, 1, 2]).unwrap(), 1.0);
        assert!((macro_f1(&[0, 0, 1, 1], &[0, 1, 1, 1]).unwrap() - 11.0 / 15.0).abs() < 1e-15);
        // a class never predicted contributes zero
        let f1 = macro_f1(&[0, 0, 0, 1], &[0, 0, 2, 1]).unwrap();
        assert!((f1 - (0.8 + 1.0 + 0.0) / 3.0).abs() < 1e-12, "{f1}");
    }

    #[test]
    fn scores_display() {
        let s = ClusteringScores { acc: 1.0, nmi: 0.5, ari: 0.25, f1: 0.125 };
        assert_eq!(s.to_string(), "ACC=1.0000 NMI=0.5000 ARI=0.2500 F1=0.1250");
    }
}
