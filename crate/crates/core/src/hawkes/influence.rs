use serde::Serialize;

use super::ParentCounts;
use crate::{Error, Result};

/// Percentages over a `K × K` grid, indexed `[j * K + k]` (source `j`,
/// target `k`). The diagonal carries self-excitation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfluenceMatrix {
    pub k: usize,
    pub percent: Vec<f64>,
    /// Per-target background share. Empty for efficiency matrices.
    pub background: Vec<f64>,
    /// Indices with a nonzero denominator: targets for influence, sources
    /// for efficiency. Other rows are omitted from reports.
    pub reported: Vec<bool>,
}

impl InfluenceMatrix {
    pub fn get(&self, j: usize, k: usize) -> f64 {
        self.percent[j * self.k + k]
    }

    pub fn self_percent(&self, k: usize) -> f64 {
        self.get(k, k)
    }

    pub fn is_efficiency(&self) -> bool {
        self.background.is_empty()
    }

    /// `(source, target, percent)` report rows. Influence emits per target a
    /// `background` row, a `self` row and one row per other source.
    /// Efficiency emits per source one row per other target and a `self` row.
    pub fn rows(&self, labels: &[String]) -> Result<Vec<(String, String, f64)>> {
        if labels.len() != self.k {
            return Err(Error::DimMismatch { left: self.k, right: labels.len() });
        }
        let mut out = Vec::new();
        if self.is_efficiency() {
            for j in (0..self.k).filter(|&j| self.reported[j]) {
                for k in (0..self.k).filter(|&k| k != j) {
                    out.push((labels[j].clone(), labels[k].clone(), self.get(j, k)));
                }
                out.push(("self".to_string(), labels[j].clone(), self.get(j, j)));
            }
        } else {
            for k in (0..self.k).filter(|&k| self.reported[k]) {
                out.push(("background".to_string(), labels[k].clone(), self.background[k]));
                out.push(("self".to_string(), labels[k].clone(), self.get(k, k)));
                for j in (0..self.k).filter(|&j| j != k) {
                    out.push((labels[j].clone(), labels[k].clone(), self.get(j, k)));
                }
            }
        }
        Ok(out)
    }
}

/// `percent[j][k] = 100 · parents[j][k] / N_k` and
/// `background[k] = 100 · background_k / N_k`. Targets with `N_k = 0` are
/// left at zero and marked unreported.
pub fn influence_percent(agg: &ParentCounts) -> InfluenceMatrix {
    let k = agg.k;
    let mut percent = vec![0.0; k * k];
    let mut background = vec![0.0; k];
    let reported: Vec<bool> = agg.totals.iter().map(|&n| n > 0.0).collect();
    for t in (0..k).filter(|&t| reported[t]) {
        let n = agg.totals[t];
        background[t] = 100.0 * agg.background[t] / n;
        for j in 0..k {
            percent[j * k + t] = 100.0 * agg.parent(j, t) / n;
        }
    }
    InfluenceMatrix { k, percent, background, reported }
}

/// `eff[j][k] = 100 · parents[j][k] / N_j`; sources with `N_j = 0` are
/// unreported.
pub fn efficiency(agg: &ParentCounts) -> InfluenceMatrix {
    let k = agg.k;
    let mut percent = vec![0.0; k * k];
    let reported: Vec<bool> = agg.totals.iter().map(|&n| n > 0.0).collect();
    for j in (0..k).filter(|&j| reported[j]) {
        for t in 0..k {
            percent[j * k + t] = 100.0 * agg.parent(j, t) / agg.totals[j];
        }
    }
    InfluenceMatrix { k, percent, background: Vec::new(), reported }
}
