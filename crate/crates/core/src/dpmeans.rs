//! Spherical DP-Means over unit-norm embeddings.
//!
//! Points are compared by cosine similarity. A point whose best center is
//! less than λ similar spawns a new cluster seeded at itself; centers are the
//! re-normalized means of their members. There is no random initialization
//! or reinitialization, so a fixed row order always yields the same result.
//!
//! The objective minimized is `Σ (1 − cos(x, center(x))) + (1 − λ)·k`, for
//! which "create when best similarity < λ" is exactly the cost-lowering rule.

use std::collections::{BTreeMap, HashMap};

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{CorpusStore, PlatformId};
use crate::vectors::{dot_f64, EmbeddingBlock};
use crate::{Error, Result};

#[derive(Debug, Clone)]
pub struct DpMeansConfig {
    pub lambda: f64,
    pub max_iters: usize,
    /// Rows per assignment batch. New centers become visible at batch
    /// boundaries.
    pub batch_size: usize,
}

impl Default for DpMeansConfig {
    fn default() -> Self {
        Self { lambda: 0.8, max_iters: 50, batch_size: 256 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TopicCluster {
    pub cluster_id: u32,
    #[serde(skip)]
    pub center: Vec<f64>,
    pub members: Vec<u64>,
    /// Filled by [`Clustering::annotate`].
    pub platform_counts: BTreeMap<PlatformId, usize>,
    pub earliest: BTreeMap<PlatformId, NaiveDate>,
}

impl TopicCluster {
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn center_f32(&self) -> Vec<f32> {
        self.center.iter().map(|&x| x as f32).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Clustering {
    pub clusters: Vec<TopicCluster>,
    /// Cluster index per block row.
    pub assignment: Vec<u32>,
    pub unit_ids: Vec<u64>,
    pub lambda: f64,
    pub iterations: usize,
    pub converged: bool,
    pub objective: f64,
    /// Objective after each full iteration.
    pub objective_history: Vec<f64>,
}

impl Clustering {
    pub fn k(&self) -> usize {
        self.clusters.len()
    }

    pub fn cluster_of(&self, unit_id: u64) -> Option<u32> {
        self.unit_ids.iter().position(|&u| u == unit_id).map(|i| self.assignment[i])
    }

    pub fn assignment_map(&self) -> HashMap<u64, u32> {
        self.unit_ids.iter().copied().zip(self.assignment.iter().copied()).collect()
    }

    /// Fills per-platform member counts and earliest dates from the corpus.
    pub fn annotate(&mut self, store: &CorpusStore) -> Result<()> {
        for c in &mut self.clusters {
            c.platform_counts.clear();
            c.earliest.clear();
            for &id in &c.members {
                let u = store.unit(id).ok_or(Error::UnknownUnit(id))?;
                *c.platform_counts.entry(u.platform_id).or_default() += 1;
                c.earliest.entry(u.platform_id).and_modify(|d| *d = (*d).min(u.date)).or_insert(u.date);
            }
        }
        Ok(())
    }
}

fn best_center(x: &[f32], centers: &[Vec<f64>]) -> Option<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, c) in centers.iter().enumerate() {
        let s = dot_f64(x, c);
        if best.is_none_or(|(_, b)| s > b) {
            best = Some((i, s));
        }
    }
    best
}

fn objective(block: &EmbeddingBlock, assignment: &[usize], centers: &[Vec<f64>], lambda: f64) -> f64 {
    let cost: f64 = (0..block.len()).map(|i| 1.0 - dot_f64(block.row(i), &centers[assignment[i]])).sum();
    cost + (1.0 - lambda) * centers.len() as f64
}

/// Spherical mean of each cluster's members; unchanged when the members
/// cancel exactly. Returns `None` for clusters with no members.
fn update_centers(block: &EmbeddingBlock, assignment: &[usize], centers: &[Vec<f64>]) -> Vec<Option<Vec<f64>>> {
    let mut members: Vec<Vec<usize>> = vec![Vec::new(); centers.len()];
    for (i, &c) in assignment.iter().enumerate() {
        members[c].push(i);
    }
    let dim = block.dim();
    members
        .par_iter()
        .zip(centers.par_iter())
        .map(|(rows, old)| {
            if rows.is_empty() {
                return None;
            }
            let mut sum = vec![0f64; dim];
            for &r in rows {
                for (s, &x) in sum.iter_mut().zip(block.row(r)) {
                    *s += x as f64;
                }
            }
            let n = sum.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                return Some(old.clone());
            }
            Some(sum.into_iter().map(|x| x / n).collect())
        })
        .collect()
}

pub fn fit(block: &EmbeddingBlock, cfg: &DpMeansConfig) -> Result<Clustering> {
    if block.is_empty() {
        return Err(Error::EmptyInput("cannot cluster an empty block".into()));
    }
    if !(cfg.lambda > 0.0 && cfg.lambda < 1.0) {
        return Err(Error::InvalidParameter(format!("lambda {} outside (0, 1)", cfg.lambda)));
    }
    if cfg.batch_size == 0 || cfg.max_iters == 0 {
        return Err(Error::InvalidParameter("batch_size and max_iters must be positive".into()));
    }
    let lambda = cfg.lambda;
    let n = block.len();
    let mut centers: Vec<Vec<f64>> = Vec::new();
    let mut assignment: Vec<usize> = vec![usize::MAX; n];
    let mut history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    while iterations < cfg.max_iters {
        iterations += 1;
        let mut changed = 0usize;
        let mut created = 0usize;

        for start in (0..n).step_by(cfg.batch_size) {
            let end = (start + cfg.batch_size).min(n);
            let best: Vec<Option<(usize, f64)>> =
                (start..end).into_par_iter().map(|i| best_center(block.row(i), &centers)).collect();
            let first_new = centers.len();
            for (i, b) in (start..end).zip(best) {
                let mut choice = b;
                if choice.is_none_or(|(_, s)| s < lambda) {
                    // Centers spawned earlier in this synchronization.
                    let fresh = best_center(block.row(i), &centers[first_new..]).map(|(c, s)| (c + first_new, s));
                    match fresh {
                        Some((c, s)) if s >= lambda => choice = Some((c, s)),
                        _ => {
                            centers.push(block.row(i).iter().map(|&x| x as f64).collect());
                            created += 1;
                            choice = Some((centers.len() - 1, 1.0));
                        }
                    }
                }
                let (c, _) = choice.expect("assigned");
                if assignment[i] != c {
                    changed += 1;
                    assignment[i] = c;
                }
            }
        }

        // Update pass, dropping empty clusters and compacting indices.
        let updated = update_centers(block, &assignment, &centers);
        let mut remap = vec![usize::MAX; centers.len()];
        let mut kept = Vec::with_capacity(centers.len());
        for (old, c) in updated.into_iter().enumerate() {
            if let Some(c) = c {
                remap[old] = kept.len();
                kept.push(c);
            }
        }
        centers = kept;
        for a in &mut assignment {
            *a = remap[*a];
        }

        history.push(objective(block, &assignment, &centers, lambda));
        if changed == 0 && created == 0 {
            converged = true;
            break;
        }
    }

    let mut members: Vec<Vec<u64>> = vec![Vec::new(); centers.len()];
    for (i, &c) in assignment.iter().enumerate() {
        members[c].push(block.ids()[i]);
    }
    let clusters = centers
        .into_iter()
        .zip(members)
        .enumerate()
        .map(|(i, (center, members))| TopicCluster {
            cluster_id: i as u32,
            center,
            members,
            platform_counts: BTreeMap::new(),
            earliest: BTreeMap::new(),
        })
        .collect();
    Ok(Clustering {
        clusters,
        assignment: assignment.into_iter().map(|a| a as u32).collect(),
        unit_ids: block.ids().to_vec(),
        lambda,
        iterations,
        converged,
        objective: *history.last().expect("at least one iteration"),
        objective_history: history,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Cohesion {
    /// Mean cosine of each member to its own center.
    pub member_center: f64,
    /// Mean cosine over unordered pairs of distinct centers; `None` for k = 1.
    pub center_center: Option<f64>,
}

pub fn cohesion_stats(c: &Clustering, block: &EmbeddingBlock) -> Result<Cohesion> {
    if c.clusters.is_empty() {
        return Err(Error::EmptyInput("clustering has no clusters".into()));
    }
    let index = block.id_index();
    let mut total = 0.0;
    let mut count = 0usize;
    for (i, &id) in c.unit_ids.iter().enumerate() {
        let row = *index.get(&id).ok_or(Error::UnknownUnit(id))?;
        total += dot_f64(block.row(row), &c.clusters[c.assignment[i] as usize].center);
        count += 1;
    }
    let k = c.clusters.len();
    let center_center = (k >= 2).then(|| {
        let mut s = 0.0;
        for i in 0..k {
            for j in i + 1..k {
                s += c.clusters[i].center.iter().zip(&c.clusters[j].center).map(|(a, b)| a * b).sum::<f64>();
            }
        }
        s / (k * (k - 1) / 2) as f64
    });
    Ok(Cohesion { member_center: total / count as f64, center_center })
}

/// Member most similar to the center; ties go to the lowest unit id.
pub fn representative(cluster: &TopicCluster, block: &EmbeddingBlock, index: &HashMap<u64, usize>) -> Result<u64> {
    let mut best: Option<(u64, f64)> = None;
    for &id in &cluster.members {
        let row = *index.get(&id).ok_or(Error::UnknownUnit(id))?;
        let s = dot_f64(block.row(row), &cluster.center);
        let better = match best {
            None => true,
            Some((bid, bs)) => s > bs || (s == bs && id < bid),
        };
        if better {
            best = Some((id, s));
        }
    }
    best.map(|b| b.0).ok_or_else(|| Error::EmptyInput(format!("cluster {} has no members", cluster.cluster_id)))
}
