use std::collections::BTreeMap;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::Serialize;

use super::{efficiency, gibbs_fit, influence_percent, EventMatrix, GibbsConfig, GibbsFit, InfluenceMatrix, ParentCounts, Priors};
use crate::corpus::PlatformId;
use crate::topicflow::TopicTimeline;
use crate::{mix_seed, Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct EcosystemConfig {
    pub min_events: u64,
    pub priors: Priors,
    /// `seed` here is ignored; per-cluster seeds derive from `seed` below.
    pub gibbs: GibbsConfig,
    pub seed: u64,
    /// Fit one model over all clusters laid end to end instead of one per
    /// cluster.
    pub pooled: bool,
}

impl Default for EcosystemConfig {
    fn default() -> Self {
        Self { min_events: 5, priors: Priors::default(), gibbs: GibbsConfig::default(), seed: 0, pooled: false }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterFit {
    pub cluster_id: u32,
    pub events: u64,
    pub fit: GibbsFit,
}

#[derive(Debug, Clone, Serialize)]
pub struct EcosystemFit {
    pub platforms: Vec<PlatformId>,
    /// In cluster-id order. A pooled fit holds one entry with id `u32::MAX`.
    pub clusters: Vec<ClusterFit>,
    pub skipped: usize,
    pub aggregate: ParentCounts,
    pub influence: InfluenceMatrix,
    pub efficiency: InfluenceMatrix,
    pub pooled: bool,
}

pub const POOLED_CLUSTER_ID: u32 = u32::MAX;

fn window(timelines: &[TopicTimeline]) -> Option<(NaiveDate, usize)> {
    let dates = timelines.iter().flat_map(|t| t.events.iter().map(|e| e.date));
    let (lo, hi) = dates.fold(None, |acc: Option<(NaiveDate, NaiveDate)>, d| match acc {
        None => Some((d, d)),
        Some((a, b)) => Some((a.min(d), b.max(d))),
    })?;
    Some((lo, (hi - lo).num_days() as usize + 1))
}

/// Daily counts of `tl` on `platforms` over `days` days from `anchor`.
/// Platforms outside the set are ignored.
pub fn cluster_matrix(tl: &TopicTimeline, platforms: &[PlatformId], anchor: NaiveDate, days: usize) -> Result<EventMatrix> {
    let index: BTreeMap<PlatformId, usize> = platforms.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut m = EventMatrix::zeros(platforms.len(), days)?;
    for e in &tl.events {
        let Some(&k) = index.get(&e.platform) else { continue };
        let off = (e.date - anchor).num_days();
        if off < 0 || off as usize >= days {
            return Err(Error::InvalidParameter(format!("event on {} falls outside the window", e.date)));
        }
        m.add(k, off as usize, e.count as u32);
    }
    Ok(m)
}

/// Fits each `(cluster_id, counts)` independently and sums parent counts in
/// the given order. The seed of cluster `c` is `mix_seed(seed, c)`.
pub fn fit_matrices(matrices: &[(u32, EventMatrix)], cfg: &EcosystemConfig) -> Result<Vec<ClusterFit>> {
    matrices
        .par_iter()
        .map(|(id, m)| {
            let gibbs = GibbsConfig { seed: mix_seed(cfg.seed, *id as u64), ..cfg.gibbs.clone() };
            let fit = gibbs_fit(m, &cfg.priors, &gibbs)?;
            Ok(ClusterFit { cluster_id: *id, events: m.grand_total(), fit })
        })
        .collect()
}

fn summarize(platforms: Vec<PlatformId>, clusters: Vec<ClusterFit>, skipped: usize, pooled: bool) -> EcosystemFit {
    let mut aggregate = ParentCounts::zeros(platforms.len());
    for c in &clusters {
        aggregate.accumulate(&c.fit.parents);
    }
    let influence = influence_percent(&aggregate);
    let eff = efficiency(&aggregate);
    EcosystemFit { platforms, clusters, skipped, aggregate, influence, efficiency: eff, pooled }
}

/// Aggregates already-built matrices; the entry point for simulated
/// ecosystems.
pub fn fit_ecosystem_matrices(platforms: Vec<PlatformId>, matrices: &[(u32, EventMatrix)], cfg: &EcosystemConfig) -> Result<EcosystemFit> {
    let (kept, skipped): (Vec<_>, Vec<_>) = matrices.iter().cloned().partition(|(_, m)| m.grand_total() >= cfg.min_events);
    if kept.is_empty() {
        return Err(Error::EmptyInput(format!("no cluster has at least {} events", cfg.min_events)));
    }
    if cfg.pooled {
        let pooled = concatenate(&kept, cfg.gibbs.max_lag)?;
        let clusters = fit_matrices(&[(POOLED_CLUSTER_ID, pooled)], cfg)?;
        return Ok(summarize(platforms, clusters, skipped.len(), true));
    }
    let clusters = fit_matrices(&kept, cfg)?;
    Ok(summarize(platforms, clusters, skipped.len(), false))
}

/// Trims each matrix to its active span and joins them with `gap` empty days
/// so no excitation crosses a cluster boundary.
fn concatenate(matrices: &[(u32, EventMatrix)], gap: usize) -> Result<EventMatrix> {
    let k = matrices[0].1.platforms();
    let spans: Vec<(usize, usize)> = matrices
        .iter()
        .map(|(_, m)| {
            let active = |t: usize| (0..k).any(|p| m.get(p, t) > 0);
            let first = (0..m.days()).find(|&t| active(t)).unwrap_or(0);
            let last = (0..m.days()).rev().find(|&t| active(t)).unwrap_or(0);
            (first, last)
        })
        .collect();
    let days: usize = spans.iter().map(|(a, b)| b - a + 1).sum::<usize>() + gap * (matrices.len() - 1);
    let mut out = EventMatrix::zeros(k, days)?;
    let mut at = 0;
    for ((_, m), &(first, last)) in matrices.iter().zip(&spans) {
        for t in first..=last {
            for p in 0..k {
                out.set(p, at + t - first, m.get(p, t));
            }
        }
        at += last - first + 1 + gap;
    }
    Ok(out)
}

/// Builds one `K × T` matrix per topic cluster over the global date window of
/// `timelines`, drops clusters below `min_events`, and fits the rest.
pub fn fit_ecosystem(timelines: &[TopicTimeline], platforms: &[PlatformId], cfg: &EcosystemConfig) -> Result<EcosystemFit> {
    if platforms.is_empty() {
        return Err(Error::EmptyInput("no platforms selected".into()));
    }
    let (anchor, days) = window(timelines).ok_or_else(|| Error::EmptyInput("no topic timelines".into()))?;
    let mut ordered: Vec<&TopicTimeline> = timelines.iter().collect();
    ordered.sort_by_key(|t| t.cluster_id);
    let matrices = ordered
        .into_iter()
        .map(|tl| Ok((tl.cluster_id, cluster_matrix(tl, platforms, anchor, days)?)))
        .collect::<Result<Vec<_>>>()?;
    fit_ecosystem_matrices(platforms.to_vec(), &matrices, cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2022, 3, 1).unwrap() + chrono::Duration::days(n)
    }

    fn quick() -> EcosystemConfig {
        EcosystemConfig { gibbs: GibbsConfig { max_lag: 3, iters: 40, burn_in: 20, seed: 0 }, seed: 11, ..Default::default() }
    }

    #[test]
    fn single_cluster_matches_direct_fit() {
        let (a, b) = (PlatformId(0), PlatformId(1));
        let tl = TopicTimeline::from_observations(7, [(a, d(0)), (a, d(0)), (b, d(1)), (a, d(3)), (b, d(4)), (b, d(4))]);
        let cfg = quick();
        let eco = fit_ecosystem(std::slice::from_ref(&tl), &[a, b], &cfg).unwrap();
        let m = cluster_matrix(&tl, &[a, b], d(0), 5).unwrap();
        let direct = gibbs_fit(&m, &cfg.priors, &GibbsConfig { seed: mix_seed(11, 7), ..cfg.gibbs.clone() }).unwrap();
        assert_eq!(eco.clusters.len(), 1);
        assert_eq!(eco.clusters[0].fit.model, direct.model);
        assert_eq!(eco.aggregate, direct.parents);
    }

    #[test]
    fn disjoint_platforms_have_no_cross_parents() {
        let ps = [PlatformId(0), PlatformId(1), PlatformId(2), PlatformId(3)];
        let t1 = TopicTimeline::from_observations(0, (0..6).map(|i| (ps[i % 2], d(i as i64))));
        let t2 = TopicTimeline::from_observations(1, (0..6).map(|i| (ps[2 + i % 2], d(40 + i as i64))));
        let eco = fit_ecosystem(&[t1, t2], &ps, &quick()).unwrap();
        for j in 0..2 {
            for k in 2..4 {
                assert_eq!(eco.aggregate.parent(j, k), 0.0);
                assert_eq!(eco.aggregate.parent(k, j), 0.0);
            }
        }
        assert!(eco.aggregate.partition_error() < 1e-6);
    }

    #[test]
    fn min_events_filter() {
        let a = PlatformId(0);
        let small = TopicTimeline::from_observations(0, [(a, d(0)), (a, d(1))]);
        assert!(fit_ecosystem(std::slice::from_ref(&small), &[a], &quick()).is_err());
        let big = TopicTimeline::from_observations(1, (0..8).map(|i| (a, d(i))));
        let eco = fit_ecosystem(&[small, big], &[a], &quick()).unwrap();
        assert_eq!(eco.skipped, 1);
        assert_eq!(eco.clusters.len(), 1);
    }

    #[test]
    fn pooled_concatenation() {
        let m1 = EventMatrix::from_rows(&[vec![0, 1, 2, 0], vec![0, 0, 1, 0]]).unwrap();
        let m2 = EventMatrix::from_rows(&[vec![3, 0, 0, 0], vec![0, 0, 0, 1]]).unwrap();
        let c = concatenate(&[(0, m1), (1, m2)], 2).unwrap();
        assert_eq!(c.row(0), &[1, 2, 0, 0, 3, 0, 0, 0]);
        assert_eq!(c.row(1), &[0, 1, 0, 0, 0, 0, 0, 1]);
    }
}
