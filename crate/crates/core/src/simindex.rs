//! Directional correspondence between corpora and the platform similarity
//! built from it.
//!
//! A unit of corpus A *corresponds* to corpus B when some unit of B has
//! cosine similarity ≥ τ with it. Similarity between two platforms is the
//! geometric mean of the two directional fractions.

use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::corpus::{CorpusStore, PlatformId, PlatformKind};
use crate::vectors::{correspondence_flags, cosine, normalize, EmbeddingBlock};
use crate::{mix_seed, Error, Result};

pub const DEFAULT_THRESHOLD: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorrespondenceResult {
    pub fraction_a_in_b: f64,
    pub fraction_b_in_a: f64,
    pub matched_a: Vec<u64>,
    pub matched_b: Vec<u64>,
    pub threshold: f64,
}

impl CorrespondenceResult {
    pub fn similarity(&self) -> f64 {
        platform_similarity(self)
    }
}

/// Both directional fractions from a single pass over all pairs.
pub fn correspondence(a: &EmbeddingBlock, b: &EmbeddingBlock, tau: f64) -> Result<CorrespondenceResult> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("correspondence needs units on both sides".into()));
    }
    let (fa, fb) = correspondence_flags(a, b, tau)?;
    let pick = |block: &EmbeddingBlock, flags: &[bool]| -> Vec<u64> {
        block.ids().iter().zip(flags).filter(|(_, &m)| m).map(|(&id, _)| id).collect()
    };
    let matched_a = pick(a, &fa);
    let matched_b = pick(b, &fb);
    Ok(CorrespondenceResult {
        fraction_a_in_b: matched_a.len() as f64 / a.len() as f64,
        fraction_b_in_a: matched_b.len() as f64 / b.len() as f64,
        matched_a,
        matched_b,
        threshold: tau,
    })
}

pub fn gmean(p: f64, q: f64) -> f64 {
    (p * q).sqrt()
}

pub fn platform_similarity(r: &CorrespondenceResult) -> f64 {
    gmean(r.fraction_a_in_b, r.fraction_b_in_a)
}

/// Maps platform names onto pseudo-platform groups. Unmapped platforms stay
/// their own group.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AggregationMap {
    pub groups: BTreeMap<String, String>,
}

pub const TELEGRAM_AGGREGATE: &str = "telegram_aggregate";

impl AggregationMap {
    /// Every Telegram channel folded into one `telegram_aggregate` group.
    pub fn telegram_aggregate(store: &CorpusStore) -> Self {
        let groups = store
            .registry()
            .platforms()
            .iter()
            .filter(|p| p.kind == PlatformKind::TelegramChannel)
            .map(|p| (p.name.clone(), TELEGRAM_AGGREGATE.to_owned()))
            .collect();
        Self { groups }
    }

    pub fn group_of<'a>(&'a self, name: &'a str) -> &'a str {
        self.groups.get(name).map(String::as_str).unwrap_or(name)
    }
}

/// Splits an embedding block into per-group blocks using the corpus store.
/// Group order follows the first platform id of each group. Rows whose ids
/// are not in the store are an error.
pub fn group_blocks(
    store: &CorpusStore,
    block: &EmbeddingBlock,
    platforms: &[PlatformId],
    map: &AggregationMap,
) -> Result<Vec<(String, EmbeddingBlock)>> {
    let mut order: Vec<String> = Vec::new();
    let mut wanted: BTreeMap<PlatformId, usize> = BTreeMap::new();
    for &pid in platforms {
        let g = map.group_of(store.registry().name(pid)).to_owned();
        let gi = match order.iter().position(|x| *x == g) {
            Some(i) => i,
            None => {
                order.push(g);
                order.len() - 1
            }
        };
        wanted.insert(pid, gi);
    }
    let mut rows: Vec<Vec<usize>> = vec![Vec::new(); order.len()];
    for (i, &id) in block.ids().iter().enumerate() {
        let unit = store.unit(id).ok_or(Error::UnknownUnit(id))?;
        if let Some(&g) = wanted.get(&unit.platform_id) {
            rows[g].push(i);
        }
    }
    Ok(order.into_iter().zip(rows).map(|(g, r)| (g, block.select(&r))).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairSimilarity {
    pub platform_a: String,
    pub platform_b: String,
    pub frac_a_in_b: f64,
    pub frac_b_in_a: f64,
    pub sim: f64,
}

/// Symmetric, diagonal fixed at 1.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlatformSimilarityMatrix {
    pub platforms: Vec<String>,
    pub sim: Vec<Vec<f64>>,
    pub pairs: Vec<PairSimilarity>,
    pub threshold: f64,
}

impl PlatformSimilarityMatrix {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.sim[a][b]
    }
}

/// All unordered pairs, computed in parallel and assembled in `(i, j)` order.
pub fn similarity_matrix(groups: &[(String, EmbeddingBlock)], tau: f64) -> Result<PlatformSimilarityMatrix> {
    if groups.len() < 2 {
        return Err(Error::InvalidParameter("similarity matrix needs at least two platforms".into()));
    }
    if let Some((name, _)) = groups.iter().find(|(_, b)| b.is_empty()) {
        return Err(Error::EmptyInput(format!("platform {name} has no units")));
    }
    let n = groups.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (i + 1..n).map(move |j| (i, j))).collect();
    let results: Vec<PairSimilarity> = pairs
        .par_iter()
        .map(|&(i, j)| {
            let r = correspondence(&groups[i].1, &groups[j].1, tau)?;
            Ok(PairSimilarity {
                platform_a: groups[i].0.clone(),
                platform_b: groups[j].0.clone(),
                frac_a_in_b: r.fraction_a_in_b,
                frac_b_in_a: r.fraction_b_in_a,
                sim: r.similarity(),
            })
        })
        .collect::<Result<_>>()?;
    let mut sim = vec![vec![0.0; n]; n];
    for (i, row) in sim.iter_mut().enumerate() {
        row[i] = 1.0;
    }
    for (&(i, j), r) in pairs.iter().zip(&results) {
        sim[i][j] = r.sim;
        sim[j][i] = r.sim;
    }
    Ok(PlatformSimilarityMatrix { platforms: groups.iter().map(|g| g.0.clone()).collect(), sim, pairs: results, threshold: tau })
}

/// Channels ranked by similarity to `website`, descending, ties by label.
pub fn most_similar_channels(
    website: &EmbeddingBlock,
    channels: &[(String, EmbeddingBlock)],
    tau: f64,
    k: usize,
) -> Result<Vec<(String, f64)>> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be positive".into()));
    }
    let mut scored: Vec<(String, f64)> = channels
        .par_iter()
        .map(|(name, block)| Ok((name.clone(), correspondence(website, block, tau)?.similarity())))
        .collect::<Result<_>>()?;
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    scored.truncate(k);
    Ok(scored)
}

#[derive(Debug, Clone)]
pub struct LabeledPair {
    pub a: Vec<f32>,
    pub b: Vec<f32>,
    pub same_topic: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub threshold: f64,
    pub n: usize,
    /// `None` when the bucket is empty.
    pub precision: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub half_width: f64,
    pub sample_n: usize,
    pub seed: u64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self { half_width: 0.01, sample_n: 250, seed: 0 }
    }
}

/// For each threshold, samples up to `sample_n` labeled pairs whose cosine
/// lies in `[t - half_width, t + half_width]` and reports the fraction
/// labeled same-topic.
pub fn threshold_precision_sweep(pairs: &[LabeledPair], thresholds: &[f64], cfg: &SweepConfig) -> Result<Vec<SweepRow>> {
    let sims: Vec<f64> = pairs
        .iter()
        .map(|p| cosine(&normalize(&p.a)?, &normalize(&p.b)?))
        .collect::<Result<_>>()?;
    Ok(thresholds
        .iter()
        .enumerate()
        .map(|(ti, &t)| {
            let bucket: Vec<usize> =
                (0..pairs.len()).filter(|&i| sims[i] >= t - cfg.half_width && sims[i] <= t + cfg.half_width).collect();
            let take = bucket.len().min(cfg.sample_n);
            let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, ti as u64));
            let mut chosen: Vec<usize> = sample(&mut rng, bucket.len(), take).into_iter().map(|i| bucket[i]).collect();
            chosen.sort_unstable();
            let positive = chosen.iter().filter(|&&i| pairs[i].same_topic).count();
            SweepRow { threshold: t, n: take, precision: (take > 0).then(|| positive as f64 / take as f64) }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basis(dim: usize, ids: &[u64], axes: &[usize]) -> EmbeddingBlock {
        let mut data = vec![0.0; ids.len() * dim];
        for (r, &a) in axes.iter().enumerate() {
            data[r * dim + a] = 1.0;
        }
        EmbeddingBlock::new(dim, ids.to_vec(), data).unwrap()
    }

    #[test]
    fn self_correspondence_is_total() {
        let a = basis(4, &[1, 2, 3], &[0, 1, 2]);
        let r = correspondence(&a, &a, 0.8).unwrap();
        assert_eq!((r.fraction_a_in_b, r.fraction_b_in_a), (1.0, 1.0));
    }

    #[test]
    fn orthogonal_corpora_do_not_correspond() {
        let a = basis(4, &[1, 2], &[0, 1]);
        let b = basis(4, &[3, 4], &[2, 3]);
        let r = correspondence(&a, &b, 0.8).unwrap();
        assert_eq!((r.fraction_a_in_b, r.fraction_b_in_a), (0.0, 0.0));
        assert_eq!(platform_similarity(&r), 0.0);
    }

    #[test]
    fn empty_side_is_error() {
        let a = basis(4, &[1], &[0]);
        let e = EmbeddingBlock::new(4, vec![], vec![]).unwrap();
        assert!(correspondence(&a, &e, 0.8).is_err());
    }

    #[test]
    fn gmean_examples() {
        let r = |p, q| CorrespondenceResult {
            fraction_a_in_b: p,
            fraction_b_in_a: q,
            matched_a: vec![],
            matched_b: vec![],
            threshold: 0.8,
        };
        assert!((platform_similarity(&r(0.25, 0.04)) - 0.1).abs() < 1e-15);
        assert_eq!(platform_similarity(&r(1.0, 1.0)), 1.0);
        assert_eq!(platform_similarity(&r(0.0, 0.7)), 0.0);
    }

    #[test]
    fn matrix_examples() {
        let g = vec![("a".to_string(), basis(3, &[1], &[0])), ("b".to_string(), basis(3, &[2], &[0]))];
        let m = similarity_matrix(&g, 0.8).unwrap();
        assert_eq!(m.get(0, 1), 1.0);
        let g = vec![
            ("a".to_string(), basis(3, &[1], &[0])),
            ("b".to_string(), basis(3, &[2], &[1])),
            ("c".to_string(), basis(3, &[3], &[2])),
        ];
        let m = similarity_matrix(&g, 0.8).unwrap();
        assert_eq!(m.sim, vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0], vec![0.0, 0.0, 1.0]]);
        assert!(similarity_matrix(&g[..1], 0.8).is_err());
        let mut bad = g.clone();
        bad[1].1 = EmbeddingBlock::new(3, vec![], vec![]).unwrap();
        assert!(similarity_matrix(&bad, 0.8).is_err());
    }

    #[test]
    fn ranking_examples() {
        let web = basis(4, &[1, 2], &[0, 1]);
        let channels = vec![
            ("zero".to_string(), basis(4, &[10], &[3])),
            ("copy".to_string(), basis(4, &[20, 21], &[0, 1])),
            ("half".to_string(), basis(4, &[30], &[0])),
        ];
        let r = most_similar_channels(&web, &channels, 0.8, 3).unwrap();
        assert_eq!(r[0], ("copy".to_string(), 1.0));
        assert_eq!(r[1], ("half".to_string(), (0.5f64).sqrt()));
        assert_eq!(r[2], ("zero".to_string(), 0.0));
        assert!(most_similar_channels(&web, &channels, 0.8, 0).is_err());
    }

    fn pair_at(cos: f64, same: bool) -> LabeledPair {
        let s = (1.0 - cos * cos).sqrt();
        LabeledPair { a: vec![1.0, 0.0], b: vec![cos as f32, s as f32], same_topic: same }
    }

    #[test]
    fn sweep_examples() {
        let pairs = vec![pair_at(0.8, true), pair_at(0.805, true), pair_at(0.6, false), pair_at(0.605, true)];
        let rows = threshold_precision_sweep(&pairs, &[0.6, 0.7, 0.8], &SweepConfig::default()).unwrap();
        assert_eq!(rows[0], SweepRow { threshold: 0.6, n: 2, precision: Some(0.5) });
        assert_eq!(rows[1], SweepRow { threshold: 0.7, n: 0, precision: None });
        assert_eq!(rows[2], SweepRow { threshold: 0.8, n: 2, precision: Some(1.0) });
    }

    #[test]
    fn sweep_samples_without_replacement() {
        let pairs: Vec<LabeledPair> = (0..1000).map(|i| pair_at(0.7, i % 4 == 0)).collect();
        let cfg = SweepConfig { sample_n: 250, seed: 3, ..SweepConfig::default() };
        let a = threshold_precision_sweep(&pairs, &[0.7], &cfg).unwrap();
        let b = threshold_precision_sweep(&pairs, &[0.7], &cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a[0].n, 250);
        let p = a[0].precision.unwrap();
        assert!((p - 0.25).abs() < 0.1, "{p}");
    }
}
