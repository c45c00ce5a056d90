//! Planted synthetic data: clustered unit vectors and a small multi-platform
//! corpus with cascading topics, matching embeddings and noisy text.

use std::collections::HashMap;

use chrono::NaiveDate;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson, StandardNormal};

use crate::corpus::{CorpusBuilder, LoadOptions, PlatformKind, PlatformRegistry, RawRecord, RecordKind};
use crate::vectors::EmbeddingBlock;
use crate::{mix_seed, Error, Result};

fn gaussian(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| StandardNormal.sample(rng)).collect()
}

fn unit(v: &[f64]) -> Vec<f64> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `k` mutually orthogonal unit vectors (Gram-Schmidt on Gaussian draws).
fn orthonormal(rng: &mut ChaCha8Rng, k: usize, dim: usize) -> Vec<Vec<f64>> {
    let mut out: Vec<Vec<f64>> = Vec::with_capacity(k);
    while out.len() < k {
        let mut v = gaussian(rng, dim);
        for c in &out {
            let p = dot(&v, c);
            v.iter_mut().zip(c).for_each(|(x, y)| *x -= p * y);
        }
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-6 {
            out.push(unit(&v));
        }
    }
    out
}

/// A point at angle `theta` from `c` in a random direction.
fn tilt(rng: &mut ChaCha8Rng, c: &[f64], theta: f64) -> Vec<f64> {
    let mut u = gaussian(rng, c.len());
    let p = dot(&u, c);
    u.iter_mut().zip(c).for_each(|(x, y)| *x -= p * y);
    let u = unit(&u);
    c.iter().zip(&u).map(|(a, b)| theta.cos() * a + theta.sin() * b).collect()
}

/// `k · per_cluster` unit vectors around `k` orthogonal centers, shuffled.
/// Every within-group pair has cosine above `within_min` and every
/// cross-group pair below `cross_max`. Returns the block (ids `0..n`) and
/// the planted label of each row.
///
/// Panics when `k > dim` or the bounds are outside `(0, 1)`.
pub fn planted_sphere(k: usize, per_cluster: usize, dim: usize, within_min: f64, cross_max: f64, seed: u64) -> (EmbeddingBlock, Vec<usize>) {
    assert!(k <= dim, "need k <= dim for orthogonal centers");
    assert!(within_min > 0.0 && within_min < 1.0 && cross_max > 0.0 && cross_max < 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers = orthonormal(&mut rng, k, dim);
    // Angles to the center bounded by θ keep within pairs under 2θ apart and
    // cross pairs (orthogonal centers) over π/2 − 2θ apart.
    let theta = 0.95 * (within_min.acos() / 2.0).min(cross_max.asin() / 2.0);
    let mut rows: Vec<(usize, Vec<f64>)> = Vec::with_capacity(k * per_cluster);
    for (label, c) in centers.iter().enumerate() {
        for _ in 0..per_cluster {
            let angle = theta * rng.random::<f64>();
            rows.push((label, tilt(&mut rng, c, angle)));
        }
    }
    rows.shuffle(&mut rng);
    let labels = rows.iter().map(|r| r.0).collect();
    let data: Vec<f32> = rows.iter().flat_map(|r| r.1.iter().map(|&x| x as f32)).collect();
    let n = rows.len() as u64;
    let block = EmbeddingBlock::from_raw(dim, (0..n).collect(), data).expect("nonzero planted rows");
    (block, labels)
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub topics: usize,
    pub dim: usize,
    pub start: NaiveDate,
    pub days: i64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self { seed: 2022, topics: 185, dim: 32, start: NaiveDate::from_ymd_opt(2022, 2, 1).expect("valid date"), days: 150 }
    }
}

#[derive(Debug, Clone)]
pub struct SynthCorpus {
    pub records: Vec<RawRecord>,
    /// Rows for every unit the records produce on ingest, in unit-id order.
    pub embeddings: EmbeddingBlock,
    /// Planted topic of each row of `embeddings`.
    pub topics: Vec<u32>,
}

/// Consecutive topic ids grouped under one theme.
pub const TOPICS_PER_THEME: usize = 5;
pub const SYNTH_SITES: [&str; 3] = ["alpha-news.ru", "beta-times.com", "gamma-herald.org"];
pub const SYNTH_CHANNELS: [&str; 3] = ["tg_delta", "tg_epsilon", "tg_zeta"];
const EXTERNAL: [&str; 5] = ["ria.ru", "tass.com", "bbc.co.uk", "youtube.com", "t.me"];
/// Message ids start here so they never collide with paragraph ids.
const MESSAGE_ID_BASE: u64 = 1_000_000_000_000;
const FILLER: [&str; 24] = [
    "the", "report", "said", "today", "officials", "new", "city", "after", "week", "according", "sources", "region",
    "statement", "people", "update", "local", "near", "more", "latest", "news", "channel", "breaking", "photo", "video",
];
const SYLLABLES: [&str; 16] = ["ka", "lo", "mi", "ner", "vo", "sta", "pri", "dun", "gor", "bel", "ski", "tra", "zem", "lin", "or", "vas"];

/// Platform `j` causes on average `W[j][k]` events on `k`. Channel zeta drives
/// the sites; delta and epsilon mostly echo each other.
const CASCADE: [[f64; 6]; 6] = [
    [0.05, 0.10, 0.05, 0.02, 0.02, 0.00],
    [0.10, 0.05, 0.05, 0.00, 0.02, 0.02],
    [0.05, 0.05, 0.05, 0.02, 0.00, 0.02],
    [0.05, 0.05, 0.00, 0.05, 0.25, 0.05],
    [0.00, 0.05, 0.05, 0.25, 0.05, 0.05],
    [0.30, 0.25, 0.20, 0.10, 0.10, 0.10],
];

fn word(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(2..=3);
    (0..n).map(|_| SYLLABLES[rng.random_range(0..SYLLABLES.len())]).collect()
}

fn sentence(rng: &mut ChaCha8Rng, vocab: &[String], min: usize, max: usize) -> String {
    let n = rng.random_range(min..=max);
    (0..n)
        .map(|_| if rng.random_bool(0.5) { vocab[rng.random_range(0..vocab.len())].clone() } else { FILLER[rng.random_range(0..FILLER.len())].to_string() })
        .collect::<Vec<_>>()
        .join(" ")
}

fn url(rng: &mut ChaCha8Rng, own: Option<&str>, slug: &str) -> String {
    let domain = match own {
        Some(d) if rng.random_bool(0.3) => d.to_string(),
        _ => EXTERNAL[rng.random_range(0..EXTERNAL.len())].to_string(),
    };
    format!("https://{domain}/{slug}/{}", rng.random_range(100..1000))
}

/// Event on platform index `p` at day offset `day`.
struct Event {
    platform: usize,
    day: i64,
}

fn cascade(rng: &mut ChaCha8Rng, origin: usize, start: i64, days: i64) -> Vec<Event> {
    let roots = rng.random_range(1..=3);
    let mut events: Vec<Event> = (0..roots).map(|_| Event { platform: origin, day: start }).collect();
    let mut frontier = 0;
    // Excitation is boosted so topics spread; the total is capped per topic.
    while frontier < events.len() && events.len() < 60 {
        let (j, t) = (events[frontier].platform, events[frontier].day);
        for (k, &w) in CASCADE[j].iter().enumerate() {
            let n = Poisson::new(2.6 * w).map(|p| p.sample(rng) as usize).unwrap_or(0);
            for _ in 0..n {
                let lag = 1 + (rng.random::<f64>().ln() / 0.5f64.ln()).floor() as i64;
                if t + lag < days {
                    events.push(Event { platform: k, day: t + lag });
                }
            }
        }
        frontier += 1;
    }
    events
}

/// Generates a deterministic corpus over three news sites and three channels
/// along with embeddings for every unit it produces. Topic vectors are
/// Gaussian directions pulled toward a shared theme per
/// [`TOPICS_PER_THEME`] consecutive topics; each unit sits near its topic.
pub fn synth_corpus(cfg: &SynthConfig) -> Result<SynthCorpus> {
    if cfg.topics == 0 || cfg.dim < 2 || cfg.days < 1 {
        return Err(Error::InvalidParameter("synthetic corpus needs topics, dim ≥ 2 and days ≥ 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let names: Vec<&str> = SYNTH_SITES.iter().chain(SYNTH_CHANNELS.iter()).copied().collect();
    // Sibling topics share a theme direction, so cross-topic similarity
    // ranges from unrelated to close.
    let themes: Vec<Vec<f64>> = (0..cfg.topics.div_ceil(TOPICS_PER_THEME)).map(|_| unit(&gaussian(&mut rng, cfg.dim))).collect();
    let centers: Vec<Vec<f64>> = (0..cfg.topics)
        .map(|t| {
            let own = unit(&gaussian(&mut rng, cfg.dim));
            unit(&themes[t / TOPICS_PER_THEME].iter().zip(&own).map(|(a, b)| 0.7 * a + 0.71 * b).collect::<Vec<_>>())
        })
        .collect();

    let mut records = Vec::new();
    let mut record_topic: HashMap<u64, u32> = HashMap::new();
    let (mut next_article, mut next_message) = (1u64, MESSAGE_ID_BASE);
    for (topic, _) in centers.iter().enumerate() {
        let mut trng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, topic as u64));
        let vocab: Vec<String> = (0..6).map(|_| word(&mut trng)).collect();
        let origin = trng.random_range(0..names.len());
        let start = trng.random_range(0..cfg.days);
        let mut events = cascade(&mut trng, origin, start, cfg.days);
        events.sort_by_key(|e| (e.day, e.platform));
        for e in events {
            let date = cfg.start + chrono::Duration::days(e.day);
            let name = names[e.platform];
            let rec = if e.platform < SYNTH_SITES.len() {
                let paragraphs = trng.random_range(1..=3);
                let mut body = Vec::new();
                for p in 0..paragraphs {
                    let mut s = sentence(&mut trng, &vocab, 8, 18);
                    if p == 0 {
                        s = format!("<p><b>{}</b> {s}</p>", vocab[0]);
                    }
                    if trng.random_bool(0.4) {
                        s.push_str(&format!(" {}", url(&mut trng, Some(name), &vocab[1])));
                    }
                    body.push(s);
                }
                next_article += 1;
                RawRecord {
                    id: next_article - 1,
                    platform: name.to_string(),
                    channel: None,
                    date,
                    lang: if trng.random_bool(0.7) { "ru" } else { "uk" }.to_string(),
                    kind: RecordKind::Article,
                    text: body.join("\n"),
                    links: Vec::new(),
                }
            } else {
                let mut s = sentence(&mut trng, &vocab, 5, 14);
                if trng.random_bool(0.3) {
                    s.push_str(" 🔥");
                }
                let mut links = Vec::new();
                if trng.random_bool(0.35) {
                    let u = url(&mut trng, None, &vocab[2]);
                    if trng.random_bool(0.5) {
                        s.push_str(&format!(" {u}"));
                    } else {
                        links.push(u);
                    }
                }
                next_message += 1;
                RawRecord {
                    id: next_message - 1,
                    platform: name.to_string(),
                    channel: Some(name.to_string()),
                    date,
                    lang: "ru".to_string(),
                    kind: RecordKind::Message,
                    text: s,
                    links,
                }
            };
            record_topic.insert(rec.id, topic as u32);
            records.push(rec);
            // Occasional short reactions the admission rule drops.
            if e.platform >= SYNTH_SITES.len() && trng.random_bool(0.05) {
                next_message += 1;
                records.push(RawRecord {
                    id: next_message - 1,
                    platform: name.to_string(),
                    channel: Some(name.to_string()),
                    date,
                    lang: "ru".to_string(),
                    kind: RecordKind::Message,
                    text: "+ 👍 https://t.me/x".to_string(),
                    links: Vec::new(),
                });
            }
        }
    }

    // Ingest to learn exactly which units exist.
    let registry = PlatformRegistry::from_platforms(
        SYNTH_SITES.iter().map(|s| (s.to_string(), PlatformKind::NewsSite)).chain(SYNTH_CHANNELS.iter().map(|s| (s.to_string(), PlatformKind::TelegramChannel))),
    )?;
    let mut builder = CorpusBuilder::new(registry, LoadOptions::default());
    for (i, r) in records.iter().enumerate() {
        builder.add_record(i + 1, r.clone())?;
    }
    let (store, _) = builder.finish();
    let mut ids: Vec<u64> = store.units().iter().map(|u| u.unit_id).collect();
    ids.sort_unstable();

    let topic_of_unit = |unit_id: u64| -> u32 {
        let rec = if unit_id >= MESSAGE_ID_BASE { unit_id } else { unit_id / crate::corpus::PARAGRAPH_STRIDE };
        record_topic[&rec]
    };

    let mut data = Vec::with_capacity(ids.len() * cfg.dim);
    let mut topics = Vec::with_capacity(ids.len());
    let mut erng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, u64::MAX));
    for &id in &ids {
        let t = topic_of_unit(id);
        let angle = 0.45 * erng.random::<f64>();
        let v = tilt(&mut erng, &centers[t as usize], angle);
        data.extend(v.iter().map(|&x| x as f32));
        topics.push(t);
    }
    let embeddings = EmbeddingBlock::from_raw(cfg.dim, ids, data)?;
    Ok(SynthCorpus { records, embeddings, topics })
}
