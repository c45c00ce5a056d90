use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use infoflow::corpus::{
    domain_share_timeseries, load_corpus_files, CorpusStore, LoadOptions, PlatformId, PlatformKind, PlatformRegistry, StudyWindow,
    WindowPolicy,
};
use infoflow::dpmeans::{self, DpMeansConfig};
use infoflow::hawkes::{fit_ecosystem, EcosystemConfig, GibbsConfig};
use infoflow::simindex::{group_blocks, most_similar_channels, similarity_matrix, threshold_precision_sweep, AggregationMap, LabeledPair, SweepConfig};
use infoflow::topicflow::{percent_first_on, spread_curve, top_first_posting_channels, ReachUniverse, TopicTimeline};
use infoflow::vectors::{read_block, validate_file, write_block, EmbeddingBlock, ReadOptions};
use infoflow::Error;
use rand::{Rng, SeedableRng};
use serde::Serialize;
use serde_json::json;

use crate::config::PipelineConfig;
use crate::error::{CliError, Result};
use crate::output::{
    create_dir, digest, finish_stage, read_json, require_stage, sha256_file, stage_dir, write_csv, write_json, write_lines, FileDigest,
    StageRecord, STAGE_FILE,
};

const REQUIRED_STAGES: [&str; 5] = ["ingest", "cluster", "similarity", "flow", "influence"];
const OPTIONAL_STAGES: [&str; 1] = ["sweep"];

fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn ingest(cfg: &PipelineConfig) -> Result<()> {
    if cfg.paths.corpus.is_empty() {
        return Err(CliError::Config("ingest needs at least one --corpus file".into()));
    }
    let opts = LoadOptions {
        window: StudyWindow { start: cfg.ingest.start, end: cfg.ingest.end },
        window_policy: if cfg.ingest.strict_window { WindowPolicy::Error } else { WindowPolicy::DropAndCount },
    };
    let (store, report) = load_corpus_files(&cfg.paths.corpus, PlatformRegistry::new(), &opts)?;
    let dir = stage_dir(cfg, "ingest")?;
    write_json(&dir.join("registry.json"), store.registry())?;
    let units_path = dir.join("units.jsonl");
    let file = fs::File::create(&units_path).map_err(|e| CliError::io(&units_path, e))?;
    let mut w = std::io::BufWriter::new(file);
    store.write_units_jsonl(&mut w).and_then(|_| w.flush()).map_err(|e| CliError::io(&units_path, e))?;
    write_json(&dir.join("ingest_report.json"), &report)?;

    for (kind, name) in [(PlatformKind::NewsSite, "domain_shares_sites.csv"), (PlatformKind::TelegramChannel, "domain_shares_channels.csv")] {
        let platforms = store.registry().of_kind(kind);
        if platforms.is_empty() || store.is_empty() {
            continue;
        }
        let series = domain_share_timeseries(&store, &platforms, cfg.ingest.top_domains)?;
        let rows = series.iter().flat_map(|d| {
            d.shares.iter().map(move |(dom, s)| vec![d.date.to_string(), dom.clone(), fmt(*s), d.external_links.to_string()])
        });
        write_csv(&dir.join(name), &["date", "domain", "share", "external_links"], rows)?;
    }
    finish_stage(&dir, "ingest", cfg, &cfg.paths.corpus)?;
    println!("ingest: {} units from {} records -> {}", report.units, report.records_read, dir.display());
    Ok(())
}

pub fn validate_emb(cfg: &PipelineConfig) -> Result<()> {
    if cfg.paths.emb.is_empty() {
        return Err(CliError::Config("validate-emb needs at least one --emb file".into()));
    }
    let mut total = 0;
    for p in &cfg.paths.emb {
        let (dim, count, findings) = validate_file(p)?;
        total += findings.len();
        let findings: Vec<String> = findings.iter().map(ToString::to_string).collect();
        println!("{}", json!({ "file": p.display().to_string(), "dim": dim, "count": count, "findings": findings }));
    }
    if total > 0 {
        return Err(Error::Format(format!("{total} finding(s)")).into());
    }
    Ok(())
}

fn load_store(cfg: &PipelineConfig) -> Result<CorpusStore> {
    let dir = require_stage(cfg, "ingest")?;
    let registry: PlatformRegistry = read_json(&dir.join("registry.json"))?;
    Ok(CorpusStore::read_units_jsonl(registry, &dir.join("units.jsonl"))?)
}

/// Reads and concatenates the embedding files; every row must belong to a
/// stored unit.
fn load_block(cfg: &PipelineConfig, store: &CorpusStore) -> Result<EmbeddingBlock> {
    if cfg.paths.emb.is_empty() {
        return Err(CliError::Config("this stage needs at least one --emb file".into()));
    }
    let opts = ReadOptions { renormalize: cfg.emb.renormalize };
    let mut blocks = cfg.paths.emb.iter().map(|p| read_block(p, opts)).collect::<infoflow::Result<Vec<_>>>()?;
    let block = if blocks.len() == 1 {
        blocks.pop().expect("one block")
    } else {
        let dim = blocks[0].dim();
        let mut ids = Vec::new();
        let mut data = Vec::new();
        for b in &blocks {
            if b.dim() != dim {
                return Err(Error::DimMismatch { left: dim, right: b.dim() }.into());
            }
            ids.extend_from_slice(b.ids());
            data.extend_from_slice(b.data());
        }
        let mut seen = HashSet::new();
        if let Some(&dup) = ids.iter().find(|&&id| !seen.insert(id)) {
            return Err(Error::DuplicateUnit(dup).into());
        }
        EmbeddingBlock::new(dim, ids, data)?
    };
    if let Some(&id) = block.ids().iter().find(|&&id| store.unit(id).is_none()) {
        return Err(Error::UnknownUnit(id).into());
    }
    Ok(block)
}

pub fn cluster(cfg: &PipelineConfig) -> Result<()> {
    let store = load_store(cfg)?;
    let block = load_block(cfg, &store)?;
    let dp = DpMeansConfig { lambda: cfg.cluster.lambda, max_iters: cfg.cluster.max_iters, batch_size: cfg.cluster.batch_size };
    let mut c = dpmeans::fit(&block, &dp)?;
    c.annotate(&store)?;
    let cohesion = dpmeans::cohesion_stats(&c, &block)?;
    let index = block.id_index();
    let dir = stage_dir(cfg, "cluster")?;

    let mut pairs: Vec<(u64, u32)> = c.unit_ids.iter().copied().zip(c.assignment.iter().map(|&a| c.clusters[a as usize].cluster_id)).collect();
    pairs.sort_unstable();
    write_csv(&dir.join("assignments.csv"), &["unit_id", "cluster_id"], pairs.iter().map(|(u, k)| vec![u.to_string(), k.to_string()]))?;

    let reg = store.registry();
    let mut clusters = Vec::with_capacity(c.k());
    for cl in &c.clusters {
        let rep = dpmeans::representative(cl, &block, &index)?;
        clusters.push(json!({
            "cluster_id": cl.cluster_id,
            "size": cl.len(),
            "platforms": cl.platform_counts.iter().map(|(p, n)| (reg.name(*p).to_string(), *n)).collect::<BTreeMap<_, _>>(),
            "earliest": cl.earliest.iter().map(|(p, d)| (reg.name(*p).to_string(), d.to_string())).collect::<BTreeMap<_, _>>(),
            "representative": rep,
            "representative_text": store.unit(rep).map(|u| u.text.as_str()).unwrap_or(""),
        }));
    }
    write_json(&dir.join("clusters.json"), &clusters)?;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "k": c.k(),
            "lambda": c.lambda,
            "iterations": c.iterations,
            "converged": c.converged,
            "objective": c.objective,
            "objective_history": c.objective_history,
            "units_embedded": block.len(),
            "units_without_embedding": store.len() - block.len(),
            "cohesion": cohesion,
        }),
    )?;
    finish_stage(&dir, "cluster", cfg, &cfg.paths.emb)?;
    println!("cluster: {} clusters over {} units ({} iterations) -> {}", c.k(), block.len(), c.iterations, dir.display());
    Ok(())
}

fn aggregation_map(cfg: &PipelineConfig, store: &CorpusStore) -> Result<(AggregationMap, Vec<PathBuf>)> {
    match cfg.paths.aggregate_map.as_deref() {
        None | Some("none") => Ok((AggregationMap::default(), Vec::new())),
        Some("telegram") => Ok((AggregationMap::telegram_aggregate(store), Vec::new())),
        Some(path) => {
            let path = PathBuf::from(path);
            let mut r = csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).from_path(&path).map_err(|e| CliError::parse(&path, e))?;
            let mut groups = BTreeMap::new();
            for rec in r.records() {
                let rec = rec.map_err(|e| CliError::parse(&path, e))?;
                if rec.len() != 2 {
                    return Err(CliError::parse(&path, "expected `name,group` rows"));
                }
                groups.insert(rec[0].trim().to_string(), rec[1].trim().to_string());
            }
            Ok((AggregationMap { groups }, vec![path]))
        }
    }
}

pub fn similarity(cfg: &PipelineConfig) -> Result<()> {
    let store = load_store(cfg)?;
    let block = load_block(cfg, &store)?;
    let (map, map_inputs) = aggregation_map(cfg, &store)?;
    let platforms: Vec<PlatformId> = store.registry().platforms().iter().map(|p| p.id).collect();
    let (groups, empty): (Vec<_>, Vec<_>) = group_blocks(&store, &block, &platforms, &map)?.into_iter().partition(|(_, b)| !b.is_empty());
    let m = similarity_matrix(&groups, cfg.similarity.tau)?;
    let dir = stage_dir(cfg, "similarity")?;
    write_csv(
        &dir.join("similarity.csv"),
        &["platform_a", "platform_b", "frac_a_in_b", "frac_b_in_a", "sim"],
        m.pairs.iter().map(|p| vec![p.platform_a.clone(), p.platform_b.clone(), fmt(p.frac_a_in_b), fmt(p.frac_b_in_a), fmt(p.sim)]),
    )?;
    write_json(
        &dir.join("matrix.json"),
        &json!({
            "threshold": m.threshold,
            "platforms": m.platforms,
            "sim": m.sim,
            "empty_groups": empty.iter().map(|g| &g.0).collect::<Vec<_>>(),
        }),
    )?;

    let reg = store.registry();
    let identity = AggregationMap::default();
    let sites = reg.of_kind(PlatformKind::NewsSite);
    let channels: Vec<(String, EmbeddingBlock)> =
        group_blocks(&store, &block, &reg.of_kind(PlatformKind::TelegramChannel), &identity)?.into_iter().filter(|(_, b)| !b.is_empty()).collect();
    let mut rows = Vec::new();
    if !channels.is_empty() {
        for (name, site) in group_blocks(&store, &block, &sites, &identity)? {
            if site.is_empty() {
                continue;
            }
            for (rank, (ch, s)) in most_similar_channels(&site, &channels, cfg.similarity.tau, cfg.similarity.top_channels.max(1))?.into_iter().enumerate() {
                rows.push(vec![name.clone(), (rank + 1).to_string(), ch, fmt(s)]);
            }
        }
    }
    write_csv(&dir.join("most_similar_channels.csv"), &["website", "rank", "channel", "sim"], rows)?;
    finish_stage(&dir, "similarity", cfg, &[cfg.paths.emb.clone(), map_inputs].concat())?;
    println!("similarity: {} groups at tau {} -> {}", m.platforms.len(), m.threshold, dir.display());
    Ok(())
}

/// Topic timelines rebuilt from the cluster stage's assignments.
fn load_timelines(cfg: &PipelineConfig, store: &CorpusStore) -> Result<Vec<TopicTimeline>> {
    let dir = require_stage(cfg, "cluster")?;
    let path = dir.join("assignments.csv");
    let mut r = csv::Reader::from_path(&path).map_err(|e| CliError::parse(&path, e))?;
    let mut obs: BTreeMap<u32, Vec<(PlatformId, chrono::NaiveDate)>> = BTreeMap::new();
    for rec in r.deserialize::<(u64, u32)>() {
        let (unit_id, cluster_id) = rec.map_err(|e| CliError::parse(&path, e))?;
        let u = store.unit(unit_id).ok_or(Error::UnknownUnit(unit_id))?;
        obs.entry(cluster_id).or_default().push((u.platform_id, u.date));
    }
    Ok(obs.into_iter().map(|(id, o)| TopicTimeline::from_observations(id, o)).collect())
}

fn exclusions(cfg: &PipelineConfig, store: &CorpusStore) -> Result<(BTreeSet<PlatformId>, Vec<PathBuf>)> {
    let Some(path) = &cfg.paths.exclude else { return Ok((BTreeSet::new(), Vec::new())) };
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let labels: Vec<String> =
        text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')).map(str::to_string).collect();
    Ok((store.resolve_exclusions(&labels), vec![path.clone()]))
}

pub fn flow(cfg: &PipelineConfig) -> Result<()> {
    let store = load_store(cfg)?;
    let timelines = load_timelines(cfg, &store)?;
    let (excluded, excl_inputs) = exclusions(cfg, &store)?;
    let reg = store.registry();
    let sites = reg.of_kind(PlatformKind::NewsSite);
    let channels: BTreeSet<PlatformId> = reg.of_kind(PlatformKind::TelegramChannel).into_iter().collect();
    let dir = stage_dir(cfg, "flow")?;

    let mut shares = Vec::new();
    for &site in &sites {
        match percent_first_on(site, &channels, &timelines, &excluded) {
            Ok(s) => shares.push(s),
            Err(Error::EmptyInput(_)) => continue,
            Err(e) => return Err(e.into()),
        }
    }
    write_csv(
        &dir.join("first_posted.csv"),
        &["target", "topic_pct", "text_pct"],
        shares.iter().map(|s| vec![reg.name(s.target).to_string(), fmt(s.topic_pct), fmt(s.text_pct)]),
    )?;
    let detail: Vec<_> = shares
        .iter()
        .map(|s| {
            json!({
                "target": reg.name(s.target),
                "topics": s.topics,
                "counting_topics": s.counting_topics,
                "units": s.units,
                "counting_units": s.counting_units,
                "topic_pct": s.topic_pct,
                "text_pct": s.text_pct,
            })
        })
        .collect();
    write_json(
        &dir.join("first_posted.json"),
        &json!({
            "sources": channels.iter().filter(|p| !excluded.contains(p)).map(|p| reg.name(*p)).collect::<Vec<_>>(),
            "excluded": excluded.iter().map(|p| reg.name(*p)).collect::<Vec<_>>(),
            "targets": detail,
        }),
    )?;

    for (universe, name) in [(ReachUniverse::Both, "spread.csv"), (ReachUniverse::Websites, "spread_websites.csv"), (ReachUniverse::Channels, "spread_channels.csv")] {
        let mut rows = Vec::new();
        for p in reg.platforms() {
            let curve = spread_curve(p.id, &timelines, cfg.flow.horizon_days, universe, reg);
            rows.extend(curve.iter().enumerate().map(|(d, v)| vec![p.name.clone(), d.to_string(), fmt(*v)]));
        }
        write_csv(&dir.join(name), &["origin", "offset_days", "mean_reach"], rows)?;
    }

    let mut rows = Vec::new();
    for &site in &sites {
        let top = top_first_posting_channels(site, &channels, &timelines, &excluded, cfg.flow.top_channels.max(1));
        rows.extend(top.iter().enumerate().map(|(i, (ch, pct))| vec![reg.name(site).to_string(), (i + 1).to_string(), reg.name(*ch).to_string(), fmt(*pct)]));
    }
    write_csv(&dir.join("top_first_channels.csv"), &["target", "rank", "channel", "percent"], rows)?;
    finish_stage(&dir, "flow", cfg, &excl_inputs)?;
    println!("flow: {} topics, {} targets -> {}", timelines.len(), shares.len(), dir.display());
    Ok(())
}

pub fn influence(cfg: &PipelineConfig) -> Result<()> {
    let store = load_store(cfg)?;
    let timelines = load_timelines(cfg, &store)?;
    let reg = store.registry();
    let platforms: Vec<PlatformId> = reg.platforms().iter().map(|p| p.id).collect();
    let labels: Vec<String> = reg.platforms().iter().map(|p| p.name.clone()).collect();
    let h = &cfg.hawkes;
    let eco_cfg = EcosystemConfig {
        min_events: h.min_events,
        priors: h.priors(),
        gibbs: GibbsConfig { max_lag: h.max_lag, iters: h.iters, burn_in: h.burn_in, seed: 0 },
        seed: cfg.seed,
        pooled: h.pooled,
    };
    let eco = fit_ecosystem(&timelines, &platforms, &eco_cfg)?;
    let dir = stage_dir(cfg, "influence")?;
    let to_rows = |rows: Vec<(String, String, f64)>| rows.into_iter().map(|(s, t, p)| vec![s, t, fmt(p)]).collect::<Vec<_>>();
    write_csv(&dir.join("influence.csv"), &["source", "target", "percent"], to_rows(eco.influence.rows(&labels)?))?;
    write_csv(&dir.join("efficiency.csv"), &["source", "target", "percent"], to_rows(eco.efficiency.rows(&labels)?))?;
    let a = &eco.aggregate;
    write_json(
        &dir.join("summary.json"),
        &json!({
            "platforms": labels,
            "pooled": eco.pooled,
            "clusters_fitted": eco.clusters.len(),
            "clusters_skipped": eco.skipped,
            "degenerate_fits": eco.clusters.iter().filter(|c| c.fit.degenerate).count(),
            "events": a.totals,
            "background_parents": a.background,
            "parents": (0..a.k).map(|j| (0..a.k).map(|k| a.parent(j, k)).collect::<Vec<_>>()).collect::<Vec<_>>(),
            "partition_error": a.partition_error(),
            "note": "self rows count events parented by the same platform; they are reported apart from background and cross-platform influence",
        }),
    )?;
    if h.dump_models {
        let models: Vec<_> = eco
            .clusters
            .iter()
            .map(|c| json!({ "cluster_id": c.cluster_id, "events": c.events, "degenerate": c.fit.degenerate, "model": c.fit.model }))
            .collect();
        write_json(&dir.join("models.json"), &models)?;
    }
    finish_stage(&dir, "influence", cfg, &[])?;
    println!("influence: {} cluster fits, {} skipped -> {}", eco.clusters.len(), eco.skipped, dir.display());
    Ok(())
}

pub fn sweep(cfg: &PipelineConfig) -> Result<()> {
    let Some(labels_path) = &cfg.paths.labels else {
        return Err(CliError::Config("sweep needs --labels".into()));
    };
    let store = load_store(cfg)?;
    let block = load_block(cfg, &store)?;
    let index = block.id_index();
    let mut r = csv::Reader::from_path(labels_path).map_err(|e| CliError::parse(labels_path, e))?;
    let mut pairs = Vec::new();
    for rec in r.deserialize::<(u64, u64, String)>() {
        let (a, b, same) = rec.map_err(|e| CliError::parse(labels_path, e))?;
        let same_topic = match same.trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(CliError::parse(labels_path, format!("same_topic must be 0/1/true/false, got `{other}`"))),
        };
        let row = |id: u64| index.get(&id).map(|&i| block.row(i).to_vec()).ok_or(Error::UnknownUnit(id));
        pairs.push(LabeledPair { a: row(a)?, b: row(b)?, same_topic });
    }
    let s = &cfg.sweep;
    let rows = threshold_precision_sweep(&pairs, &s.thresholds, &SweepConfig { half_width: s.half_width, sample_n: s.sample_n, seed: cfg.seed })?;
    let dir = stage_dir(cfg, "sweep")?;
    write_csv(
        &dir.join("sweep.csv"),
        &["threshold", "n", "precision"],
        rows.iter().map(|r| vec![fmt(r.threshold), r.n.to_string(), r.precision.map(fmt).unwrap_or_default()]),
    )?;
    finish_stage(&dir, "sweep", cfg, &[cfg.paths.emb.clone(), vec![labels_path.clone()]].concat())?;
    println!("sweep: {} labeled pairs, {} thresholds -> {}", pairs.len(), rows.len(), dir.display());
    Ok(())
}

#[derive(Serialize)]
struct Artifact {
    path: String,
    sha256: String,
    bytes: u64,
}

#[derive(Serialize)]
struct Manifest {
    tool: &'static str,
    version: &'static str,
    config_hash: String,
    seed: u64,
    stages: Vec<StageRecord>,
    artifacts: Vec<Artifact>,
}

fn sorted_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::io(dir, e))? {
        let p = entry.map_err(|e| CliError::io(dir, e))?.path();
        if p.is_file() {
            files.push(p);
        }
    }
    files.sort();
    Ok(files)
}

pub fn report(cfg: &PipelineConfig) -> Result<()> {
    let mut stages: Vec<(&str, PathBuf)> = REQUIRED_STAGES.iter().map(|s| Ok((*s, require_stage(cfg, s)?))).collect::<Result<_>>()?;
    for s in OPTIONAL_STAGES {
        if let Ok(d) = require_stage(cfg, s) {
            stages.push((s, d));
        }
    }
    let out = cfg.paths.report.clone().unwrap_or_else(|| cfg.out_dir().join("report"));
    if out.exists() {
        if out.join("manifest.json").is_file() {
            fs::remove_dir_all(&out).map_err(|e| CliError::io(&out, e))?;
        } else if fs::read_dir(&out).map_err(|e| CliError::io(&out, e))?.next().is_some() {
            return Err(CliError::Config(format!("report directory {} exists and is not a previous report", out.display())));
        }
    }
    create_dir(&out)?;

    let mut records = Vec::new();
    let mut artifacts = Vec::new();
    for (name, dir) in &stages {
        records.push(read_json::<StageRecord>(&dir.join(STAGE_FILE))?);
        let target = out.join(name);
        create_dir(&target)?;
        for f in sorted_files(dir)? {
            let file_name = f.file_name().expect("file name").to_owned();
            let dest = target.join(&file_name);
            fs::copy(&f, &dest).map_err(|e| CliError::io(&f, e))?;
            let d: FileDigest = digest(&dest)?;
            artifacts.push(Artifact { path: format!("{name}/{}", d.name), sha256: d.sha256, bytes: d.bytes });
        }
    }
    let manifest = Manifest { tool: "infoflow", version: env!("CARGO_PKG_VERSION"), config_hash: cfg.hash(), seed: cfg.seed, stages: records, artifacts };
    let path = out.join("manifest.json");
    write_json(&path, &manifest)?;
    let (sha, _) = sha256_file(&path)?;
    println!("{sha}  {}", path.display());
    Ok(())
}

pub fn synth(out: &Path, seed: u64, topics: usize) -> Result<()> {
    use infoflow::synth::TOPICS_PER_THEME;
    let corpus = infoflow::synth::synth_corpus(&infoflow::synth::SynthConfig { seed, topics, ..Default::default() })?;
    create_dir(out)?;
    write_lines(&out.join("corpus.jsonl"), corpus.records.iter().map(|r| serde_json::to_string(r).expect("record serializes")))?;
    write_block(&out.join("corpus.emb"), &corpus.embeddings)?;

    // Labeled pairs drawn within a topic, across sibling topics of one
    // theme, and uniformly at random.
    let mut by_topic: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for (&id, &t) in corpus.embeddings.ids().iter().zip(&corpus.topics) {
        by_topic.entry(t).or_default().push(id);
    }
    let topic_of: BTreeMap<u64, u32> = corpus.embeddings.ids().iter().copied().zip(corpus.topics.iter().copied()).collect();
    let topic_ids: Vec<u32> = by_topic.keys().copied().collect();
    let ids = corpus.embeddings.ids();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(infoflow::mix_seed(seed, 0x5EED));
    let pick = |rng: &mut rand_chacha::ChaCha8Rng, t: u32| {
        let g = &by_topic[&t];
        g[rng.random_range(0..g.len())]
    };
    let mut rows = Vec::new();
    for i in 0..3000 {
        let t = topic_ids[rng.random_range(0..topic_ids.len())];
        let (a, b) = match i % 3 {
            0 => (pick(&mut rng, t), pick(&mut rng, t)),
            1 => {
                let theme = t as usize / TOPICS_PER_THEME;
                let siblings: Vec<u32> = topic_ids.iter().copied().filter(|&s| s as usize / TOPICS_PER_THEME == theme && s != t).collect();
                if siblings.is_empty() {
                    continue;
                }
                let s = siblings[rng.random_range(0..siblings.len())];
                (pick(&mut rng, t), pick(&mut rng, s))
            }
            _ => (ids[rng.random_range(0..ids.len())], ids[rng.random_range(0..ids.len())]),
        };
        if a != b {
            rows.push(vec![a.to_string(), b.to_string(), u8::from(topic_of[&a] == topic_of[&b]).to_string()]);
        }
    }
    write_csv(&out.join("labels.csv"), &["unit_a", "unit_b", "same_topic"], rows)?;
    write_lines(&out.join("exclude.txt"), ["# channels left out of first-posted attribution".to_string(), "tg_epsilon".to_string()])?;
    println!("synth: {} records, {} embedded units -> {}", corpus.records.len(), corpus.embeddings.len(), out.display());
    Ok(())
}
