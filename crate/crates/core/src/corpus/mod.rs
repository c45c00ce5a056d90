//! Corpus ingest: platform registry, text units and the line-delimited
//! record loader.
//!
//! Articles are segmented into one [`TextUnit`] per paragraph with id
//! `record_id * 1000 + ordinal`; messages become a single unit and are
//! dropped when they have fewer than four words after cleaning.

mod clean;
mod links;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use clean::{admit_message, clean_text, extract_urls, segment_article, strip_tags};
pub use links::{domain_share_timeseries, registrable_domain, top_linked_entities, DailyDomainShare, UrlPattern};

/// Paragraph ids are `record_id * PARAGRAPH_STRIDE + ordinal`.
pub const PARAGRAPH_STRIDE: u64 = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct PlatformId(pub u32);

impl PlatformId {
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlatformKind {
    NewsSite,
    TelegramChannel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Platform {
    pub id: PlatformId,
    pub name: String,
    pub kind: PlatformKind,
}

/// Dense platform table. Ids are assigned in registration order.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct PlatformRegistry {
    platforms: Vec<Platform>,
    #[serde(skip)]
    by_name: HashMap<String, PlatformId>,
    /// Reject records naming platforms that were not registered up front.
    #[serde(default)]
    pub closed: bool,
}

impl PlatformRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_platforms(platforms: impl IntoIterator<Item = (String, PlatformKind)>) -> Result<Self> {
        let mut reg = Self::new();
        for (name, kind) in platforms {
            if reg.lookup(&name).is_some() {
                return Err(Error::InvalidParameter(format!("platform {name:?} registered twice")));
            }
            reg.register(&name, kind)?;
        }
        Ok(reg)
    }

    /// Returns the existing id when `name` is already known.
    pub fn register(&mut self, name: &str, kind: PlatformKind) -> Result<PlatformId> {
        if name.is_empty() {
            return Err(Error::InvalidParameter("platform name must be non-empty".into()));
        }
        if let Some(id) = self.lookup(name) {
            return Ok(id);
        }
        let id = PlatformId(self.platforms.len() as u32);
        self.platforms.push(Platform { id, name: name.to_owned(), kind });
        self.by_name.insert(name.to_owned(), id);
        Ok(id)
    }

    pub fn lookup(&self, name: &str) -> Option<PlatformId> {
        self.by_name.get(name).copied()
    }

    pub fn get(&self, id: PlatformId) -> Option<&Platform> {
        self.platforms.get(id.index())
    }

    pub fn name(&self, id: PlatformId) -> &str {
        self.get(id).map(|p| p.name.as_str()).unwrap_or("?")
    }

    pub fn platforms(&self) -> &[Platform] {
        &self.platforms
    }

    pub fn len(&self) -> usize {
        self.platforms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.platforms.is_empty()
    }

    pub fn of_kind(&self, kind: PlatformKind) -> Vec<PlatformId> {
        self.platforms.iter().filter(|p| p.kind == kind).map(|p| p.id).collect()
    }

    fn rebuild_index(&mut self) {
        self.by_name = self.platforms.iter().map(|p| (p.name.clone(), p.id)).collect();
    }
}

/// Inclusive calendar window. `None` bounds are open.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StudyWindow {
    pub start: Option<NaiveDate>,
    pub end: Option<NaiveDate>,
}

impl StudyWindow {
    pub fn unbounded() -> Self {
        Self::default()
    }

    pub fn new(start: NaiveDate, end: NaiveDate) -> Self {
        Self { start: Some(start), end: Some(end) }
    }

    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start.is_none_or(|s| date >= s) && self.end.is_none_or(|e| date <= e)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowPolicy {
    #[default]
    DropAndCount,
    Error,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TextUnit {
    pub unit_id: u64,
    pub platform_id: PlatformId,
    pub channel_label: Option<String>,
    pub date: NaiveDate,
    pub lang: String,
    pub text: String,
    pub hyperlinks: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RecordKind {
    Article,
    Message,
}

/// One input line.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawRecord {
    pub id: u64,
    pub platform: String,
    #[serde(default)]
    pub channel: Option<String>,
    pub date: NaiveDate,
    pub lang: String,
    pub kind: RecordKind,
    pub text: String,
    #[serde(default)]
    pub links: Vec<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlatformIngest {
    pub records: usize,
    pub articles: usize,
    pub messages: usize,
    pub admitted_messages: usize,
    pub paragraphs: usize,
    pub dropped_short: usize,
    pub dropped_out_of_window: usize,
    pub dropped_empty_paragraphs: usize,
    pub units: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub records_read: usize,
    pub units: usize,
    pub dropped_short: usize,
    pub dropped_out_of_window: usize,
    pub per_platform: BTreeMap<String, PlatformIngest>,
}

#[derive(Debug, Clone, Default)]
pub struct LoadOptions {
    pub window: StudyWindow,
    pub window_policy: WindowPolicy,
}

/// Immutable once built; safe to share across threads.
#[derive(Debug, Clone, Default)]
pub struct CorpusStore {
    registry: PlatformRegistry,
    units: Vec<TextUnit>,
    by_platform: BTreeMap<PlatformId, Vec<usize>>,
    by_id: HashMap<u64, usize>,
    exclusions: BTreeMap<String, BTreeSet<String>>,
}

impl CorpusStore {
    pub fn new(mut registry: PlatformRegistry) -> Self {
        registry.rebuild_index();
        Self { registry, ..Default::default() }
    }

    /// Builds a store from already-constructed units.
    pub fn from_units(registry: PlatformRegistry, units: Vec<TextUnit>) -> Result<Self> {
        let mut store = Self::new(registry);
        for unit in units {
            store.push(unit)?;
        }
        Ok(store)
    }

    fn push(&mut self, unit: TextUnit) -> Result<()> {
        if self.registry.get(unit.platform_id).is_none() {
            return Err(Error::UnknownPlatform(format!("#{}", unit.platform_id.0)));
        }
        if unit.text.is_empty() {
            return Err(Error::Format(format!("unit {} has empty text", unit.unit_id)));
        }
        if self.by_id.contains_key(&unit.unit_id) {
            return Err(Error::DuplicateUnit(unit.unit_id));
        }
        let pos = self.units.len();
        self.by_id.insert(unit.unit_id, pos);
        self.by_platform.entry(unit.platform_id).or_default().push(pos);
        self.units.push(unit);
        Ok(())
    }

    pub fn registry(&self) -> &PlatformRegistry {
        &self.registry
    }

    pub fn units(&self) -> &[TextUnit] {
        &self.units
    }

    pub fn len(&self) -> usize {
        self.units.len()
    }

    pub fn is_empty(&self) -> bool {
        self.units.is_empty()
    }

    pub fn unit(&self, unit_id: u64) -> Option<&TextUnit> {
        self.by_id.get(&unit_id).map(|&i| &self.units[i])
    }

    pub fn platform_units(&self, id: PlatformId) -> impl Iterator<Item = &TextUnit> {
        self.by_platform.get(&id).into_iter().flatten().map(|&i| &self.units[i])
    }

    pub fn add_exclusion_set(&mut self, name: &str, labels: impl IntoIterator<Item = String>) {
        self.exclusions.entry(name.to_owned()).or_default().extend(labels);
    }

    pub fn exclusion_set(&self, name: &str) -> Option<&BTreeSet<String>> {
        self.exclusions.get(name)
    }

    /// Platforms whose name, or the channel label of any of whose units,
    /// appears in `labels`.
    pub fn resolve_exclusions<'a>(&self, labels: impl IntoIterator<Item = &'a String>) -> BTreeSet<PlatformId> {
        let labels: BTreeSet<&str> = labels.into_iter().map(String::as_str).collect();
        let mut out = BTreeSet::new();
        for p in self.registry.platforms() {
            if labels.contains(p.name.as_str()) {
                out.insert(p.id);
            }
        }
        for u in &self.units {
            if let Some(label) = &u.channel_label {
                if labels.contains(label.as_str()) {
                    out.insert(u.platform_id);
                }
            }
        }
        out
    }

    /// Earliest and latest unit dates.
    pub fn date_span(&self) -> Option<(NaiveDate, NaiveDate)> {
        let min = self.units.iter().map(|u| u.date).min()?;
        let max = self.units.iter().map(|u| u.date).max()?;
        Some((min, max))
    }

    /// Writes units as JSON lines, one [`TextUnit`] per line.
    pub fn write_units_jsonl(&self, out: &mut impl std::io::Write) -> std::io::Result<()> {
        for u in &self.units {
            serde_json::to_writer(&mut *out, u)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Rebuilds a store from a registry and the output of
    /// [`CorpusStore::write_units_jsonl`].
    pub fn read_units_jsonl(registry: PlatformRegistry, path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let mut store = Self::new(registry);
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let unit: TextUnit = serde_json::from_str(&line)
                .map_err(|e| Error::MalformedRecord { line: n + 1, message: e.to_string() })?;
            store.push(unit)?;
        }
        Ok(store)
    }
}

/// Parses one JSON line.
pub fn parse_record(line: &str, line_no: usize) -> Result<RawRecord> {
    serde_json::from_str(line).map_err(|e| Error::MalformedRecord { line: line_no, message: e.to_string() })
}

fn read_records(path: &Path) -> Result<Vec<(usize, RawRecord)>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push((n + 1, parse_record(&line, n + 1)?));
    }
    Ok(out)
}

/// Loads one corpus file. See [`load_corpus_files`].
pub fn load_corpus(path: &Path, registry: PlatformRegistry, opts: &LoadOptions) -> Result<(CorpusStore, IngestReport)> {
    load_corpus_files(&[path], registry, opts)
}

/// Parses files in parallel, then builds the store single-threaded in file
/// order so unit order is independent of scheduling.
pub fn load_corpus_files<P: AsRef<Path> + Sync>(
    paths: &[P],
    registry: PlatformRegistry,
    opts: &LoadOptions,
) -> Result<(CorpusStore, IngestReport)> {
    let parsed: Vec<Result<Vec<(usize, RawRecord)>>> = paths.par_iter().map(|p| read_records(p.as_ref())).collect();
    let mut builder = CorpusBuilder::new(registry, opts.clone());
    for records in parsed {
        for (line, rec) in records? {
            builder.add_record(line, rec)?;
        }
    }
    Ok(builder.finish())
}

/// Incremental single-writer construction from raw records.
pub struct CorpusBuilder {
    store: CorpusStore,
    report: IngestReport,
    opts: LoadOptions,
}

impl CorpusBuilder {
    pub fn new(registry: PlatformRegistry, opts: LoadOptions) -> Self {
        Self { store: CorpusStore::new(registry), report: IngestReport::default(), opts }
    }

    pub fn add_record(&mut self, line: usize, rec: RawRecord) -> Result<()> {
        self.report.records_read += 1;
        let default_kind = match rec.kind {
            RecordKind::Article => PlatformKind::NewsSite,
            RecordKind::Message => PlatformKind::TelegramChannel,
        };
        let platform_id = match self.store.registry.lookup(&rec.platform) {
            Some(id) => id,
            None if self.store.registry.closed => return Err(Error::UnknownPlatform(rec.platform)),
            None => self.store.registry.register(&rec.platform, default_kind)?,
        };
        let stats = self.report.per_platform.entry(rec.platform.clone()).or_default();
        stats.records += 1;

        if !self.opts.window.contains(rec.date) {
            if self.opts.window_policy == WindowPolicy::Error {
                return Err(Error::DateOutsideWindow { line, date: rec.date });
            }
            stats.dropped_out_of_window += 1;
            self.report.dropped_out_of_window += 1;
            return Ok(());
        }

        let mut pending = Vec::new();
        match rec.kind {
            RecordKind::Message => {
                stats.messages += 1;
                let text = clean_text(&rec.text);
                if !admit_message(&text) {
                    stats.dropped_short += 1;
                    self.report.dropped_short += 1;
                    return Ok(());
                }
                stats.admitted_messages += 1;
                let mut links = rec.links.clone();
                for url in extract_urls(&rec.text) {
                    if !links.contains(&url) {
                        links.push(url);
                    }
                }
                pending.push((rec.id, text, links));
            }
            RecordKind::Article => {
                stats.articles += 1;
                let base = rec.id.checked_mul(PARAGRAPH_STRIDE).ok_or_else(|| {
                    Error::MalformedRecord { line, message: format!("article id {} overflows paragraph ids", rec.id) }
                })?;
                let mut orphan_links: Vec<String> = rec.links.clone();
                for url in extract_urls(&rec.text) {
                    if !orphan_links.contains(&url) {
                        orphan_links.push(url);
                    }
                }
                let stripped = strip_tags(&rec.text);
                let mut ordinal = 0u64;
                for par in segment_article(&stripped) {
                    let text = clean_text(&par);
                    if text.is_empty() {
                        stats.dropped_empty_paragraphs += 1;
                        continue;
                    }
                    if ordinal >= PARAGRAPH_STRIDE {
                        return Err(Error::MalformedRecord {
                            line,
                            message: format!("article {} has more than {PARAGRAPH_STRIDE} paragraphs", rec.id),
                        });
                    }
                    let unit_id = base.checked_add(ordinal).ok_or_else(|| Error::MalformedRecord {
                        line,
                        message: format!("article id {} overflows paragraph ids", rec.id),
                    })?;
                    let links: Vec<String> = extract_urls(&par);
                    orphan_links.retain(|l| !links.contains(l));
                    pending.push((unit_id, text, links));
                    ordinal += 1;
                }
                // Links only present in the record's link list go to the
                // first paragraph.
                if let Some(first) = pending.first_mut() {
                    first.2.extend(orphan_links);
                }
                stats.paragraphs += pending.len();
            }
        }

        for (unit_id, text, hyperlinks) in pending {
            self.store.push(TextUnit {
                unit_id,
                platform_id,
                channel_label: rec.channel.clone(),
                date: rec.date,
                lang: rec.lang.clone(),
                text,
                hyperlinks,
            })?;
            self.report.units += 1;
            self.report.per_platform.get_mut(&rec.platform).expect("stats entry").units += 1;
        }
        Ok(())
    }

    pub fn finish(self) -> (CorpusStore, IngestReport) {
        (self.store, self.report)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn write_lines(lines: &[String]) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        for l in lines {
            writeln!(f, "{l}").unwrap();
        }
        f
    }

    fn article(id: u64, text: &str) -> String {
        serde_json::json!({"id": id, "platform": "rt.com", "channel": null, "date": "2022-03-01",
            "lang": "ru", "kind": "article", "text": text, "links": []})
        .to_string()
    }

    fn message(id: u64, text: &str) -> String {
        serde_json::json!({"id": id, "platform": "chan", "channel": "@chan", "date": "2022-03-02",
            "lang": "ru", "kind": "message", "text": text, "links": ["https://youtube.com/c/E"]})
        .to_string()
    }

    #[test]
    fn articles_are_segmented() {
        let f = write_lines(&[article(1, "a b\nc d\te f"), article(2, "g\nh\n\ni")]);
        let (store, report) = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap();
        assert_eq!(store.len(), 6);
        assert_eq!(report.units, 6);
        let ids: Vec<u64> = store.units().iter().map(|u| u.unit_id).collect();
        assert_eq!(ids, vec![1000, 1001, 1002, 2000, 2001, 2002]);
        assert_eq!(store.registry().get(PlatformId(0)).unwrap().kind, PlatformKind::NewsSite);
    }

    #[test]
    fn short_messages_dropped() {
        let f = write_lines(&[message(7, "one two three")]);
        let (store, report) = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap();
        assert_eq!(store.len(), 0);
        assert_eq!(report.dropped_short, 1);
        assert_eq!(report.per_platform["chan"].dropped_short, 1);
    }

    #[test]
    fn admission_after_cleaning() {
        // four tokens only before URL removal
        let f = write_lines(&[message(7, "one two three https://t.me/x"), message(8, "one two 🚀 three four")]);
        let (store, _) = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap();
        assert_eq!(store.len(), 1);
        let u = store.unit(8).unwrap();
        assert_eq!(u.text, "one two three four");
        assert_eq!(u.channel_label.as_deref(), Some("@chan"));
    }

    #[test]
    fn hyperlinks_survive_cleaning() {
        let f = write_lines(&[message(9, "look here https://t.me/rian_ru/5 for more")]);
        let (store, _) = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap();
        let u = store.unit(9).unwrap();
        assert_eq!(u.text, "look here for more");
        assert_eq!(u.hyperlinks, vec!["https://youtube.com/c/E", "https://t.me/rian_ru/5"]);
    }

    #[test]
    fn duplicate_ids_rejected() {
        let f = write_lines(&[message(5, "a b c d"), message(5, "e f g h")]);
        let err = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::DuplicateUnit(5)), "{err}");
        assert!(err.to_string().contains('5'));
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let f = write_lines(&[message(1, "a b c d"), "{not json".into()]);
        let err = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { line: 2, .. }), "{err}");
    }

    #[test]
    fn window_policies() {
        let f = write_lines(&[message(1, "a b c d"), message(2, "e f g h")]);
        let window = StudyWindow::new(
            NaiveDate::from_ymd_opt(2022, 1, 1).unwrap(),
            NaiveDate::from_ymd_opt(2022, 3, 1).unwrap(),
        );
        let opts = LoadOptions { window, window_policy: WindowPolicy::DropAndCount };
        let (store, report) = load_corpus(f.path(), PlatformRegistry::new(), &opts).unwrap();
        assert_eq!(store.len(), 0);
        assert_eq!(report.dropped_out_of_window, 2);
        let opts = LoadOptions { window, window_policy: WindowPolicy::Error };
        let err = load_corpus(f.path(), PlatformRegistry::new(), &opts).unwrap_err();
        assert!(matches!(err, Error::DateOutsideWindow { line: 1, .. }));
    }

    #[test]
    fn paragraph_id_overflow() {
        let f = write_lines(&[article(u64::MAX / 10, "a\nb")]);
        let err = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap_err();
        assert!(matches!(err, Error::MalformedRecord { .. }));
    }

    #[test]
    fn closed_registry_rejects_unknown() {
        let mut reg = PlatformRegistry::from_platforms([("rt.com".to_string(), PlatformKind::NewsSite)]).unwrap();
        reg.closed = true;
        let f = write_lines(&[message(1, "a b c d")]);
        assert!(matches!(
            load_corpus(f.path(), reg, &LoadOptions::default()),
            Err(Error::UnknownPlatform(_))
        ));
    }

    #[test]
    fn unit_count_matches_report() {
        let f = write_lines(&[
            article(1, "x y\n\nz w"),
            message(2, "a b"),
            message(3, "a b c d"),
            article(4, "<p>🚀</p>\nreal paragraph"),
        ]);
        let (store, report) = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap();
        let admitted: usize = report.per_platform.values().map(|p| p.admitted_messages).sum();
        let paragraphs: usize = report.per_platform.values().map(|p| p.paragraphs).sum();
        assert_eq!(store.len(), admitted + paragraphs);
        assert_eq!(store.len(), 4);
        assert_eq!(report.per_platform["rt.com"].dropped_empty_paragraphs, 1);
    }

    #[test]
    fn units_jsonl_roundtrip() {
        let f = write_lines(&[article(1, "x y\nz w"), message(3, "a b c d")]);
        let (store, _) = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap();
        let mut buf = Vec::new();
        store.write_units_jsonl(&mut buf).unwrap();
        let out = write_lines(&[String::from_utf8(buf).unwrap().trim_end().to_owned()]);
        let reg: PlatformRegistry = serde_json::from_str(&serde_json::to_string(store.registry()).unwrap()).unwrap();
        let again = CorpusStore::read_units_jsonl(reg, out.path()).unwrap();
        assert_eq!(again.units(), store.units());
        assert_eq!(again.registry().lookup("chan"), store.registry().lookup("chan"));
    }

    #[test]
    fn exclusions_resolve_by_name_and_label() {
        let f = write_lines(&[message(1, "a b c d"), article(2, "x y z")]);
        let (mut store, _) = load_corpus(f.path(), PlatformRegistry::new(), &LoadOptions::default()).unwrap();
        store.add_exclusion_set("official", ["@chan".to_string()]);
        let ex = store.resolve_exclusions(store.exclusion_set("official").unwrap());
        assert_eq!(ex.into_iter().collect::<Vec<_>>(), vec![store.registry().lookup("chan").unwrap()]);
        let ex = store.resolve_exclusions(&["rt.com".to_string()]);
        assert!(ex.contains(&store.registry().lookup("rt.com").unwrap()));
    }
}
