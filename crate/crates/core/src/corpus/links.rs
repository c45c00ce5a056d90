use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use percent_encoding::percent_decode_str;
use serde::Serialize;
use url::Url;

use super::{CorpusStore, PlatformId};
use crate::{Error, Result};

// Second-level labels under two-letter country TLDs that are not themselves
// registrable (news.bbc.co.uk -> bbc.co.uk).
const SECOND_LEVEL: &[&str] = &["co", "com", "org", "net", "gov", "ac", "edu", "msk", "spb"];

fn parse_url(s: &str) -> Option<Url> {
    match Url::parse(s) {
        Ok(u) => Some(u),
        Err(_) => Url::parse(&format!("http://{s}")).ok(),
    }
}

/// Lowercased registrable host of a URL or bare host: the last two labels,
/// or three under common second-level country suffixes.
pub fn registrable_domain(url_or_host: &str) -> Option<String> {
    let url = parse_url(url_or_host.trim())?;
    let host = url.host_str()?.trim_end_matches('.').to_lowercase();
    let labels: Vec<&str> = host.split('.').filter(|l| !l.is_empty()).collect();
    if labels.len() < 2 {
        return Some(host);
    }
    let n = labels.len();
    let keep = if n >= 3 && labels[n - 1].len() == 2 && SECOND_LEVEL.contains(&labels[n - 2]) { 3 } else { 2 };
    Some(labels[n - keep..].join("."))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DailyDomainShare {
    pub date: NaiveDate,
    pub external_links: usize,
    /// `(domain, fraction of the day's external links)` for top domains
    /// present that day, ordered by overall rank.
    pub shares: Vec<(String, f64)>,
}

/// Daily share of external hyperlinks pointing at each of the `top_n` most
/// linked domains over the whole window. A link is external when its domain
/// differs from the linking platform's own domain. Every calendar day between
/// the first and last unit of the platform set is emitted, including days
/// without links.
pub fn domain_share_timeseries(store: &CorpusStore, platforms: &[PlatformId], top_n: usize) -> Result<Vec<DailyDomainShare>> {
    if platforms.is_empty() {
        return Err(Error::EmptyInput("platform set".into()));
    }
    let mut per_day: BTreeMap<NaiveDate, BTreeMap<String, usize>> = BTreeMap::new();
    let mut span: Option<(NaiveDate, NaiveDate)> = None;
    for &pid in platforms {
        let own = registrable_domain(store.registry().name(pid));
        for unit in store.platform_units(pid) {
            span = Some(match span {
                None => (unit.date, unit.date),
                Some((a, b)) => (a.min(unit.date), b.max(unit.date)),
            });
            let day = per_day.entry(unit.date).or_default();
            for link in &unit.hyperlinks {
                let Some(domain) = registrable_domain(link) else { continue };
                if own.as_deref() == Some(domain.as_str()) {
                    continue;
                }
                *day.entry(domain).or_default() += 1;
            }
        }
    }
    let Some((first, last)) = span else { return Ok(Vec::new()) };

    let mut totals: BTreeMap<&str, usize> = BTreeMap::new();
    for day in per_day.values() {
        for (d, &c) in day {
            *totals.entry(d.as_str()).or_default() += c;
        }
    }
    let mut ranked: Vec<(&str, usize)> = totals.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));
    let top: Vec<String> = ranked.into_iter().take(top_n).map(|(d, _)| d.to_owned()).collect();

    let empty = BTreeMap::new();
    Ok(first
        .iter_days()
        .take_while(|d| *d <= last)
        .map(|date| {
            let day = per_day.get(&date).unwrap_or(&empty);
            let total: usize = day.values().sum();
            let shares = top
                .iter()
                .filter_map(|d| day.get(d).map(|&c| (d.clone(), c as f64 / total as f64)))
                .collect();
            DailyDomainShare { date, external_links: total, shares }
        })
        .collect())
}

/// Selects hyperlinks by host and path prefix; the entity is the path
/// segment immediately after the prefix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UrlPattern {
    pub host: String,
    pub path_prefix: String,
}

impl UrlPattern {
    pub fn new(host: &str, path_prefix: &str) -> Self {
        Self { host: host.to_owned(), path_prefix: path_prefix.to_owned() }
    }

    pub fn entity(&self, link: &str) -> Option<String> {
        let url = parse_url(link)?;
        let domain = registrable_domain(link)?;
        if Some(domain) != registrable_domain(&self.host) {
            return None;
        }
        let path = percent_decode_str(url.path()).decode_utf8().ok()?;
        let rest = path.strip_prefix(self.path_prefix.as_str())?;
        let entity = rest.split('/').next()?;
        (!entity.is_empty()).then(|| entity.to_owned())
    }
}

/// Entities ranked by the number of distinct source platforms linking them
/// at least once; ties broken lexicographically.
pub fn top_linked_entities(store: &CorpusStore, sources: &[PlatformId], pattern: &UrlPattern) -> Vec<(String, usize)> {
    let mut linked_by: BTreeMap<String, BTreeSet<PlatformId>> = BTreeMap::new();
    for &pid in sources {
        for unit in store.platform_units(pid) {
            for link in &unit.hyperlinks {
                if let Some(e) = pattern.entity(link) {
                    linked_by.entry(e).or_default().insert(pid);
                }
            }
        }
    }
    let mut out: Vec<(String, usize)> = linked_by.into_iter().map(|(e, s)| (e, s.len())).collect();
    out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    out
}
