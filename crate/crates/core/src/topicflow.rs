//! Day-granular origin attribution over topic clusters.
//!
//! Dates carry no time of day, so one day precedes another only when it is
//! at least one calendar day earlier; same-day appearances say nothing about
//! order.

use std::collections::{BTreeMap, BTreeSet};

use chrono::NaiveDate;
use serde::Serialize;

use crate::corpus::{CorpusStore, PlatformId, PlatformKind, PlatformRegistry};
use crate::dpmeans::Clustering;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TimelineEvent {
    pub date: NaiveDate,
    pub platform: PlatformId,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TopicTimeline {
    pub cluster_id: u32,
    pub earliest: BTreeMap<PlatformId, NaiveDate>,
    pub counts: BTreeMap<PlatformId, usize>,
    /// Sorted by date, then platform.
    pub events: Vec<TimelineEvent>,
}

impl TopicTimeline {
    /// Builds a timeline from `(platform, date)` observations.
    pub fn from_observations(cluster_id: u32, obs: impl IntoIterator<Item = (PlatformId, NaiveDate)>) -> Self {
        let mut daily: BTreeMap<(NaiveDate, PlatformId), usize> = BTreeMap::new();
        for (p, d) in obs {
            *daily.entry((d, p)).or_default() += 1;
        }
        let mut earliest = BTreeMap::new();
        let mut counts: BTreeMap<PlatformId, usize> = BTreeMap::new();
        let events = daily
            .into_iter()
            .map(|((date, platform), count)| {
                earliest.entry(platform).or_insert(date);
                *counts.entry(platform).or_default() += count;
                TimelineEvent { date, platform, count }
            })
            .collect();
        Self { cluster_id, earliest, counts, events }
    }

    pub fn total(&self) -> usize {
        self.counts.values().sum()
    }

    /// Earliest date among `platforms` (restricted to those present).
    pub fn earliest_among(&self, platforms: &BTreeSet<PlatformId>) -> Option<NaiveDate> {
        self.earliest.iter().filter(|(p, _)| platforms.contains(p)).map(|(_, &d)| d).min()
    }

    /// The platform holding the unique strict earliest date, if any.
    pub fn origin(&self) -> Option<(PlatformId, NaiveDate)> {
        let min = *self.earliest.values().min()?;
        let mut at_min = self.earliest.iter().filter(|(_, &d)| d == min);
        let (&p, _) = at_min.next()?;
        at_min.next().is_none().then_some((p, min))
    }
}

pub fn build_timelines(clustering: &Clustering, store: &CorpusStore) -> Result<Vec<TopicTimeline>> {
    clustering
        .clusters
        .iter()
        .map(|c| {
            let obs = c
                .members
                .iter()
                .map(|&id| store.unit(id).map(|u| (u.platform_id, u.date)).ok_or(Error::UnknownUnit(id)))
                .collect::<Result<Vec<_>>>()?;
            Ok(TopicTimeline::from_observations(c.cluster_id, obs))
        })
        .collect()
}

/// True iff `a` is at least one calendar day before `b`.
pub fn precedes(a: NaiveDate, b: NaiveDate) -> bool {
    (b - a).num_days() >= 1
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FirstPostedShare {
    pub target: PlatformId,
    /// Topics the target participates in.
    pub topics: usize,
    /// Of those, topics where a source strictly preceded the target.
    pub counting_topics: usize,
    pub units: usize,
    pub counting_units: usize,
    pub topic_pct: f64,
    pub text_pct: f64,
}

/// Share of the target's topics (and of its units) that some non-excluded
/// source posted at least a day earlier.
pub fn percent_first_on(
    target: PlatformId,
    sources: &BTreeSet<PlatformId>,
    timelines: &[TopicTimeline],
    exclusions: &BTreeSet<PlatformId>,
) -> Result<FirstPostedShare> {
    let effective: BTreeSet<PlatformId> = sources.iter().filter(|p| !exclusions.contains(p) && **p != target).copied().collect();
    let (mut topics, mut counting_topics, mut units, mut counting_units) = (0, 0, 0, 0);
    for tl in timelines {
        let Some(&target_first) = tl.earliest.get(&target) else { continue };
        let n = tl.counts[&target];
        topics += 1;
        units += n;
        if tl.earliest_among(&effective).is_some_and(|s| precedes(s, target_first)) {
            counting_topics += 1;
            counting_units += n;
        }
    }
    if topics == 0 {
        return Err(Error::EmptyInput(format!("platform #{} has no topics", target.0)));
    }
    Ok(FirstPostedShare {
        target,
        topics,
        counting_topics,
        units,
        counting_units,
        topic_pct: 100.0 * counting_topics as f64 / topics as f64,
        text_pct: 100.0 * counting_units as f64 / units as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReachUniverse {
    Websites,
    Channels,
    Both,
}

impl ReachUniverse {
    pub fn admits(self, kind: PlatformKind) -> bool {
        match self {
            ReachUniverse::Websites => kind == PlatformKind::NewsSite,
            ReachUniverse::Channels => kind == PlatformKind::TelegramChannel,
            ReachUniverse::Both => true,
        }
    }
}

/// Mean cumulative number of distinct other platforms reached by day offset
/// `0..=horizon`, over clusters that `origin` strictly originated. Empty when
/// the platform originated nothing.
pub fn spread_curve(
    origin: PlatformId,
    timelines: &[TopicTimeline],
    horizon_days: usize,
    universe: ReachUniverse,
    registry: &PlatformRegistry,
) -> Vec<f64> {
    let mut sum = vec![0f64; horizon_days + 1];
    let mut originated = 0usize;
    for tl in timelines {
        let Some((o, start)) = tl.origin() else { continue };
        if o != origin {
            continue;
        }
        originated += 1;
        for (&p, &d) in &tl.earliest {
            if p == origin || !registry.get(p).is_some_and(|pl| universe.admits(pl.kind)) {
                continue;
            }
            let lag = (d - start).num_days() as usize;
            for v in sum.iter_mut().skip(lag) {
                *v += 1.0;
            }
        }
    }
    if originated == 0 {
        return Vec::new();
    }
    sum.into_iter().map(|s| s / originated as f64).collect()
}

/// Per channel, the percent of the target's units in clusters where that
/// channel posted strictly before the target and earliest among all the
/// channels. Ties among earliest channels split the credit equally.
pub fn top_first_posting_channels(
    target: PlatformId,
    channels: &BTreeSet<PlatformId>,
    timelines: &[TopicTimeline],
    exclusions: &BTreeSet<PlatformId>,
    k: usize,
) -> Vec<(PlatformId, f64)> {
    let eligible: BTreeSet<PlatformId> = channels.iter().filter(|p| !exclusions.contains(p) && **p != target).copied().collect();
    let mut credit: BTreeMap<PlatformId, f64> = eligible.iter().map(|&p| (p, 0.0)).collect();
    let mut total_units = 0usize;
    for tl in timelines {
        let Some(&target_first) = tl.earliest.get(&target) else { continue };
        let n = tl.counts[&target];
        total_units += n;
        let Some(first) = tl.earliest_among(&eligible) else { continue };
        if !precedes(first, target_first) {
            continue;
        }
        let leaders: Vec<PlatformId> =
            tl.earliest.iter().filter(|(p, &d)| eligible.contains(p) && d == first).map(|(&p, _)| p).collect();
        let share = n as f64 / leaders.len() as f64;
        for p in leaders {
            *credit.get_mut(&p).expect("eligible") += share;
        }
    }
    if total_units == 0 {
        return Vec::new();
    }
    let mut ranked: Vec<(PlatformId, f64)> =
        credit.into_iter().map(|(p, c)| (p, 100.0 * c / total_units as f64)).collect();
    ranked.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    ranked.truncate(k);
    ranked
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(n: i64) -> NaiveDate {
        NaiveDate::from_ymd_opt(2022, 4, 1).unwrap() + chrono::Duration::days(n)
    }

    fn registry() -> PlatformRegistry {
        PlatformRegistry::from_platforms([
            ("site.ru".to_string(), PlatformKind::NewsSite),
            ("other.ru".to_string(), PlatformKind::NewsSite),
            ("chan_a".to_string(), PlatformKind::TelegramChannel),
            ("chan_b".to_string(), PlatformKind::TelegramChannel),
        ])
        .unwrap()
    }

    const SITE: PlatformId = PlatformId(0);
    const OTHER: PlatformId = PlatformId(1);
    const A: PlatformId = PlatformId(2);
    const B: PlatformId = PlatformId(3);

    #[test]
    fn precedence_examples() {
        let p = |s: &str| NaiveDate::parse_from_str(s, "%Y-%m-%d").unwrap();
        assert!(precedes(p("2022-04-05"), p("2022-04-06")));
        assert!(!precedes(p("2022-04-06"), p("2022-04-06")));
        assert!(!precedes(p("2022-04-07"), p("2022-04-06")));
    }

    #[test]
    fn timeline_from_observations() {
        let tl = TopicTimeline::from_observations(0, [(SITE, d(1)), (A, d(2))]);
        assert_eq!(tl.earliest[&SITE], d(1));
        assert_eq!(tl.earliest[&A], d(2));
        let single = TopicTimeline::from_observations(1, [(A, d(0))]);
        assert_eq!(single.events.len(), 1);
        assert_eq!(single.origin(), Some((A, d(0))));
    }

    #[test]
    fn tied_origin_has_no_origin() {
        let tl = TopicTimeline::from_observations(0, [(SITE, d(1)), (A, d(1)), (B, d(3))]);
        assert_eq!(tl.origin(), None);
    }

    #[test]
    fn first_on_basic() {
        let srcs: BTreeSet<_> = [A, B].into();
        let tl = vec![TopicTimeline::from_observations(0, [(SITE, d(2)), (A, d(1))])];
        let r = percent_first_on(SITE, &srcs, &tl, &BTreeSet::new()).unwrap();
        assert_eq!(r.topic_pct, 100.0);
        let tl = vec![TopicTimeline::from_observations(0, [(SITE, d(1)), (A, d(1))])];
        let r = percent_first_on(SITE, &srcs, &tl, &BTreeSet::new()).unwrap();
        assert_eq!(r.topic_pct, 0.0);
        assert!(percent_first_on(OTHER, &srcs, &tl, &BTreeSet::new()).is_err());
    }

    #[test]
    fn exclusion_removes_source() {
        let srcs: BTreeSet<_> = [A, B].into();
        let tl = vec![TopicTimeline::from_observations(0, [(SITE, d(2)), (A, d(1)), (B, d(2))])];
        let r = percent_first_on(SITE, &srcs, &tl, &[A].into()).unwrap();
        assert_eq!(r.topic_pct, 0.0);
    }

    #[test]
    fn spread_steps() {
        let reg = registry();
        let tl = vec![TopicTimeline::from_observations(0, [(A, d(0)), (SITE, d(1)), (OTHER, d(3))])];
        let c = spread_curve(A, &tl, 4, ReachUniverse::Both, &reg);
        assert_eq!(c, vec![0.0, 1.0, 1.0, 2.0, 2.0]);
        let only = vec![TopicTimeline::from_observations(0, [(A, d(0)), (A, d(2))])];
        assert_eq!(spread_curve(A, &only, 3, ReachUniverse::Both, &reg), vec![0.0; 4]);
        assert!(spread_curve(B, &only, 3, ReachUniverse::Both, &reg).is_empty());
        let c = spread_curve(A, &tl, 4, ReachUniverse::Channels, &reg);
        assert_eq!(c, vec![0.0; 5]);
    }

    #[test]
    fn top_channels_examples() {
        let channels: BTreeSet<_> = [A, B].into();
        let tl = vec![
            TopicTimeline::from_observations(0, [(SITE, d(3)), (SITE, d(4)), (A, d(1)), (B, d(2))]),
            TopicTimeline::from_observations(1, [(SITE, d(5)), (A, d(4))]),
        ];
        let r = top_first_posting_channels(SITE, &channels, &tl, &BTreeSet::new(), 3);
        assert_eq!(r, vec![(A, 100.0), (B, 0.0)]);
        // tie splits credit
        let tl = vec![TopicTimeline::from_observations(0, [(SITE, d(3)), (A, d(1)), (B, d(1))])];
        let r = top_first_posting_channels(SITE, &channels, &tl, &BTreeSet::new(), 1);
        assert_eq!(r, vec![(A, 50.0)]);
    }
}
