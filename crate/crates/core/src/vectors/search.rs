use rayon::prelude::*;

use super::{dot, EmbeddingBlock};
use crate::{Error, Result};

const QUERY_TILE: usize = 32;
const TARGET_TILE: usize = 128;

/// Per query row, every target row with cosine ≥ threshold, sorted by
/// descending similarity (ties by ascending target index).
#[derive(Debug, Clone, PartialEq)]
pub struct MatchSet {
    pub threshold: f64,
    pub matches: Vec<Vec<(usize, f64)>>,
}

impl MatchSet {
    pub fn total(&self) -> usize {
        self.matches.iter().map(Vec::len).sum()
    }
}

fn check(queries: &EmbeddingBlock, targets: &EmbeddingBlock, tau: f64) -> Result<()> {
    if queries.dim() != targets.dim() {
        return Err(Error::DimMismatch { left: queries.dim(), right: targets.dim() });
    }
    if !(tau > -1.0 && tau <= 1.0) {
        return Err(Error::InvalidParameter(format!("threshold {tau} outside (-1, 1]")));
    }
    Ok(())
}

/// Visits every `(query, target, similarity)` with similarity ≥ `tau` for the
/// query rows `q0..q1`, tiling the target side.
#[inline]
fn scan_tile(
    queries: &EmbeddingBlock,
    targets: &EmbeddingBlock,
    q0: usize,
    q1: usize,
    tau: f64,
    mut hit: impl FnMut(usize, usize, f64),
) {
    for t0 in (0..targets.len()).step_by(TARGET_TILE) {
        let t1 = (t0 + TARGET_TILE).min(targets.len());
        for q in q0..q1 {
            let qv = queries.row(q);
            for t in t0..t1 {
                let s = dot(qv, targets.row(t)).clamp(-1.0, 1.0);
                if s >= tau {
                    hit(q, t, s);
                }
            }
        }
    }
}

/// Exact thresholded neighbor search by tiled dense dot products.
///
/// `exclude_self` drops pairs whose unit ids are equal. Output order depends
/// only on the inputs, not on the number of worker threads.
pub fn threshold_search(queries: &EmbeddingBlock, targets: &EmbeddingBlock, tau: f64, exclude_self: bool) -> Result<MatchSet> {
    check(queries, targets, tau)?;
    let tiles: Vec<Vec<Vec<(usize, f64)>>> = (0..queries.len())
        .into_par_iter()
        .step_by(QUERY_TILE)
        .map(|q0| {
            let q1 = (q0 + QUERY_TILE).min(queries.len());
            let mut out = vec![Vec::new(); q1 - q0];
            scan_tile(queries, targets, q0, q1, tau, |q, t, s| {
                if !(exclude_self && queries.ids()[q] == targets.ids()[t]) {
                    out[q - q0].push((t, s));
                }
            });
            for row in &mut out {
                row.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            }
            out
        })
        .collect();
    Ok(MatchSet { threshold: tau, matches: tiles.into_iter().flatten().collect() })
}

/// One pass over all pairs marking which rows of `a` have a match in `b`
/// and which rows of `b` have a match in `a`.
pub fn correspondence_flags(a: &EmbeddingBlock, b: &EmbeddingBlock, tau: f64) -> Result<(Vec<bool>, Vec<bool>)> {
    check(a, b, tau)?;
    let nb = b.len();
    let (flags_a, flags_b) = (0..a.len())
        .into_par_iter()
        .step_by(QUERY_TILE)
        .fold(
            || (Vec::new(), vec![false; nb]),
            |(mut fa, mut fb): (Vec<(usize, bool)>, Vec<bool>), q0| {
                let q1 = (q0 + QUERY_TILE).min(a.len());
                let mut local = vec![false; q1 - q0];
                scan_tile(a, b, q0, q1, tau, |q, t, _| {
                    local[q - q0] = true;
                    fb[t] = true;
                });
                fa.extend(local.into_iter().enumerate().map(|(i, m)| (q0 + i, m)));
                (fa, fb)
            },
        )
        .reduce(
            || (Vec::new(), vec![false; nb]),
            |(mut fa, mut fb), (ga, gb)| {
                fa.extend(ga);
                for (x, y) in fb.iter_mut().zip(gb) {
                    *x |= y;
                }
                (fa, fb)
            },
        );
    let mut matched_a = vec![false; a.len()];
    for (i, m) in flags_a {
        matched_a[i] = m;
    }
    Ok((matched_a, flags_b))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_matches() {
        let b = EmbeddingBlock::from_raw(3, vec![1, 2, 3], vec![1.0, 0.2, 0.0, 0.0, 1.0, 0.3, 0.5, 0.5, 0.5]).unwrap();
        let m = threshold_search(&b, &b, 0.99, false).unwrap();
        for (i, row) in m.matches.iter().enumerate() {
            assert!(row.iter().any(|&(t, _)| t == i));
        }
        let m = threshold_search(&b, &b, 0.99, true).unwrap();
        assert_eq!(m.total(), 0);
    }

    #[test]
    fn orthogonal_targets() {
        let t = EmbeddingBlock::new(2, vec![1, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let q = EmbeddingBlock::new(2, vec![9], vec![1.0, 0.0]).unwrap();
        let m = threshold_search(&q, &t, 0.5, false).unwrap();
        assert_eq!(m.matches, vec![vec![(0, 1.0)]]);
    }

    #[test]
    fn empty_targets_and_errors() {
        let t = EmbeddingBlock::new(2, vec![], vec![]).unwrap();
        let q = EmbeddingBlock::new(2, vec![9], vec![1.0, 0.0]).unwrap();
        assert_eq!(threshold_search(&q, &t, 0.5, false).unwrap().matches, vec![vec![]]);
        let q3 = EmbeddingBlock::new(3, vec![9], vec![1.0, 0.0, 0.0]).unwrap();
        assert!(matches!(threshold_search(&q3, &q, 0.5, false), Err(Error::DimMismatch { .. })));
        assert!(threshold_search(&q, &q, -1.0, false).is_err());
        assert!(threshold_search(&q, &q, 1.5, false).is_err());
    }

    #[test]
    fn flags_match_search() {
        let a = EmbeddingBlock::from_raw(2, vec![1, 2], vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = EmbeddingBlock::from_raw(2, vec![3, 4, 5], vec![1.0, 0.1, -1.0, 0.0, -0.1, -1.0]).unwrap();
        let (fa, fb) = correspondence_flags(&a, &b, 0.8).unwrap();
        assert_eq!(fa, vec![true, false]);
        assert_eq!(fb, vec![true, false, false]);
    }
}
