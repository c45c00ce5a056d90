use infoflow::simindex::{correspondence, gmean, platform_similarity, similarity_matrix};
use infoflow::vectors::{threshold_search, EmbeddingBlock};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_block(rng: &mut ChaCha8Rng, n: usize, dim: usize, id_base: u64) -> EmbeddingBlock {
    let data: Vec<f32> = (0..n * dim).map(|_| rng.random::<f32>() - 0.5).collect();
    EmbeddingBlock::from_raw(dim, (id_base..id_base + n as u64).collect(), data).unwrap()
}

/// Rows of `base` perturbed so some pairs land well above typical random
/// similarity.
fn near_copies(rng: &mut ChaCha8Rng, base: &EmbeddingBlock, n: usize, id_base: u64, noise: f32) -> EmbeddingBlock {
    let dim = base.dim();
    let mut data = Vec::with_capacity(n * dim);
    for i in 0..n {
        let src = base.row(i % base.len());
        data.extend(src.iter().map(|&x| x + noise * (rng.random::<f32>() - 0.5)));
    }
    EmbeddingBlock::from_raw(dim, (id_base..id_base + n as u64).collect(), data).unwrap()
}

fn scalar(a: &[f32], b: &[f32]) -> f64 {
    let mut s = 0f64;
    for (x, y) in a.iter().zip(b) {
        s += *x as f64 * *y as f64;
    }
    s
}

/// Every query's matches by a plain double loop.
fn oracle(q: &EmbeddingBlock, t: &EmbeddingBlock, tau: f64, exclude_self: bool) -> Vec<Vec<(usize, f64)>> {
    (0..q.len())
        .map(|i| {
            let mut m: Vec<(usize, f64)> = (0..t.len())
                .filter(|&j| !(exclude_self && q.ids()[i] == t.ids()[j]))
                .map(|j| (j, scalar(q.row(i), t.row(j))))
                .filter(|&(_, s)| s >= tau)
                .collect();
            m.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
            m
        })
        .collect()
}

fn min_gap(q: &EmbeddingBlock, t: &EmbeddingBlock, tau: f64) -> f64 {
    let mut gap = f64::INFINITY;
    for i in 0..q.len() {
        for j in 0..t.len() {
            gap = gap.min((scalar(q.row(i), t.row(j)) - tau).abs());
        }
    }
    gap
}

/// First threshold in a small grid with no pair within the guard band.
fn guarded_tau(q: &EmbeddingBlock, t: &EmbeddingBlock, start: f64) -> f64 {
    (0..200).map(|i| start + i as f64 * 1e-3).find(|&tau| min_gap(q, t, tau) > 1e-5).expect("a guarded threshold")
}

fn assert_same(got: &[Vec<(usize, f64)>], want: &[Vec<(usize, f64)>]) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        let gi: Vec<usize> = g.iter().map(|m| m.0).collect();
        let wi: Vec<usize> = w.iter().map(|m| m.0).collect();
        let mut gs = gi.clone();
        let mut ws = wi.clone();
        gs.sort_unstable();
        ws.sort_unstable();
        assert_eq!(gs, ws);
        for (a, b) in g.iter().zip(w) {
            assert!((a.1 - b.1).abs() < 1e-5);
        }
    }
}

#[test]
fn blocked_search_matches_scalar_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let base = random_block(&mut rng, 260, 48, 0);
    let copies = near_copies(&mut rng, &base, 150, 10_000, 0.35);
    let tau = guarded_tau(&base, &copies, 0.55);
    let got = threshold_search(&base, &copies, tau, false).unwrap();
    let want = oracle(&base, &copies, tau, false);
    assert!(want.iter().map(Vec::len).sum::<usize>() > 50);
    assert_same(&got.matches, &want);
}

#[test]
fn self_search_with_and_without_exclusion() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let a = random_block(&mut rng, 200, 33, 0);
    let tau = guarded_tau(&a, &a, 0.4);
    let incl = threshold_search(&a, &a, tau, false).unwrap();
    assert!(incl.matches.iter().enumerate().all(|(i, m)| m.iter().any(|&(j, _)| j == i)));
    let excl = threshold_search(&a, &a, tau, true).unwrap();
    assert_same(&excl.matches, &oracle(&a, &a, tau, true));
    assert!(excl.matches.iter().enumerate().all(|(i, m)| m.iter().all(|&(j, _)| j != i)));
}

#[test]
fn correspondence_matches_oracle_fractions() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let a = random_block(&mut rng, 120, 24, 0);
    let b = near_copies(&mut rng, &a, 90, 1000, 0.6);
    let tau = guarded_tau(&a, &b, 0.6);
    let r = correspondence(&a, &b, tau).unwrap();
    let fwd = oracle(&a, &b, tau, false);
    let back = oracle(&b, &a, tau, false);
    let fa = fwd.iter().filter(|m| !m.is_empty()).count() as f64 / a.len() as f64;
    let fb = back.iter().filter(|m| !m.is_empty()).count() as f64 / b.len() as f64;
    assert_eq!(r.fraction_a_in_b, fa);
    assert_eq!(r.fraction_b_in_a, fb);
    assert!((platform_similarity(&r) - (fa * fb).sqrt()).abs() < 1e-12);
}

#[test]
fn matrix_composes_pairwise_calls() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let base = random_block(&mut rng, 40, 16, 0);
    let groups: Vec<(String, EmbeddingBlock)> =
        (0..4).map(|g| (format!("p{g}"), near_copies(&mut rng, &base, 30 + g * 5, 1000 * (g as u64 + 1), 0.8))).collect();
    let m = similarity_matrix(&groups, 0.7).unwrap();
    for i in 0..4 {
        assert_eq!(m.sim[i][i], 1.0);
        for j in 0..4 {
            if i != j {
                let r = correspondence(&groups[i].1, &groups[j].1, 0.7).unwrap();
                assert_eq!(m.sim[i][j], platform_similarity(&r));
                assert_eq!(m.sim[i][j], m.sim[j][i]);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn target_permutation_relabels_matches(seed in 0u64..1000, tau in 0.1f64..0.6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let q = random_block(&mut rng, 20, 8, 0);
        let t = random_block(&mut rng, 30, 8, 100);
        let mut perm: Vec<usize> = (0..30).collect();
        perm.reverse();
        perm.rotate_left((seed % 30) as usize);
        let tp = t.select(&perm);
        let a = threshold_search(&q, &t, tau, false).unwrap();
        let b = threshold_search(&q, &tp, tau, false).unwrap();
        for (ma, mb) in a.matches.iter().zip(&b.matches) {
            let mut ia: Vec<u64> = ma.iter().map(|m| t.ids()[m.0]).collect();
            let mut ib: Vec<u64> = mb.iter().map(|m| tp.ids()[m.0]).collect();
            ia.sort_unstable();
            ib.sort_unstable();
            prop_assert_eq!(ia, ib);
        }
    }

    #[test]
    fn fractions_monotone_in_threshold(seed in 0u64..1000, lo in 0.0f64..0.5, step in 0.0f64..0.4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_block(&mut rng, 25, 6, 0);
        let b = random_block(&mut rng, 18, 6, 100);
        let r1 = correspondence(&a, &b, lo).unwrap();
        let r2 = correspondence(&a, &b, lo + step).unwrap();
        prop_assert!(r2.fraction_a_in_b <= r1.fraction_a_in_b);
        prop_assert!(r2.fraction_b_in_a <= r1.fraction_b_in_a);
    }

    #[test]
    fn adding_targets_never_lowers_coverage(seed in 0u64..1000, tau in 0.0f64..0.8) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_block(&mut rng, 15, 5, 0);
        let b = random_block(&mut rng, 12, 5, 100);
        let extra = random_block(&mut rng, 6, 5, 200);
        let mut rows: Vec<Vec<f32>> = b.rows().map(<[f32]>::to_vec).collect();
        rows.extend(extra.rows().map(<[f32]>::to_vec));
        let ids: Vec<u64> = b.ids().iter().chain(extra.ids()).copied().collect();
        let bigger = EmbeddingBlock::from_rows(5, ids, &rows).unwrap();
        let small = correspondence(&a, &b, tau).unwrap();
        let large = correspondence(&a, &bigger, tau).unwrap();
        prop_assert!(large.fraction_a_in_b >= small.fraction_a_in_b);
    }

    #[test]
    fn gmean_bounds(p in 0.0f64..=1.0, q in 0.0f64..=1.0) {
        let g = gmean(p, q);
        prop_assert_eq!(g, gmean(q, p));
        prop_assert!(g >= p.min(q) - 1e-15 && g <= p.max(q) + 1e-15);
    }
}
