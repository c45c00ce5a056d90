//! Browser bindings for three interactive views: DP-Means on the unit
//! circle, a two-platform Hawkes fit, and correspondence fractions across
//! thresholds. Every function returns a JSON string.

use infoflow::dpmeans::{self, DpMeansConfig};
use infoflow::hawkes::{gibbs_fit, influence_percent, simulate_with_parents, GibbsConfig, HawkesModel, Priors};
use infoflow::simindex::correspondence;
use infoflow::vectors::EmbeddingBlock;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use wasm_bindgen::prelude::*;

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string(v).unwrap_or_else(|e| format!("{{\"error\":{:?}}}", e.to_string()))
}

fn error_json(e: impl ToString) -> String {
    to_json(&serde_json::json!({ "error": e.to_string() }))
}

#[derive(Serialize)]
struct CircleClusters {
    /// `[x, y, cluster]` per point.
    points: Vec<(f32, f32, u32)>,
    centers: Vec<(f64, f64)>,
    k: usize,
    iterations: usize,
    objective: f64,
}

/// Points in `groups` angular bunches on the unit circle, clustered at
/// cosine threshold `lambda`. `spread` is the half-width of each bunch in
/// radians.
#[wasm_bindgen]
pub fn cluster_circle(groups: u32, per_group: u32, spread: f64, lambda: f64, seed: u32) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let offset: f64 = rng.random::<f64>() * std::f64::consts::TAU;
    let mut rows = Vec::new();
    for g in 0..groups {
        let base = offset + g as f64 * std::f64::consts::TAU / groups.max(1) as f64;
        for _ in 0..per_group {
            let a = base + spread * (2.0 * rng.random::<f64>() - 1.0);
            rows.push(vec![a.cos() as f32, a.sin() as f32]);
        }
    }
    let ids = (0..rows.len() as u64).collect();
    let fit = EmbeddingBlock::from_rows(2, ids, &rows)
        .and_then(|b| dpmeans::fit(&b, &DpMeansConfig { lambda, ..Default::default() }).map(|f| (b, f)));
    match fit {
        Ok((block, fit)) => to_json(&CircleClusters {
            points: block.rows().zip(&fit.assignment).map(|(r, &c)| (r[0], r[1], c)).collect(),
            centers: fit.clusters.iter().map(|c| (c.center[0], c.center[1])).collect(),
            k: fit.k(),
            iterations: fit.iterations,
            objective: fit.objective,
        }),
        Err(e) => error_json(e),
    }
}

#[derive(Serialize)]
struct HawkesDemo {
    counts: Vec<Vec<u32>>,
    true_weight: f64,
    /// Row-major 2×2, source by target.
    fitted_weights: Vec<f64>,
    background: Vec<f64>,
    /// Percent of each target's events caused by each source, fitted and
    /// from the simulator's own parent labels.
    influence: Vec<f64>,
    true_influence: Vec<f64>,
    background_percent: Vec<f64>,
}

/// Simulates two platforms where platform 0 excites platform 1 with
/// `weight`, then fits the model back.
#[wasm_bindgen]
pub fn hawkes_fit(weight: f64, days: u32, seed: u32) -> String {
    let impulse = [0.6, 0.3, 0.1];
    let run = || -> infoflow::Result<HawkesDemo> {
        let truth = HawkesModel::with_shared_impulse(vec![0.4, 0.4], vec![0.0, weight, 0.0, 0.0], &impulse)?;
        let sim = simulate_with_parents(&truth, days as usize, seed as u64)?;
        let cfg = GibbsConfig { max_lag: impulse.len(), iters: 300, burn_in: 100, seed: seed as u64 };
        let fit = gibbs_fit(&sim.events, &Priors::default(), &cfg)?;
        let (got, want) = (influence_percent(&fit.parents), influence_percent(&sim.parents));
        Ok(HawkesDemo {
            counts: (0..2).map(|k| sim.events.row(k).to_vec()).collect(),
            true_weight: weight,
            fitted_weights: fit.model.weights.clone(),
            background: fit.model.background.clone(),
            influence: got.percent.clone(),
            true_influence: want.percent.clone(),
            background_percent: got.background.clone(),
        })
    };
    match run() {
        Ok(d) => to_json(&d),
        Err(e) => error_json(e),
    }
}

#[derive(Serialize)]
struct CorrespondenceCurve {
    tau: Vec<f64>,
    a_in_b: Vec<f64>,
    b_in_a: Vec<f64>,
    similarity: Vec<f64>,
}

/// Two platforms of random 16-d texts where a share `overlap` of the
/// smaller platform's texts reappear, perturbed, on the larger one.
/// Fractions are reported for thresholds 0.50 through 0.99.
#[wasm_bindgen]
pub fn correspondence_curve(overlap: f64, noise: f64, seed: u32) -> String {
    const DIM: usize = 16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
    let random_row = |rng: &mut ChaCha8Rng| (0..DIM).map(|_| rng.random::<f32>() - 0.5).collect::<Vec<f32>>();
    let a: Vec<Vec<f32>> = (0..150).map(|_| random_row(&mut rng)).collect();
    let shared = ((overlap.clamp(0.0, 1.0) * a.len() as f64).round() as usize).min(a.len());
    let mut b: Vec<Vec<f32>> = a[..shared]
        .iter()
        .map(|r| r.iter().map(|&x| x + noise as f32 * (rng.random::<f32>() - 0.5)).collect())
        .collect();
    while b.len() < 300 {
        b.push(random_row(&mut rng));
    }
    let run = || -> infoflow::Result<CorrespondenceCurve> {
        let ba = EmbeddingBlock::from_rows(DIM, (0..a.len() as u64).collect(), &a)?;
        let bb = EmbeddingBlock::from_rows(DIM, (1000..1000 + b.len() as u64).collect(), &b)?;
        let mut curve = CorrespondenceCurve { tau: Vec::new(), a_in_b: Vec::new(), b_in_a: Vec::new(), similarity: Vec::new() };
        for i in 0..50 {
            let tau = (50 + i) as f64 / 100.0;
            let r = correspondence(&ba, &bb, tau)?;
            curve.tau.push(tau);
            curve.a_in_b.push(r.fraction_a_in_b);
            curve.b_in_a.push(r.fraction_b_in_a);
            curve.similarity.push(r.similarity());
        }
        Ok(curve)
    };
    match run() {
        Ok(c) => to_json(&c),
        Err(e) => error_json(e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::Value;

    fn parse(s: &str) -> Value {
        let v: Value = serde_json::from_str(s).unwrap();
        assert!(v.get("error").is_none(), "{s}");
        v
    }

    #[test]
    fn circle_finds_separated_groups() {
        let v = parse(&cluster_circle(5, 30, 0.1, 0.8, 1));
        assert_eq!(v["k"], 5);
        assert_eq!(v["points"].as_array().unwrap().len(), 150);
    }

    #[test]
    fn circle_merges_at_low_lambda() {
        let v = parse(&cluster_circle(6, 20, 0.1, 0.05, 2));
        assert!(v["k"].as_u64().unwrap() < 6);
    }

    #[test]
    fn hawkes_recovers_edge_direction() {
        let v = parse(&hawkes_fit(0.8, 1000, 3));
        let w: Vec<f64> = v["fitted_weights"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert!(w[1] > 0.5 && w[2] < 0.1, "{w:?}");
    }

    #[test]
    fn correspondence_fractions_fall_with_threshold() {
        let v = parse(&correspondence_curve(0.4, 0.1, 4));
        let a: Vec<f64> = v["a_in_b"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
        assert_eq!(a.len(), 50);
        assert!(a.windows(2).all(|w| w[1] <= w[0]));
        assert!(a[49] >= 0.35 && a[49] <= 0.45, "{}", a[49]);
    }

    #[test]
    fn bad_parameter_reports_error() {
        let v: Value = serde_json::from_str(&cluster_circle(3, 10, 0.1, 1.5, 0)).unwrap();
        assert!(v.get("error").is_some());
    }
}
