use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution, Gamma};
use rayon::prelude::*;
use serde::Serialize;

use super::{EventMatrix, HawkesModel, ParentCounts, Priors};
use crate::{mix_seed, Error, Result};

#[derive(Debug, Clone, Serialize)]
pub struct GibbsConfig {
    pub max_lag: usize,
    pub iters: usize,
    pub burn_in: usize,
    pub seed: u64,
}

impl Default for GibbsConfig {
    fn default() -> Self {
        Self { max_lag: 14, iters: 500, burn_in: 250, seed: 0 }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GibbsFit {
    /// Post-burn-in posterior means.
    pub model: HawkesModel,
    pub parents: ParentCounts,
    /// All counts were zero; the model holds the prior means.
    pub degenerate: bool,
    pub samples: usize,
    /// Largest `|Σ_ℓ φ − 1|` seen after any sweep.
    pub max_impulse_error: f64,
}

/// Sufficient statistics of one parent-sampling pass for a single target.
struct TargetStats {
    background: u64,
    /// Per source `j`: parents from `j`, then the lag histogram.
    from: Vec<u64>,
    lags: Vec<u64>,
}

/// Splits `n` exchangeable events over categories with the given
/// unnormalized weights.
fn multinomial(rng: &mut ChaCha8Rng, n: u32, weights: &[f64], out: &mut [u32]) {
    out.iter_mut().for_each(|x| *x = 0);
    let total: f64 = weights.iter().sum();
    if n == 1 {
        let mut u = rng.random::<f64>() * total;
        for (i, &w) in weights.iter().enumerate() {
            if u < w || i == weights.len() - 1 {
                out[i] = 1;
                return;
            }
            u -= w;
        }
        return;
    }
    let mut remaining = n as u64;
    let mut mass = total;
    for (i, &w) in weights.iter().enumerate() {
        if remaining == 0 {
            break;
        }
        if i == weights.len() - 1 || w >= mass {
            out[i] = remaining as u32;
            return;
        }
        let p = (w / mass).clamp(0.0, 1.0);
        let x = Binomial::new(remaining, p).expect("valid binomial").sample(rng);
        out[i] = x as u32;
        remaining -= x;
        mass -= w;
    }
}

fn sample_parents(counts: &EventMatrix, model: &HawkesModel, target: usize, rng: &mut ChaCha8Rng) -> TargetStats {
    let kk = model.k;
    let l = model.max_lag;
    let mut stats = TargetStats { background: 0, from: vec![0; kk], lags: vec![0; kk * l] };
    // candidate 0 is the background, then (j, lag) pairs
    let mut weights: Vec<f64> = Vec::with_capacity(1 + kk * l);
    let mut labels: Vec<(usize, usize)> = Vec::with_capacity(kk * l);
    let mut draws: Vec<u32> = Vec::with_capacity(1 + kk * l);
    for t in 0..counts.days() {
        let n = counts.get(target, t);
        if n == 0 {
            continue;
        }
        weights.clear();
        labels.clear();
        weights.push(model.background[target]);
        for j in 0..kk {
            let w = model.weight(j, target);
            let phi = model.impulse(j, target);
            for lag in 1..=l.min(t) {
                let s = counts.get(j, t - lag);
                if s > 0 {
                    weights.push(w * phi[lag - 1] * s as f64);
                    labels.push((j, lag));
                }
            }
        }
        if weights.iter().sum::<f64>() <= 0.0 {
            // Every candidate has zero mass; only the background can own it.
            stats.background += n as u64;
            continue;
        }
        draws.resize(weights.len(), 0);
        multinomial(rng, n, &weights, &mut draws);
        stats.background += draws[0] as u64;
        for (&(j, lag), &c) in labels.iter().zip(&draws[1..]) {
            stats.from[j] += c as u64;
            stats.lags[j * l + lag - 1] += c as u64;
        }
    }
    stats
}

fn gamma(rng: &mut ChaCha8Rng, shape: f64, rate: f64) -> f64 {
    Gamma::new(shape, 1.0 / rate).expect("positive gamma parameters").sample(rng)
}

fn prior_mean_fit(counts: &EventMatrix, priors: &Priors, l: usize) -> Result<GibbsFit> {
    let k = counts.platforms();
    let t = counts.days() as f64;
    let model = HawkesModel::new(
        vec![priors.background_shape / (priors.background_rate + t); k],
        vec![priors.weight_mean(); k * k],
        vec![1.0 / l as f64; k * k * l],
        l,
    )
    .or_else(|_| {
        // 1/L may not sum to exactly 1 in floating point; renormalize.
        let mut imp = vec![1.0 / l as f64; l];
        let s: f64 = imp.iter().sum();
        imp.iter_mut().for_each(|x| *x /= s);
        HawkesModel::with_shared_impulse(
            vec![priors.background_shape / (priors.background_rate + t); k],
            vec![priors.weight_mean(); k * k],
            &imp,
        )
    })?;
    Ok(GibbsFit { model, parents: ParentCounts::zeros(k), degenerate: true, samples: 0, max_impulse_error: 0.0 })
}

/// Gibbs sampler with latent parent attribution.
///
/// Each sweep assigns every event a parent (background or an event `ℓ` days
/// earlier on some platform `j`) with probability proportional to its
/// contribution to the rate, then redraws the parameters from their
/// conjugate conditionals:
///
/// - `λ0_k ~ Gamma(α0 + #background_k, β0 + T)`
/// - `W[j][k] ~ Gamma(κ + #(j→k), ν + N_j)`
/// - `φ[j][k] ~ Dirichlet(γ + lag histogram of j→k)`
///
/// Returns post-burn-in means of the parameters and of the parent counts.
/// Per-target parent sampling runs in parallel with seeded per-sweep streams,
/// so results do not depend on the thread count.
pub fn gibbs_fit(counts: &EventMatrix, priors: &Priors, cfg: &GibbsConfig) -> Result<GibbsFit> {
    priors.validate()?;
    if cfg.max_lag == 0 {
        return Err(Error::InvalidParameter("max lag must be at least 1".into()));
    }
    if cfg.iters <= cfg.burn_in {
        return Err(Error::InvalidParameter(format!("iters {} must exceed burn-in {}", cfg.iters, cfg.burn_in)));
    }
    let k = counts.platforms();
    let l = cfg.max_lag;
    let days = counts.days() as f64;
    if counts.grand_total() == 0 {
        return prior_mean_fit(counts, priors, l);
    }
    let totals: Vec<f64> = (0..k).map(|j| counts.total(j) as f64).collect();

    let mut model = HawkesModel {
        k,
        max_lag: l,
        background: totals.iter().map(|n| (n / days).max(1e-3)).collect(),
        weights: vec![priors.weight_mean(); k * k],
        impulses: vec![1.0 / l as f64; k * k * l],
    };

    let samples = cfg.iters - cfg.burn_in;
    let mut mean = HawkesModel { k, max_lag: l, background: vec![0.0; k], weights: vec![0.0; k * k], impulses: vec![0.0; k * k * l] };
    let mut parents = ParentCounts { k, background: vec![0.0; k], parents: vec![0.0; k * k], totals: totals.clone() };
    let mut max_impulse_error = 0f64;
    let streams = k as u64 + 1;

    for sweep in 0..cfg.iters {
        let base = sweep as u64 * streams;
        let stats: Vec<TargetStats> = (0..k)
            .into_par_iter()
            .map(|target| {
                let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, base + target as u64));
                sample_parents(counts, &model, target, &mut rng)
            })
            .collect();

        let mut rng = ChaCha8Rng::seed_from_u64(mix_seed(cfg.seed, base + k as u64));
        for (target, st) in stats.iter().enumerate() {
            model.background[target] =
                gamma(&mut rng, priors.background_shape + st.background as f64, priors.background_rate + days);
        }
        let mut draw = vec![0f64; l];
        for j in 0..k {
            for (target, st) in stats.iter().enumerate() {
                let idx = j * k + target;
                model.weights[idx] =
                    gamma(&mut rng, priors.weight_shape + st.from[j] as f64, priors.weight_rate + totals[j]);
                for (lag, d) in draw.iter_mut().enumerate() {
                    *d = gamma(&mut rng, priors.impulse_concentration + st.lags[j * l + lag] as f64, 1.0);
                }
                let s: f64 = draw.iter().sum();
                let phi = &mut model.impulses[idx * l..(idx + 1) * l];
                if s > 0.0 && s.is_finite() {
                    for (p, d) in phi.iter_mut().zip(&draw) {
                        *p = d / s;
                    }
                } else {
                    phi.iter_mut().for_each(|p| *p = 1.0 / l as f64);
                }
                max_impulse_error = max_impulse_error.max((phi.iter().sum::<f64>() - 1.0).abs());
            }
        }

        if sweep >= cfg.burn_in {
            for (target, st) in stats.iter().enumerate() {
                parents.background[target] += st.background as f64;
                for j in 0..k {
                    parents.parents[j * k + target] += st.from[j] as f64;
                }
            }
            for (m, x) in mean.background.iter_mut().zip(&model.background) {
                *m += x;
            }
            for (m, x) in mean.weights.iter_mut().zip(&model.weights) {
                *m += x;
            }
            for (m, x) in mean.impulses.iter_mut().zip(&model.impulses) {
                *m += x;
            }
        }
    }

    let n = samples as f64;
    mean.background.iter_mut().for_each(|x| *x /= n);
    mean.weights.iter_mut().for_each(|x| *x /= n);
    mean.impulses.iter_mut().for_each(|x| *x /= n);
    parents.background.iter_mut().for_each(|x| *x /= n);
    parents.parents.iter_mut().for_each(|x| *x /= n);
    Ok(GibbsFit { model: mean, parents, degenerate: false, samples, max_impulse_error })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn multinomial_conserves_count() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let w = [0.5, 0.0, 2.0, 1.0];
        let mut out = [0u32; 4];
        let mut sums = [0u64; 4];
        for _ in 0..2000 {
            multinomial(&mut rng, 7, &w, &mut out);
            assert_eq!(out.iter().sum::<u32>(), 7);
            assert_eq!(out[1], 0);
            for (s, &o) in sums.iter_mut().zip(&out) {
                *s += o as u64;
            }
        }
        let frac = sums[2] as f64 / (2000.0 * 7.0);
        assert!((frac - 2.0 / 3.5).abs() < 0.02, "{frac}");
    }

    #[test]
    fn all_zero_counts_give_prior_means() {
        let counts = EventMatrix::zeros(2, 30).unwrap();
        let p = Priors::default();
        let fit = gibbs_fit(&counts, &p, &GibbsConfig { iters: 10, burn_in: 5, ..Default::default() }).unwrap();
        assert!(fit.degenerate);
        assert_eq!(fit.model.background, vec![1.0 / 31.0; 2]);
        assert_eq!(fit.model.weights, vec![0.2; 4]);
        assert_eq!(fit.parents.parents, vec![0.0; 4]);
    }

    #[test]
    fn rejects_bad_config() {
        let counts = EventMatrix::from_rows(&[vec![1, 0, 2]]).unwrap();
        let p = Priors::default();
        assert!(gibbs_fit(&counts, &p, &GibbsConfig { iters: 5, burn_in: 5, ..Default::default() }).is_err());
        assert!(gibbs_fit(&counts, &p, &GibbsConfig { max_lag: 0, ..Default::default() }).is_err());
        let bad = Priors { weight_rate: 0.0, ..Priors::default() };
        assert!(gibbs_fit(&counts, &bad, &GibbsConfig::default()).is_err());
    }

    #[test]
    fn partition_and_impulse_invariants() {
        let counts = EventMatrix::from_rows(&[vec![1, 0, 3, 1, 0, 2, 0, 1], vec![0, 2, 1, 0, 4, 0, 1, 1]]).unwrap();
        let fit = gibbs_fit(&counts, &Priors::default(), &GibbsConfig { max_lag: 3, iters: 60, burn_in: 20, seed: 5 }).unwrap();
        assert!(fit.parents.partition_error() < 1e-9);
        assert!(fit.max_impulse_error < 1e-9);
        for j in 0..2 {
            for k in 0..2 {
                assert!((fit.model.impulse(j, k).iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
        // day 0 events can only be background
        let only_first = EventMatrix::from_rows(&[vec![3, 0, 0]]).unwrap();
        let f = gibbs_fit(&only_first, &Priors::default(), &GibbsConfig { max_lag: 2, iters: 20, burn_in: 10, seed: 1 }).unwrap();
        assert_eq!(f.parents.background, vec![3.0]);
    }
}
