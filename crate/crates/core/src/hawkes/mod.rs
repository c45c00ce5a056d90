//! Discrete-time multivariate Hawkes processes over daily event counts.
//!
//! The rate of platform `k` on day `t` is
//!
//! ```text
//! λ_k[t] = λ0_k + Σ_j Σ_{ℓ=1..min(L,t)} W[j][k] · φ[j][k][ℓ] · s_j[t−ℓ]
//! ```
//!
//! where `W[j][k]` is the expected number of events on `k` induced by one
//! event on `j` and `φ[j][k]` is a distribution over lags `1..=L`.
//! [`gibbs_fit`] infers the parameters together with a latent parent for
//! every event (background or an earlier event), which is what the influence
//! and efficiency reports aggregate.

mod ecosystem;
mod gibbs;
mod influence;
mod simulate;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use ecosystem::{cluster_matrix, fit_ecosystem, fit_ecosystem_matrices, fit_matrices, ClusterFit, EcosystemConfig, EcosystemFit, POOLED_CLUSTER_ID};
pub use gibbs::{gibbs_fit, GibbsConfig, GibbsFit};
pub use influence::{efficiency, influence_percent, InfluenceMatrix};
pub use simulate::{simulate, simulate_with_parents, Simulation};

/// `K × T` nonnegative counts, row-major by platform.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventMatrix {
    k: usize,
    t: usize,
    counts: Vec<u32>,
}

impl EventMatrix {
    pub fn zeros(k: usize, t: usize) -> Result<Self> {
        if k == 0 || t == 0 {
            return Err(Error::InvalidParameter("event matrix needs K ≥ 1 and T ≥ 1".into()));
        }
        Ok(Self { k, t, counts: vec![0; k * t] })
    }

    pub fn from_rows(rows: &[Vec<u32>]) -> Result<Self> {
        let k = rows.len();
        let t = rows.first().map_or(0, Vec::len);
        let mut m = Self::zeros(k, t)?;
        for (i, r) in rows.iter().enumerate() {
            if r.len() != t {
                return Err(Error::DimMismatch { left: t, right: r.len() });
            }
            m.counts[i * t..(i + 1) * t].copy_from_slice(r);
        }
        Ok(m)
    }

    pub fn platforms(&self) -> usize {
        self.k
    }

    pub fn days(&self) -> usize {
        self.t
    }

    pub fn get(&self, k: usize, t: usize) -> u32 {
        self.counts[k * self.t + t]
    }

    pub fn set(&mut self, k: usize, t: usize, v: u32) {
        self.counts[k * self.t + t] = v;
    }

    pub fn add(&mut self, k: usize, t: usize, v: u32) {
        self.counts[k * self.t + t] += v;
    }

    pub fn row(&self, k: usize) -> &[u32] {
        &self.counts[k * self.t..(k + 1) * self.t]
    }

    pub fn total(&self, k: usize) -> u64 {
        self.row(k).iter().map(|&c| c as u64).sum()
    }

    pub fn grand_total(&self) -> u64 {
        self.counts.iter().map(|&c| c as u64).sum()
    }
}

/// Decomposed model parameters. `weights[j * K + k]` is the effect of `j`
/// on `k`; `impulses[(j * K + k) * L + (ℓ − 1)]` its lag distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HawkesModel {
    pub k: usize,
    pub max_lag: usize,
    pub background: Vec<f64>,
    pub weights: Vec<f64>,
    pub impulses: Vec<f64>,
}

impl HawkesModel {
    pub fn new(background: Vec<f64>, weights: Vec<f64>, impulses: Vec<f64>, max_lag: usize) -> Result<Self> {
        let k = background.len();
        if k == 0 || max_lag == 0 {
            return Err(Error::InvalidParameter("model needs K ≥ 1 and L ≥ 1".into()));
        }
        if weights.len() != k * k || impulses.len() != k * k * max_lag {
            return Err(Error::InvalidParameter("weight or impulse shape does not match K and L".into()));
        }
        let all = background.iter().chain(&weights).chain(&impulses);
        if all.clone().any(|&x| !(x >= 0.0) || !x.is_finite()) {
            return Err(Error::InvalidParameter("model parameters must be finite and nonnegative".into()));
        }
        let m = Self { k, max_lag, background, weights, impulses };
        for j in 0..k {
            for kk in 0..k {
                let s: f64 = m.impulse(j, kk).iter().sum();
                if (s - 1.0).abs() > 1e-9 {
                    return Err(Error::InvalidParameter(format!("impulse {j}->{kk} sums to {s}")));
                }
            }
        }
        Ok(m)
    }

    /// Same lag distribution on every pair.
    pub fn with_shared_impulse(background: Vec<f64>, weights: Vec<f64>, impulse: &[f64]) -> Result<Self> {
        let k = background.len();
        let impulses = impulse.iter().copied().cycle().take(k * k * impulse.len()).collect();
        Self::new(background, weights, impulses, impulse.len())
    }

    pub fn weight(&self, j: usize, k: usize) -> f64 {
        self.weights[j * self.k + k]
    }

    pub fn impulse(&self, j: usize, k: usize) -> &[f64] {
        let o = (j * self.k + k) * self.max_lag;
        &self.impulses[o..o + self.max_lag]
    }

    /// Spectral radius of the weight matrix.
    pub fn spectral_radius(&self) -> f64 {
        let m = nalgebra::DMatrix::from_row_slice(self.k, self.k, &self.weights);
        m.complex_eigenvalues().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }
}

/// Conjugate prior hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Priors {
    /// Background rate ~ Gamma(shape, rate).
    pub background_shape: f64,
    pub background_rate: f64,
    /// Weight ~ Gamma(shape, rate).
    pub weight_shape: f64,
    pub weight_rate: f64,
    /// Impulse ~ Dirichlet(concentration · 1).
    pub impulse_concentration: f64,
}

impl Default for Priors {
    fn default() -> Self {
        Self { background_shape: 1.0, background_rate: 1.0, weight_shape: 1.0, weight_rate: 5.0, impulse_concentration: 1.0 }
    }
}

impl Priors {
    pub fn validate(&self) -> Result<()> {
        let all = [
            self.background_shape,
            self.background_rate,
            self.weight_shape,
            self.weight_rate,
            self.impulse_concentration,
        ];
        if all.iter().all(|&x| x > 0.0 && x.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("prior hyperparameters must be positive".into()))
        }
    }

    pub fn weight_mean(&self) -> f64 {
        self.weight_shape / self.weight_rate
    }
}

/// Posterior expected parent counts. `parents[j * K + k]` counts events on
/// `k` whose parent is an event on `j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParentCounts {
    pub k: usize,
    pub background: Vec<f64>,
    pub parents: Vec<f64>,
    pub totals: Vec<f64>,
}

impl ParentCounts {
    pub fn zeros(k: usize) -> Self {
        Self { k, background: vec![0.0; k], parents: vec![0.0; k * k], totals: vec![0.0; k] }
    }

    pub fn parent(&self, j: usize, k: usize) -> f64 {
        self.parents[j * self.k + k]
    }

    pub fn accumulate(&mut self, other: &ParentCounts) {
        assert_eq!(self.k, other.k);
        for (a, b) in self.background.iter_mut().zip(&other.background) {
            *a += b;
        }
        for (a, b) in self.parents.iter_mut().zip(&other.parents) {
            *a += b;
        }
        for (a, b) in self.totals.iter_mut().zip(&other.totals) {
            *a += b;
        }
    }

    /// `max_k |background_k + Σ_j parents[j][k] − N_k|`.
    pub fn partition_error(&self) -> f64 {
        (0..self.k)
            .map(|k| {
                let s = self.background[k] + (0..self.k).map(|j| self.parent(j, k)).sum::<f64>();
                (s - self.totals[k]).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Conditional intensity of platform `k` on day `t` given the counts.
pub fn rate(model: &HawkesModel, counts: &EventMatrix, k: usize, t: usize) -> Result<f64> {
    if k >= model.k || counts.platforms() != model.k {
        return Err(Error::InvalidParameter(format!("platform {k} out of range for K = {}", model.k)));
    }
    if t >= counts.days() {
        return Err(Error::InvalidParameter(format!("day {t} out of range for T = {}", counts.days())));
    }
    let mut r = model.background[k];
    for j in 0..model.k {
        let w = model.weight(j, k);
        if w == 0.0 {
            continue;
        }
        let phi = model.impulse(j, k);
        for lag in 1..=model.max_lag.min(t) {
            r += w * phi[lag - 1] * counts.get(j, t - lag) as f64;
        }
    }
    Ok(r)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn background_only_rate() {
        let m = HawkesModel::with_shared_impulse(vec![0.3, 0.7], vec![0.0; 4], &[0.5, 0.5]).unwrap();
        let c = EventMatrix::from_rows(&[vec![3, 1, 4], vec![1, 5, 9]]).unwrap();
        for t in 0..3 {
            assert_eq!(rate(&m, &c, 0, t).unwrap(), 0.3);
            assert_eq!(rate(&m, &c, 1, t).unwrap(), 0.7);
        }
    }

    #[test]
    fn single_lag_rate() {
        let m = HawkesModel::with_shared_impulse(vec![0.5, 0.25], vec![0.0, 2.0, 0.0, 0.0], &[1.0]).unwrap();
        let c = EventMatrix::from_rows(&[vec![0, 1, 0], vec![0, 0, 0]]).unwrap();
        assert_eq!(rate(&m, &c, 1, 2).unwrap(), 0.25 + 2.0);
        assert_eq!(rate(&m, &c, 1, 1).unwrap(), 0.25);
        assert!(rate(&m, &c, 1, 3).is_err());
        assert!(rate(&m, &c, 2, 0).is_err());
    }

    #[test]
    fn random_model_matches_triple_loop() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let (k, l, t) = (3, 4, 12);
        let bg: Vec<f64> = (0..k).map(|_| rng.random::<f64>()).collect();
        let w: Vec<f64> = (0..k * k).map(|_| rng.random::<f64>() * 0.3).collect();
        let mut imp = Vec::new();
        for _ in 0..k * k {
            let raw: Vec<f64> = (0..l).map(|_| rng.random::<f64>() + 0.01).collect();
            let s: f64 = raw.iter().sum();
            imp.extend(raw.iter().map(|x| x / s));
        }
        let m = HawkesModel::new(bg, w, imp, l).unwrap();
        let rows: Vec<Vec<u32>> = (0..k).map(|_| (0..t).map(|_| rng.random_range(0..4)).collect()).collect();
        let c = EventMatrix::from_rows(&rows).unwrap();
        for kk in 0..k {
            for tt in 0..t {
                let mut expect = m.background[kk];
                for j in 0..k {
                    for lag in 1..=l {
                        if lag <= tt {
                            expect += m.weights[j * k + kk] * m.impulses[(j * k + kk) * l + lag - 1] * rows[j][tt - lag] as f64;
                        }
                    }
                }
                assert!((rate(&m, &c, kk, tt).unwrap() - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn model_validation() {
        assert!(HawkesModel::new(vec![1.0], vec![0.1], vec![0.5, 0.4], 2).is_err());
        assert!(HawkesModel::new(vec![-1.0], vec![0.1], vec![1.0], 1).is_err());
        assert!(HawkesModel::new(vec![1.0], vec![0.1, 0.2], vec![1.0], 1).is_err());
    }

    #[test]
    fn spectral_radius_of_cycle() {
        let m = HawkesModel::with_shared_impulse(vec![0.1, 0.1], vec![0.0, 1.2, 1.2, 0.0], &[1.0]).unwrap();
        assert!((m.spectral_radius() - 1.2).abs() < 1e-9);
        let n = HawkesModel::with_shared_impulse(vec![0.1, 0.1], vec![0.0, 0.8, 0.0, 0.0], &[1.0]).unwrap();
        assert!(n.spectral_radius() < 1e-9);
    }
}
