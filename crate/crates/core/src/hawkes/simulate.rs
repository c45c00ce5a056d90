use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::{EventMatrix, HawkesModel, ParentCounts};
use crate::{Error, Result};

/// Simulated counts plus the true parent of every generated event.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub events: EventMatrix,
    pub parents: ParentCounts,
}

fn poisson(rng: &mut ChaCha8Rng, mean: f64) -> u32 {
    if mean <= 0.0 {
        return 0;
    }
    Poisson::new(mean).expect("finite positive mean").sample(rng) as u32
}

/// Forward simulation. Each day's count on `k` is generated as the sum of
/// independent Poisson draws, one for the background and one per
/// `(j, lag)` source, which has the same law as a single
/// `Poisson(rate(k, t))` draw while recording which source produced each
/// event.
pub fn simulate_with_parents(model: &HawkesModel, days: usize, seed: u64) -> Result<Simulation> {
    let rho = model.spectral_radius();
    if rho >= 1.0 {
        return Err(Error::NonStationary(rho));
    }
    let k = model.k;
    let mut events = EventMatrix::zeros(k, days)?;
    let mut parents = ParentCounts::zeros(k);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for t in 0..days {
        for kk in 0..k {
            let mut n = poisson(&mut rng, model.background[kk]);
            parents.background[kk] += n as f64;
            for j in 0..k {
                let w = model.weight(j, kk);
                if w == 0.0 {
                    continue;
                }
                let phi = model.impulse(j, kk);
                let mut mean = 0.0;
                for lag in 1..=model.max_lag.min(t) {
                    mean += w * phi[lag - 1] * events.get(j, t - lag) as f64;
                }
                let c = poisson(&mut rng, mean);
                parents.parents[j * k + kk] += c as f64;
                n += c;
            }
            events.set(kk, t, n);
            parents.totals[kk] += n as f64;
        }
    }
    Ok(Simulation { events, parents })
}

pub fn simulate(model: &HawkesModel, days: usize, seed: u64) -> Result<EventMatrix> {
    simulate_with_parents(model, days, seed).map(|s| s.events)
}
