//! Sampling the chain distribution time to check the nesting-factor
//! approximation.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Bernoulli, Distribution, Geometric};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{ChainConfig, Scheduling};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonteCarloEstimate {
    /// Mean distribution time (s).
    pub mean: f64,
    pub std_error: f64,
    pub trials: usize,
}

struct Sampler {
    attempts: Geometric,
    swap: Bernoulli,
}

impl Sampler {
    /// Attempt rounds until one elementary link heralds.
    fn link<R: Rng>(&self, rng: &mut R) -> u64 {
        self.attempts.sample(rng) + 1
    }

    /// Nested doubling: both halves are built in parallel, then swapped; a
    /// failed swap discards both halves.
    fn parallel<R: Rng>(&self, links: u32, rng: &mut R) -> u64 {
        if links == 1 {
            return self.link(rng);
        }
        let half = links / 2;
        let mut total = 0;
        loop {
            let a = self.parallel(half, rng);
            let b = self.parallel(half, rng);
            total += a.max(b);
            if self.swap.sample(rng) {
                return total;
            }
        }
    }

    /// Odd links in parallel, then even links in parallel, then all swaps;
    /// any failed swap restarts the whole chain.
    fn sequential<R: Rng>(&self, links: u32, rng: &mut R) -> u64 {
        let mut total = 0;
        loop {
            for _phase in 0..2 {
                let batch = (0..(links / 2).max(1)).map(|_| self.link(rng)).max().unwrap_or(0);
                total += batch;
            }
            if (1..links).all(|_| self.swap.sample(rng)) {
                return total;
            }
        }
    }
}

/// Mean and standard error of the chain distribution time over `trials`
/// independent samples. Trial i draws from stream i of a ChaCha8 generator
/// seeded with `seed`, so results do not depend on the thread count.
pub fn monte_carlo_time(cfg: &ChainConfig<f64>, trials: usize, seed: u64) -> Result<MonteCarloEstimate> {
    cfg.validate()?;
    if !cfg.links.is_power_of_two() {
        return Err(Error::LinkCount(cfg.links as usize));
    }
    if trials < 2 {
        return Err(Error::Invalid("at least two trials are needed".into()));
    }
    if !(cfg.p_en > 0.0) {
        return Err(Error::NonPositive {
            name: "p_en",
            value: cfg.p_en,
        });
    }
    let sampler = Sampler {
        attempts: Geometric::new(cfg.p_en).map_err(|e| Error::Invalid(e.to_string()))?,
        swap: Bernoulli::new(cfg.scheme.swap_success()).map_err(|e| Error::Invalid(e.to_string()))?,
    };
    let slot = cfg.link.attempt_time();
    let rounds: Vec<u64> = (0..trials)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            match cfg.scheduling {
                Scheduling::Parallel => sampler.parallel(cfg.links, &mut rng),
                Scheduling::Sequential => sampler.sequential(cfg.links, &mut rng),
            }
        })
        .collect();
    let n = trials as f64;
    let mean = rounds.iter().map(|&r| r as u128).sum::<u128>() as f64 / n;
    let var = rounds.iter().map(|&r| (r as f64 - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(MonteCarloEstimate {
        mean: mean * slot,
        std_error: (var / n).sqrt() * slot,
        trials,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytic::LinkParams;
    use crate::chain::{avg_time, ComponentFidelities, SchemeKind};

    fn cfg(m: u32, p_en: f64, p_s: f64, scheduling: Scheduling) -> ChainConfig<f64> {
        ChainConfig {
            total_km: 50.0 * m as f64,
            links: m,
            link: LinkParams::new(50.0),
            p_en,
            scheme: if p_s < 1.0 {
                SchemeKind::ExchangePostselected { p_gate: p_s }
            } else {
                SchemeKind::ExchangeDeterministic
            },
            fidelities: ComponentFidelities::perfect(),
            scheduling,
        }
    }

    #[test]
    fn certain_success_has_no_variance() {
        for s in [Scheduling::Parallel, Scheduling::Sequential] {
            let c = cfg(8, 1.0, 1.0, s);
            let est = monte_carlo_time(&c, 1000, 3).unwrap();
            let expected = match s {
                Scheduling::Parallel => 1.0,
                Scheduling::Sequential => 2.0,
            } * c.link.attempt_time();
            assert!((est.mean - expected).abs() < 1e-15);
            assert_eq!(est.std_error, 0.0);
        }
    }

    #[test]
    fn same_seed_same_result() {
        let c = cfg(4, 0.05, 0.9, Scheduling::Parallel);
        let a = monte_carlo_time(&c, 5000, 42).unwrap();
        let b = monte_carlo_time(&c, 5000, 42).unwrap();
        assert_eq!(a.mean.to_bits(), b.mean.to_bits());
        let d = monte_carlo_time(&c, 5000, 43).unwrap();
        assert_ne!(a.mean.to_bits(), d.mean.to_bits());
    }

    #[test]
    fn sequential_matches_its_formula() {
        let c = cfg(4, 0.01, 0.9, Scheduling::Sequential);
        let est = monte_carlo_time(&c, 20000, 7).unwrap();
        let want = avg_time(&c).unwrap();
        assert!((est.mean / want - 1.0).abs() < 0.1, "{} vs {}", est.mean, want);
    }

    #[test]
    fn rejects_non_power_of_two() {
        let mut c = cfg(4, 0.1, 1.0, Scheduling::Parallel);
        c.links = 6;
        c.total_km = 300.0;
        assert!(matches!(monte_carlo_time(&c, 100, 1), Err(Error::LinkCount(6))));
    }
}
