//! Rejection sampler for orbits consistent with an initial AoA estimate.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::orbit::{sample_prior, CircularOrbit, Direction, OrbitParams, DEFAULT_RATE_DT};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AbcConfig {
    /// Candidate draws from the prior.
    pub n_trials: usize,
    /// Samples kept.
    pub n_samp: usize,
    /// Look-ahead for the visibility test, s.
    pub lookahead: f64,
    /// Finite-difference step for the rising test, s.
    pub rate_dt: f64,
}

impl Default for AbcConfig {
    fn default() -> Self {
        AbcConfig { n_trials: 1_000_000, n_samp: 2000, lookahead: 20.0, rate_dt: DEFAULT_RATE_DT }
    }
}

impl AbcConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_samp == 0 || self.n_trials == 0 {
            return Err(Error::Config("ABC sample and trial counts must be positive".into()));
        }
        if !(self.lookahead > 0.0 && self.rate_dt > 0.0) {
            return Err(Error::Config("ABC look-ahead and rate step must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AbcSample {
    pub params: OrbitParams,
    /// Cosine between the t = 0 direction and the initial AoA estimate.
    pub fitness: f64,
}

/// Whether `gamma` passes the acceptance tests: visible at the look-ahead
/// time and rising (decreasing polar angle) at t = 0.
pub fn abc_accepts(orbit: &CircularOrbit, gamma: &OrbitParams, cfg: &AbcConfig) -> bool {
    orbit.is_visible(cfg.lookahead, gamma)
        && matches!(orbit.polar_rate(0.0, gamma, cfg.rate_dt), Ok(rate) if rate < 0.0)
}

/// Draws `cfg.n_trials` candidates from the prior and returns the
/// `cfg.n_samp` accepted ones with the highest fitness, best first.
pub fn abc_sample<R: Rng + ?Sized>(
    initial_aoa: &Direction,
    orbit: &CircularOrbit,
    cfg: &AbcConfig,
    rng: &mut R,
) -> Result<Vec<AbcSample>> {
    cfg.validate()?;
    let mut accepted = Vec::new();
    for _ in 0..cfg.n_trials {
        let g = sample_prior(rng);
        if !abc_accepts(orbit, &g, cfg) {
            continue;
        }
        let Ok(d) = orbit.direction(0.0, &g) else { continue };
        accepted.push(AbcSample { params: g, fitness: d.as_vector().dot(initial_aoa.as_vector()) });
    }
    if accepted.len() < cfg.n_samp {
        return Err(Error::InsufficientSamples { accepted: accepted.len(), needed: cfg.n_samp });
    }
    // stable sort keeps draw order among equal fitness
    accepted.sort_by(|a, b| b.fitness.total_cmp(&a.fitness));
    accepted.truncate(cfg.n_samp);
    Ok(accepted)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn small() -> AbcConfig {
        AbcConfig { n_trials: 200_000, n_samp: 200, ..AbcConfig::default() }
    }

    #[test]
    fn returned_samples_pass_tests_and_are_ranked() {
        let orbit = CircularOrbit::default();
        let d0 = Direction::from_az_el(0.7, 0.6);
        let cfg = small();
        let out = abc_sample(&d0, &orbit, &cfg, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out.len(), 200);
        for s in &out {
            assert!(orbit.is_visible(cfg.lookahead, &s.params));
            assert!(orbit.polar_rate(0.0, &s.params, 1.0).unwrap() < 0.0);
            let d = orbit.direction(0.0, &s.params).unwrap();
            assert!((d.as_vector().dot(d0.as_vector()) - s.fitness).abs() < 1e-12);
        }
        assert!(out.windows(2).all(|w| w[0].fitness >= w[1].fitness));
    }

    #[test]
    fn kept_set_dominates_rejected_by_rank() {
        let orbit = CircularOrbit::default();
        let d0 = Direction::from_az_el(2.0, 0.9);
        let mut cfg = small();
        let all = {
            let mut c = cfg;
            c.n_samp = 1;
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            let mut acc = Vec::new();
            for _ in 0..c.n_trials {
                let g = sample_prior(&mut rng);
                if abc_accepts(&orbit, &g, &c) {
                    acc.push(orbit.direction(0.0, &g).unwrap().as_vector().dot(d0.as_vector()));
                }
            }
            acc
        };
        cfg.n_samp = 50;
        let top = abc_sample(&d0, &orbit, &cfg, &mut ChaCha8Rng::seed_from_u64(2)).unwrap();
        let min_kept = top.last().unwrap().fitness;
        let above = all.iter().filter(|&&f| f > min_kept).count();
        assert!(above < 50);
    }

    #[test]
    fn exact_match_has_unit_fitness() {
        let orbit = CircularOrbit::default();
        let g = OrbitParams::new(1.5, 0.4, 3.0 * std::f64::consts::FRAC_PI_2 - 0.1);
        let d = orbit.direction(0.0, &g).unwrap();
        let f = orbit.direction(0.0, &g).unwrap().as_vector().dot(d.as_vector());
        assert!((f - 1.0).abs() < 1e-15);
    }

    #[test]
    fn too_few_accepted() {
        let orbit = CircularOrbit::default();
        let cfg = AbcConfig { n_trials: 100, n_samp: 100, ..AbcConfig::default() };
        let r = abc_sample(&Direction::zenith(), &orbit, &cfg, &mut ChaCha8Rng::seed_from_u64(3));
        assert!(matches!(r, Err(Error::InsufficientSamples { needed: 100, .. })));
    }
}
