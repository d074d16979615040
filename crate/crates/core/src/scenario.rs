//! Seeded Monte Carlo load scenarios.
//!
//! Scenario `s` scales the base complex load of bus `i` at step `t` by a
//! multiplier drawn from a Gaussian with mean 1 and standard deviation
//! `sigma`, truncated below at `floor`. Each multiplier comes from its own
//! position in a ChaCha8 keystream: the seed selects the key, the scenario
//! index selects the stream and `(bus id, t)` selects the word offset. Cells
//! can therefore be generated in any order, or in parallel, with identical
//! results.

use num_complex::Complex64;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};
use thiserror::Error;

use crate::netmodel::{BusId, LoadProfile};

pub const DEFAULT_SIGMA: f64 = 0.15;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseConfig {
    /// Relative standard deviation of the multiplier.
    pub sigma: f64,
    /// Lower truncation point of the multiplier.
    pub floor: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            sigma: DEFAULT_SIGMA,
            floor: 0.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("scenario count must be at least 1")]
    NoScenarios,
    #[error("sigma must be finite and non-negative, got {0}")]
    InvalidSigma(f64),
    #[error("floor must be finite, non-negative and below 1, got {0}")]
    InvalidFloor(f64),
    #[error("base profiles are empty or disagree on horizon")]
    BadProfiles,
    #[error("scenario data is not dense: expected {expected} values, found {found}")]
    NotDense { expected: usize, found: usize },
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.sigma >= 0.0 && self.sigma.is_finite()) {
            return Err(ScenarioError::InvalidSigma(self.sigma));
        }
        if !(self.floor >= 0.0 && self.floor < 1.0) {
            return Err(ScenarioError::InvalidFloor(self.floor));
        }
        Ok(())
    }
}

/// `n` load realizations for a set of buses over a common horizon.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioSet {
    n: usize,
    seed: u64,
    bus_ids: Vec<BusId>,
    horizon: usize,
    /// Indexed `(s * buses + i) * horizon + t`.
    data: Vec<Complex64>,
}

impl ScenarioSet {
    /// Builds a set from externally supplied values in `(s, i, t)` order.
    pub fn from_parts(
        n: usize,
        seed: u64,
        bus_ids: Vec<BusId>,
        horizon: usize,
        data: Vec<Complex64>,
    ) -> Result<Self, ScenarioError> {
        if n == 0 {
            return Err(ScenarioError::NoScenarios);
        }
        let expected = n * bus_ids.len() * horizon;
        if data.len() != expected {
            return Err(ScenarioError::NotDense {
                expected,
                found: data.len(),
            });
        }
        Ok(ScenarioSet {
            n,
            seed,
            bus_ids,
            horizon,
            data,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn bus_ids(&self) -> &[BusId] {
        &self.bus_ids
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// Load of scenario `s`, `i`-th bus of [`ScenarioSet::bus_ids`], step `t`.
    pub fn get(&self, s: usize, i: usize, t: usize) -> Complex64 {
        self.data[(s * self.bus_ids.len() + i) * self.horizon + t]
    }

    /// Restricts the set to a single scenario.
    pub fn scenario(&self, s: usize) -> ScenarioSet {
        let block = self.bus_ids.len() * self.horizon;
        ScenarioSet {
            n: 1,
            seed: self.seed,
            bus_ids: self.bus_ids.clone(),
            horizon: self.horizon,
            data: self.data[s * block..(s + 1) * block].to_vec(),
        }
    }
}

/// Multiplier source keyed by `(seed, scenario, bus, t)`.
#[derive(Clone)]
pub struct MultiplierStream {
    base: ChaCha8Rng,
    cfg: NoiseConfig,
    /// CDF of the standardized truncation point.
    cdf_floor: f64,
    normal: Normal,
}

impl MultiplierStream {
    pub fn new(seed: u64, cfg: NoiseConfig) -> Self {
        let normal = Normal::standard();
        let cdf_floor = if cfg.sigma > 0.0 {
            normal.cdf((cfg.floor - 1.0) / cfg.sigma)
        } else {
            0.0
        };
        MultiplierStream {
            base: ChaCha8Rng::seed_from_u64(seed),
            cfg,
            cdf_floor,
            normal,
        }
    }

    /// Uniform draw in the open interval (0, 1) for one cell.
    pub fn uniform(&self, scenario: usize, bus: BusId, t: usize) -> f64 {
        let mut rng = self.base.clone();
        rng.set_stream(scenario as u64);
        // Keystream positions are 68 bits wide: 32 for the bus, 32 for t, one
        // u64 (two words) per cell.
        let word = ((u128::from(bus.0) << 32) | (t as u128 & 0xffff_ffff)) * 2;
        rng.set_word_pos(word);
        let bits = rng.next_u64() >> 11;
        (bits as f64 + 0.5) / (1u64 << 53) as f64
    }

    /// Truncated-Gaussian multiplier by inverse-CDF sampling.
    pub fn multiplier(&self, scenario: usize, bus: BusId, t: usize) -> f64 {
        if self.cfg.sigma == 0.0 {
            return 1.0;
        }
        let u = self.uniform(scenario, bus, t);
        let p = self.cdf_floor + u * (1.0 - self.cdf_floor);
        let m = 1.0 + self.cfg.sigma * self.normal.inverse_cdf(p);
        m.max(self.cfg.floor)
    }
}

/// Generates `n` scenarios around `base`.
pub fn generate(
    base: &[LoadProfile],
    cfg: NoiseConfig,
    n: usize,
    seed: u64,
) -> Result<ScenarioSet, ScenarioError> {
    if n == 0 {
        return Err(ScenarioError::NoScenarios);
    }
    cfg.validate()?;
    let horizon = base.first().map(LoadProfile::horizon).ok_or(ScenarioError::BadProfiles)?;
    if base
        .iter()
        .any(|p| p.p.len() != horizon || p.q.len() != horizon)
    {
        return Err(ScenarioError::BadProfiles);
    }
    let stream = MultiplierStream::new(seed, cfg);
    let buses = base.len();
    let data: Vec<Complex64> = (0..n * buses * horizon)
        .into_par_iter()
        .map(|cell| {
            let t = cell % horizon;
            let i = (cell / horizon) % buses;
            let s = cell / (horizon * buses);
            let profile = &base[i];
            let m = stream.multiplier(s, profile.bus_id, t);
            Complex64::new(profile.p[t] * m, profile.q[t] * m)
        })
        .collect();
    Ok(ScenarioSet {
        n,
        seed,
        bus_ids: base.iter().map(|p| p.bus_id).collect(),
        horizon,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> Vec<LoadProfile> {
        vec![
            LoadProfile {
                bus_id: BusId(3),
                p: vec![0.2, 0.4, -0.1],
                q: vec![0.05, 0.1, 0.0],
            },
            LoadProfile {
                bus_id: BusId(7),
                p: vec![1.0, 0.0, 0.5],
                q: vec![0.2, 0.0, 0.1],
            },
        ]
    }

    #[test]
    fn zero_sigma_reproduces_base() {
        let cfg = NoiseConfig {
            sigma: 0.0,
            floor: 0.0,
        };
        let set = generate(&base(), cfg, 5, 1).unwrap();
        for s in 0..5 {
            for (i, profile) in base().iter().enumerate() {
                for t in 0..3 {
                    assert_eq!(set.get(s, i, t), Complex64::new(profile.p[t], profile.q[t]));
                }
            }
        }
    }

    #[test]
    fn seed_determinism() {
        let cfg = NoiseConfig::default();
        let a = generate(&base(), cfg, 50, 42).unwrap();
        let b = generate(&base(), cfg, 50, 42).unwrap();
        let c = generate(&base(), cfg, 50, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.data, c.data);
    }

    #[test]
    fn cells_are_keyed_not_sequenced() {
        // Reordering the base profiles leaves every bus's draws unchanged.
        let cfg = NoiseConfig::default();
        let a = generate(&base(), cfg, 10, 9).unwrap();
        let mut rev = base();
        rev.reverse();
        let b = generate(&rev, cfg, 10, 9).unwrap();
        for s in 0..10 {
            for t in 0..3 {
                assert_eq!(a.get(s, 0, t), b.get(s, 1, t));
                assert_eq!(a.get(s, 1, t), b.get(s, 0, t));
            }
        }
        // A smaller run is a prefix of a larger one.
        let small = generate(&base(), cfg, 3, 9).unwrap();
        for s in 0..3 {
            assert_eq!(small.scenario(s), a.scenario(s));
        }
    }

    #[test]
    fn floor_keeps_multiplier_nonnegative() {
        let cfg = NoiseConfig {
            sigma: 2.0,
            floor: 0.0,
        };
        let stream = MultiplierStream::new(5, cfg);
        for s in 0..2000 {
            assert!(stream.multiplier(s, BusId(1), 0) >= 0.0);
        }
    }

    #[test]
    fn invalid_inputs() {
        assert_eq!(
            generate(&base(), NoiseConfig::default(), 0, 1),
            Err(ScenarioError::NoScenarios)
        );
        let bad = NoiseConfig {
            sigma: -0.1,
            floor: 0.0,
        };
        assert_eq!(
            generate(&base(), bad, 1, 1),
            Err(ScenarioError::InvalidSigma(-0.1))
        );
        assert_eq!(
            generate(&[], NoiseConfig::default(), 1, 1),
            Err(ScenarioError::BadProfiles)
        );
    }
}
