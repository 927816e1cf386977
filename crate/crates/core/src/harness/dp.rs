//! Exact stopping-time law of the counter process.
//!
//! The stopping rule reads the counts only through (samples, ones-count), so
//! a dynamic program over those states enumerates the process exactly. Each
//! step evolves the alive mass with the outcome-1 probability of the current
//! rotation, then applies the very same stop predicate the simulator uses to
//! every reachable count pair.

use serde::{Deserialize, Serialize};

use crate::analytic::{success_probability, TargetFraction};
use crate::engine::CloneChannel;
use crate::error::{Error, Result};
use crate::estimator::{corrected_ratio, should_stop, CounterState};
use crate::search::AlgorithmConfig;
use crate::Real;

/// Enumeration cap: O(horizon^2) states.
pub const MAX_HORIZON: u64 = 10_000;

/// One row of the stop-time law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StopEntry {
    /// Pass index the rule fires at (samples - 1).
    pub r: u64,
    pub probability: f64,
    /// Success probability the last counted sample was drawn from.
    pub g_at_stop: f64,
    /// Success probability at the measurement, one rotation later.
    pub g_at_measure: f64,
}

/// Exact stop-time distribution up to a truncation horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StopTimeDistribution {
    pub horizon: u64,
    pub entries: Vec<StopEntry>,
    /// Mass still alive after `horizon` passes; a simulator capped at the
    /// same horizon measures this mass forcibly.
    pub truncated_mass: f64,
    /// Success probability of that forced measurement.
    pub g_at_horizon: f64,
    /// Per-attempt success probability including the forced tail.
    pub success_probability: f64,
}

/// Enumerates the stop-time law of the idealized dynamics under `config`'s
/// threshold, reduction factor, and burn-in.
pub fn exact_stop_distribution(
    fraction: &TargetFraction<Real>,
    config: &AlgorithmConfig,
    horizon: u64,
) -> Result<StopTimeDistribution> {
    if horizon == 0 || horizon > MAX_HORIZON {
        return Err(Error::HorizonTooLarge {
            got: horizon,
            max: MAX_HORIZON,
        });
    }
    config.validate()?;
    let channel = CloneChannel::new(config.eta)?;

    // alive[c1] = probability of still running with c1 ones after k samples.
    let mut alive: Vec<f64> = vec![1.0];
    let mut entries = Vec::with_capacity(horizon as usize);
    for k in 0..horizon {
        let g = success_probability(fraction, k);
        let p1 = channel.outcome_one_probability(g);
        let p0 = 1.0 - p1;
        let mut next = vec![0.0f64; alive.len() + 1];
        for (c1, &mass) in alive.iter().enumerate() {
            if mass == 0.0 {
                continue;
            }
            next[c1] += mass * p0;
            next[c1 + 1] += mass * p1;
        }
        let samples = k + 1;
        let mut stopped = 0.0;
        for (c1, slot) in next.iter_mut().enumerate() {
            if *slot == 0.0 {
                continue;
            }
            let counter = CounterState::with_counts(samples - c1 as u64, c1 as u64);
            let ratio = corrected_ratio(&counter, config.eta).expect("samples >= 1");
            if should_stop(&ratio, config.set_val, samples, config.burn_in) {
                stopped += *slot;
                *slot = 0.0;
            }
        }
        entries.push(StopEntry {
            r: k,
            probability: stopped,
            g_at_stop: g,
            g_at_measure: success_probability(fraction, k + 1),
        });
        alive = next;
    }

    let truncated_mass: f64 = alive.iter().sum();
    let g_at_horizon = success_probability(fraction, horizon);
    let success_probability = entries
        .iter()
        .map(|e| e.probability * e.g_at_measure)
        .sum::<f64>()
        + truncated_mass * g_at_horizon;
    Ok(StopTimeDistribution {
        horizon,
        entries,
        truncated_mass,
        g_at_horizon,
        success_probability,
    })
}

impl StopTimeDistribution {
    pub fn total_stopped_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.probability).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cfg_burn(burn_in: u64) -> AlgorithmConfig {
        AlgorithmConfig {
            burn_in,
            ..AlgorithmConfig::default()
        }
    }

    #[test]
    fn half_fraction_first_sample_enumeration() {
        // At theta = pi/4 the first draw is one with probability 1/2; a one
        // makes the corrected denominator nonpositive with positive numerator
        // (stop), a zero leaves contradictory counts (continue).
        let fraction = TargetFraction::new(0.5).unwrap();
        let dist = exact_stop_distribution(&fraction, &cfg_burn(0), 1).unwrap();
        assert_eq!(dist.entries.len(), 1);
        assert_abs_diff_eq!(dist.entries[0].probability, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(dist.truncated_mass, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn mass_is_conserved() {
        for &(p, burn_in) in &[(0.5, 0u64), (0.25, 25), (1.0 / 256.0, 0), (0.9, 5)] {
            let fraction = TargetFraction::new(p).unwrap();
            let dist = exact_stop_distribution(&fraction, &cfg_burn(burn_in), 400).unwrap();
            assert_abs_diff_eq!(
                dist.total_stopped_mass() + dist.truncated_mass,
                1.0,
                epsilon = 1e-12
            );
            assert!(dist.entries.iter().all(|e| e.probability >= 0.0));
        }
    }

    #[test]
    fn burn_in_forbids_early_stops() {
        let fraction = TargetFraction::new(0.25).unwrap();
        let dist = exact_stop_distribution(&fraction, &cfg_burn(25), 200).unwrap();
        for e in &dist.entries {
            if e.r + 1 < 25 {
                assert_eq!(e.probability, 0.0, "stop mass before burn-in at r={}", e.r);
            }
        }
        assert!(dist.entries[24].probability > 0.0);
    }

    #[test]
    fn horizon_bounds_are_enforced() {
        let fraction = TargetFraction::new(0.5).unwrap();
        assert!(matches!(
            exact_stop_distribution(&fraction, &cfg_burn(0), 0),
            Err(Error::HorizonTooLarge { .. })
        ));
        assert!(matches!(
            exact_stop_distribution(&fraction, &cfg_burn(0), MAX_HORIZON + 1),
            Err(Error::HorizonTooLarge { .. })
        ));
    }

    #[test]
    fn success_probability_stays_in_unit_interval() {
        for &p in &[0.01, 0.25, 0.5, 1.0] {
            let fraction = TargetFraction::new(p).unwrap();
            let dist = exact_stop_distribution(&fraction, &cfg_burn(0), 300).unwrap();
            assert!((0.0..=1.0).contains(&dist.success_probability));
        }
    }
}
