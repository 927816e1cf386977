//! Seeded Monte-Carlo batches, grid sweeps, scaling fits, and the exact
//! stop-time oracle used to cross-check the sampler.
//!
//! All randomness flows from one 64-bit master seed through per-trial
//! counter-based streams, so results are bit-identical for a given
//! (seed, trials, config) regardless of worker count or execution order.

pub mod dp;
pub mod stats;

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{stop_iteration_expected, TargetFraction};
use crate::error::{Error, Result};
use crate::search::{
    canonical_rotations, deterministic_expectation_run, run_canonical, run_proposed,
    AlgorithmConfig, ProblemInstance, SearchOutcome,
};
use crate::Real;

pub use dp::{exact_stop_distribution, StopEntry, StopTimeDistribution, MAX_HORIZON};
pub use stats::{chi_square_goodness, wilson_interval, ChiSquareTest, Z_95};

/// Which algorithm a batch drives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Algorithm {
    Proposed,
    Canonical { r_override: Option<u64> },
}

/// Default probability grid for sweeps and expectation tables.
pub const DEFAULT_P_GRID: [f64; 9] = [
    1.0 / (1u64 << 20) as f64,
    1.0 / (1u64 << 16) as f64,
    1.0 / (1u64 << 12) as f64,
    1.0 / (1u64 << 8) as f64,
    1.0 / (1u64 << 4) as f64,
    0.1,
    0.25,
    0.4,
    0.5,
];

/// Aggregate statistics of a batch of independent trials.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialStats {
    pub trials: u64,
    pub successes: u64,
    /// Fraction of trials that ended with the marked state found (restarts
    /// included).
    pub success_rate: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub attempts_total: u64,
    pub attempt_successes: u64,
    /// Fraction of individual measurement attempts that succeeded.
    pub per_attempt_success_rate: f64,
    pub per_attempt_ci_low: f64,
    pub per_attempt_ci_high: f64,
    pub mean_queries: f64,
    pub median_queries: f64,
    pub mean_grover_iterations: f64,
    pub mean_restarts: f64,
    pub capped_attempts: u64,
    /// Stop-iteration counts over every attempt.
    pub stop_histogram: BTreeMap<u64, u64>,
}

/// Per-trial random stream: one master seed, a block index for the problem
/// row, and the trial index as the stream counter.
pub fn trial_stream(seed: u64, block: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((block << 40) | trial);
    rng
}

const MAX_TRIALS: u64 = 1 << 40;

/// Runs `trials` independent seeded trials and aggregates them. The result
/// is a pure function of (problem, config, algorithm, trials).
pub fn monte_carlo(
    problem: &ProblemInstance,
    config: &AlgorithmConfig,
    algorithm: Algorithm,
    trials: u64,
) -> Result<TrialStats> {
    monte_carlo_block(problem, config, algorithm, trials, 0)
}

fn monte_carlo_block(
    problem: &ProblemInstance,
    config: &AlgorithmConfig,
    algorithm: Algorithm,
    trials: u64,
    block: u64,
) -> Result<TrialStats> {
    if trials == 0 || trials >= MAX_TRIALS {
        return Err(Error::InvalidConfig(format!(
            "trials must lie in [1, 2^40), got {trials}"
        )));
    }
    config.validate()?;
    let outcomes: Result<Vec<SearchOutcome>> = (0..trials)
        .into_par_iter()
        .map(|t| {
            let mut rng = trial_stream(config.seed, block, t);
            match algorithm {
                Algorithm::Proposed => run_proposed(problem, config, &mut rng),
                Algorithm::Canonical { r_override } => {
                    run_canonical(problem, config, r_override, &mut rng)
                }
            }
        })
        .collect();
    let outcomes = outcomes?;
    for o in &outcomes {
        if o.found && !problem.contains(o.measured_index) {
            return Err(Error::InvalidConfig(format!(
                "measured index {} reported found but is not marked",
                o.measured_index
            )));
        }
    }
    Ok(aggregate(&outcomes))
}

fn aggregate(outcomes: &[SearchOutcome]) -> TrialStats {
    let trials = outcomes.len() as u64;
    let successes = outcomes.iter().filter(|o| o.found).count() as u64;
    let attempts_total: u64 = outcomes.iter().map(|o| o.attempts.len() as u64).sum();
    let attempt_successes: u64 = outcomes
        .iter()
        .map(|o| o.attempts.iter().filter(|a| a.success).count() as u64)
        .sum();
    let capped_attempts: u64 = outcomes
        .iter()
        .map(|o| o.attempts.iter().filter(|a| a.forced_by_cap).count() as u64)
        .sum();
    let mut stop_histogram = BTreeMap::new();
    for o in outcomes {
        for a in &o.attempts {
            *stop_histogram.entry(a.stop_iteration).or_insert(0u64) += 1;
        }
    }
    let mut queries: Vec<u64> = outcomes.iter().map(|o| o.oracle_queries_total).collect();
    queries.sort_unstable();
    let median_queries = if queries.is_empty() {
        0.0
    } else if queries.len() % 2 == 1 {
        queries[queries.len() / 2] as f64
    } else {
        (queries[queries.len() / 2 - 1] + queries[queries.len() / 2]) as f64 / 2.0
    };
    let nf = trials as f64;
    let (ci_low, ci_high) = wilson_interval(successes, trials, Z_95);
    let (pa_low, pa_high) = wilson_interval(attempt_successes, attempts_total, Z_95);
    TrialStats {
        trials,
        successes,
        success_rate: successes as f64 / nf,
        ci_low,
        ci_high,
        attempts_total,
        attempt_successes,
        per_attempt_success_rate: attempt_successes as f64 / attempts_total.max(1) as f64,
        per_attempt_ci_low: pa_low,
        per_attempt_ci_high: pa_high,
        mean_queries: outcomes
            .iter()
            .map(|o| o.oracle_queries_total as f64)
            .sum::<f64>()
            / nf,
        median_queries,
        mean_grover_iterations: outcomes
            .iter()
            .map(|o| o.grover_iterations_total as f64)
            .sum::<f64>()
            / nf,
        mean_restarts: outcomes.iter().map(|o| o.restarts as f64).sum::<f64>() / nf,
        capped_attempts,
        stop_histogram,
    }
}

/// Aligns a sampled stop histogram with the exact law for goodness-of-fit
/// testing: one bin per horizon plus a final bin for the forced-measurement
/// tail. The batch must have been run with max_restarts = 0 and a per-attempt
/// cap equal to the law's horizon, so that forced attempts (which share the
/// last stop-iteration bin) can be split back out via the capped count.
pub fn align_histogram_with_law(
    stats: &TrialStats,
    dist: &StopTimeDistribution,
) -> (Vec<f64>, Vec<f64>) {
    let trials = stats.trials as f64;
    let last = dist.horizon - 1;
    let mut observed = Vec::with_capacity(dist.entries.len() + 1);
    let mut expected = Vec::with_capacity(dist.entries.len() + 1);
    for e in &dist.entries {
        let mut count = *stats.stop_histogram.get(&e.r).unwrap_or(&0) as f64;
        if e.r == last {
            count -= stats.capped_attempts as f64;
        }
        observed.push(count);
        expected.push(e.probability * trials);
    }
    observed.push(stats.capped_attempts as f64);
    expected.push(dist.truncated_mass * trials);
    (observed, expected)
}

/// One sweep row: the fraction, its noise-free stop prediction, and the
/// sampled statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub p: f64,
    /// g at the expected stop horizon; None when the threshold is
    /// unreachable in expectation.
    pub expected_g_at_stop: Option<f64>,
    pub stats: TrialStats,
}

/// Maps [`monte_carlo`] over a probability grid, one stream block per row.
pub fn sweep(
    grid: &[f64],
    config: &AlgorithmConfig,
    algorithm: Algorithm,
    trials: u64,
) -> Result<Vec<SweepRow>> {
    grid.iter()
        .enumerate()
        .map(|(i, &p)| {
            let problem = ProblemInstance::from_fraction(p)?;
            let fraction = problem.fraction();
            let expected_g_at_stop =
                stop_iteration_expected(&fraction, config.set_val, None)
                    .ok()
                    .map(|(_, g)| g);
            let stats = monte_carlo_block(&problem, config, algorithm, trials, i as u64)?;
            Ok(SweepRow {
                p,
                expected_g_at_stop,
                stats,
            })
        })
        .collect()
}

/// One scaling row at N = 2^exponent, m = 1, from the noise-free iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n_states: u64,
    pub r_stop: u64,
    pub queries_proposed: u64,
    pub queries_canonical: u64,
    pub ratio: f64,
}

/// Builds the scaling table over N = 2^exp_min .. 2^exp_max with a single
/// marked state, using the expected stop iteration (no sampling).
pub fn scaling_rows(exp_min: u32, exp_max: u32, set_val: Real) -> Result<Vec<ScalingRow>> {
    if exp_min < 1 || exp_min > exp_max || exp_max > 62 {
        return Err(Error::InvalidConfig(format!(
            "scaling exponents must satisfy 1 <= min <= max <= 62, got {exp_min}..{exp_max}"
        )));
    }
    (exp_min..=exp_max)
        .map(|e| {
            let n_states = 1u64 << e;
            let fraction = TargetFraction::from_counts(1, n_states)?;
            let (r_stop, _) = stop_iteration_expected(&fraction, set_val, None)?;
            let queries_proposed = 2 * (r_stop + 1);
            let queries_canonical = canonical_rotations(&fraction).max(1);
            Ok(ScalingRow {
                n_states,
                r_stop,
                queries_proposed,
                queries_canonical,
                ratio: queries_proposed as f64 / queries_canonical as f64,
            })
        })
        .collect()
}

/// Least-squares scaling summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScalingFit {
    /// Slope of log(queries_proposed) against log(N).
    pub slope: f64,
    /// Query ratio at the largest N in the table.
    pub final_ratio: f64,
}

/// Fits the scaling law; needs at least four rows spanning three octaves.
pub fn scaling_fit(rows: &[ScalingRow]) -> Result<ScalingFit> {
    if rows.len() < 4 {
        return Err(Error::DegenerateGrid);
    }
    let min_n = rows.iter().map(|r| r.n_states).min().unwrap();
    let max_n = rows.iter().map(|r| r.n_states).max().unwrap();
    if max_n < min_n.saturating_mul(8) {
        return Err(Error::DegenerateGrid);
    }
    let xs: Vec<f64> = rows.iter().map(|r| (r.n_states as f64).ln()).collect();
    let ys: Vec<f64> = rows.iter().map(|r| (r.queries_proposed as f64).ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(ScalingFit {
        slope: sxy / sxx,
        final_ratio: rows.last().unwrap().ratio,
    })
}

/// One row of the noise-free expectation table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationRow {
    pub p: f64,
    pub r_stop: u64,
    pub g_at_stop: f64,
    pub g_at_measure: f64,
    pub oracle_queries: u64,
    pub capped: bool,
}

/// Runs the deterministic expectation dynamics over a probability grid.
pub fn expectation_table(grid: &[f64], config: &AlgorithmConfig) -> Result<Vec<ExpectationRow>> {
    grid.iter()
        .map(|&p| {
            let fraction = TargetFraction::new(p)?;
            let out = deterministic_expectation_run(&fraction, config)?;
            Ok(ExpectationRow {
                p,
                r_stop: out.stop_iteration,
                g_at_stop: out.g_at_stop,
                g_at_measure: out.g_at_measure,
                oracle_queries: out.oracle_queries,
                capped: out.capped,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::search::EngineMode;
    use approx::assert_abs_diff_eq;

    fn quick_cfg(seed: u64) -> AlgorithmConfig {
        AlgorithmConfig {
            seed,
            ..AlgorithmConfig::default()
        }
    }

    #[test]
    fn all_marked_batch_always_succeeds() {
        let problem = ProblemInstance::from_fraction(1.0).unwrap();
        let stats = monte_carlo(&problem, &quick_cfg(3), Algorithm::Proposed, 500).unwrap();
        assert_eq!(stats.success_rate, 1.0);
        assert_eq!(stats.successes, 500);
        assert_eq!(stats.mean_restarts, 0.0);
    }

    #[test]
    fn batches_are_reproducible() {
        let problem = ProblemInstance::from_fraction(0.25).unwrap();
        let a = monte_carlo(&problem, &quick_cfg(42), Algorithm::Proposed, 400).unwrap();
        let b = monte_carlo(&problem, &quick_cfg(42), Algorithm::Proposed, 400).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo(&problem, &quick_cfg(43), Algorithm::Proposed, 400).unwrap();
        assert_ne!(a.stop_histogram, c.stop_histogram);
    }

    #[test]
    fn worker_count_does_not_change_results() {
        let problem = ProblemInstance::from_fraction(1.0 / 16.0).unwrap();
        let config = quick_cfg(7);
        let single = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap()
            .install(|| monte_carlo(&problem, &config, Algorithm::Proposed, 300).unwrap());
        let several = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap()
            .install(|| monte_carlo(&problem, &config, Algorithm::Proposed, 300).unwrap());
        assert_eq!(single, several);
    }

    #[test]
    fn canonical_quarter_fraction_matches_certain_success() {
        let problem = ProblemInstance::from_fraction(0.25).unwrap();
        let stats = monte_carlo(
            &problem,
            &quick_cfg(11),
            Algorithm::Canonical { r_override: None },
            2000,
        )
        .unwrap();
        assert_eq!(stats.success_rate, 1.0);
        assert_eq!(stats.mean_queries, 1.0);
    }

    #[test]
    fn sampler_agrees_with_exact_law() {
        let problem = ProblemInstance::from_fraction(1.0 / 16.0).unwrap();
        let mut config = quick_cfg(19);
        config.burn_in = 0;
        config.max_restarts = 0;
        let horizon = 600u64;
        config.max_iterations_per_attempt = Some(horizon);
        let trials = 20_000u64;
        let stats = monte_carlo(&problem, &config, Algorithm::Proposed, trials).unwrap();
        let dist = exact_stop_distribution(&problem.fraction(), &config, horizon).unwrap();

        let sigma = (dist.success_probability * (1.0 - dist.success_probability)
            / trials as f64)
            .sqrt();
        assert!(
            (stats.success_rate - dist.success_probability).abs() <= 3.0 * sigma,
            "sampled {} vs exact {}",
            stats.success_rate,
            dist.success_probability
        );

        let (observed, expected) = align_histogram_with_law(&stats, &dist);
        assert_abs_diff_eq!(
            observed.iter().sum::<f64>(),
            trials as f64,
            epsilon = 1e-9
        );
        let test = chi_square_goodness(&observed, &expected, 5.0).unwrap();
        assert!(test.p_value > 0.001, "chi-square p = {}", test.p_value);
    }

    #[test]
    fn sweep_shapes_and_empty_grid() {
        let rows = sweep(&[], &quick_cfg(1), Algorithm::Proposed, 10).unwrap();
        assert!(rows.is_empty());

        let grid = [0.5, 0.25, 0.1];
        let rows = sweep(&grid, &quick_cfg(1), Algorithm::Proposed, 50).unwrap();
        assert_eq!(rows.len(), 3);
        for (row, &p) in rows.iter().zip(&grid) {
            assert_eq!(row.p, p);
            assert!(row.expected_g_at_stop.unwrap() >= 0.5);
            assert_eq!(row.stats.trials, 50);
        }
    }

    #[test]
    fn scaling_rows_and_fit() {
        let rows = scaling_rows(10, 20, 1.0).unwrap();
        assert_eq!(rows.len(), 11);
        let fit = scaling_fit(&rows).unwrap();
        assert_abs_diff_eq!(fit.slope, 0.5, epsilon = 0.03);
        assert_abs_diff_eq!(fit.final_ratio, 2.0, epsilon = 0.1);
        for row in &rows {
            assert_eq!(row.queries_proposed, 2 * (row.r_stop + 1));
        }
    }

    #[test]
    fn scaling_fit_rejects_degenerate_grids() {
        let rows = scaling_rows(10, 12, 1.0).unwrap();
        assert!(matches!(scaling_fit(&rows), Err(Error::DegenerateGrid)));
        assert!(scaling_rows(5, 4, 1.0).is_err());
    }

    #[test]
    fn expectation_table_success_floor() {
        let mut config = quick_cfg(1);
        config.burn_in = 0;
        let rows = expectation_table(&DEFAULT_P_GRID, &config).unwrap();
        assert_eq!(rows.len(), 9);
        for row in &rows {
            assert!(
                row.g_at_stop >= 0.5,
                "g at stop {} below 0.5 at p={}",
                row.g_at_stop,
                row.p
            );
            assert!(!row.capped);
        }
    }

    #[test]
    fn density_mode_sweep_runs_to_completion() {
        let mut config = quick_cfg(23);
        config.mode = EngineMode::DephasedDensity;
        config.max_iterations_per_attempt = Some(1500);
        let rows = sweep(&[0.25, 0.5], &config, Algorithm::Proposed, 100).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert!(row.stats.trials == 100);
        }
    }
}
