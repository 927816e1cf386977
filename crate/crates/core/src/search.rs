//! The full search loops: the ratio-stopped algorithm in three engine modes,
//! the fixed-rotation baseline, and a noise-free variant that feeds the
//! estimator expected increments instead of Bernoulli draws.
//!
//! Per loop pass the ancilla is sampled from the state after r rotations,
//! then the rotation gate is applied, then the threshold is checked. The
//! measured register therefore reflects one more rotation than the last
//! counted sample; outcome records carry both `g_at_stop` (the probability
//! the counters estimated) and `g_at_measure` (the probability actually
//! measured).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::analytic::{success_probability, TargetFraction};
use crate::engine::{sample_ancilla, CloneChannel, DensityMatrix2, Register, TwoDimState};
use crate::error::{Error, Result};
use crate::estimator::{corrected_ratio, corrected_ratio_real, should_stop, CounterState};
use crate::Real;

/// State representation backing a run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EngineMode {
    /// Two-dimensional angle model; the register stays pure through readouts.
    Idealized2d,
    /// Dense statevector; readouts are independent draws, as in the 2-D model.
    FullStatevector,
    /// 2x2 density matrix dephased after every readout. Diagnostic only.
    DephasedDensity,
}

/// Largest abstract fraction denominator accepted when labeling an instance
/// built from a bare probability.
const MAX_LABEL_DENOMINATOR: u64 = 1 << 62;

/// A search instance: an explicit register with marked indices, or abstract
/// counts (m marked of N states) for the angle-based modes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemInstance {
    Indexed { n_qubits: u32, targets: Vec<u64> },
    Counts { marked: u64, total: u64 },
}

impl ProblemInstance {
    pub fn indexed(n_qubits: u32, targets: Vec<u64>) -> Result<Self> {
        // Reuse the register validation so the index set is checked once.
        let reg = Register::<Real>::uniform(n_qubits, &targets)?;
        Ok(Self::Indexed {
            n_qubits,
            targets: reg.targets().to_vec(),
        })
    }

    pub fn from_counts(marked: u64, total: u64) -> Result<Self> {
        if marked == 0 || marked > total {
            return Err(Error::InvalidCounts {
                m: marked,
                n: total,
            });
        }
        Ok(Self::Counts { marked, total })
    }

    /// Builds an abstract instance from a bare fraction. The (m, N) label is
    /// the smallest rational whose quotient rounds to exactly `p`, so the
    /// dynamics see the requested probability bit-for-bit.
    pub fn from_fraction(p: f64) -> Result<Self> {
        if !(p > 0.0 && p <= 1.0) {
            return Err(Error::InvalidFraction(p));
        }
        let (marked, total) =
            best_rational_label(p).ok_or(Error::InvalidFraction(p))?;
        Ok(Self::Counts { marked, total })
    }

    pub fn marked_count(&self) -> u64 {
        match self {
            Self::Indexed { targets, .. } => targets.len() as u64,
            Self::Counts { marked, .. } => *marked,
        }
    }

    pub fn total_states(&self) -> u64 {
        match self {
            Self::Indexed { n_qubits, .. } => 1u64 << n_qubits,
            Self::Counts { total, .. } => *total,
        }
    }

    pub fn fraction(&self) -> TargetFraction<Real> {
        TargetFraction::from_counts(self.marked_count(), self.total_states())
            .expect("instance counts were validated at construction")
    }

    pub fn contains(&self, index: u64) -> bool {
        match self {
            Self::Indexed { targets, .. } => targets.binary_search(&index).is_ok(),
            Self::Counts { marked, .. } => index < *marked,
        }
    }

    /// Maps a uniform variate to a basis-state label inside the marked set or
    /// its complement.
    fn index_label(&self, u: f64, success: bool) -> u64 {
        let m = self.marked_count();
        let n = self.total_states();
        let pool = if success { m } else { n - m };
        let pick = ((u * pool as f64) as u64).min(pool - 1);
        match self {
            Self::Counts { marked, .. } => {
                if success {
                    pick
                } else {
                    *marked + pick
                }
            }
            Self::Indexed { targets, .. } => {
                if success {
                    targets[pick as usize]
                } else {
                    kth_excluded(targets, pick)
                }
            }
        }
    }
}

/// k-th smallest index (0-based) absent from the sorted list.
fn kth_excluded(sorted: &[u64], k: u64) -> u64 {
    let mut remaining = k;
    let mut next_free = 0u64;
    for &t in sorted {
        let gap = t - next_free;
        if remaining < gap {
            return next_free + remaining;
        }
        remaining -= gap;
        next_free = t + 1;
    }
    next_free + remaining
}

fn best_rational_label(p: f64) -> Option<(u64, u64)> {
    // Walk continued-fraction convergents of p until one reproduces it.
    let (mut h0, mut k0, mut h1, mut k1) = (1u64, 0u64, 0u64, 1u64);
    let mut x = p.recip();
    loop {
        if !x.is_finite() || x >= MAX_LABEL_DENOMINATOR as f64 {
            return None;
        }
        let a = x.floor();
        let ai = a as u64;
        let h = ai.checked_mul(h1)?.checked_add(h0)?;
        let k = ai.checked_mul(k1)?.checked_add(k0)?;
        if k > MAX_LABEL_DENOMINATOR {
            return None;
        }
        if h > 0 && h as f64 / k as f64 == p {
            return Some((h, k));
        }
        h0 = h1;
        k0 = k1;
        h1 = h;
        k1 = k;
        let frac = x - a;
        if frac <= 0.0 {
            return None;
        }
        x = frac.recip();
    }
}

/// Run parameters. Defaults follow the reference choices: threshold 1.0,
/// reduction factor 1/3, and a burn-in of 25 samples before the threshold is
/// consulted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlgorithmConfig {
    pub mode: EngineMode,
    pub set_val: Real,
    pub eta: Real,
    pub burn_in: u64,
    /// Per-attempt rotation cap; `None` derives 20 sqrt(N/m) + 200.
    pub max_iterations_per_attempt: Option<u64>,
    pub max_restarts: u64,
    pub seed: u64,
}

impl Default for AlgorithmConfig {
    fn default() -> Self {
        Self {
            mode: EngineMode::Idealized2d,
            set_val: 1.0,
            eta: 1.0 / 3.0,
            burn_in: 25,
            max_iterations_per_attempt: None,
            max_restarts: 100,
            seed: 1,
        }
    }
}

impl AlgorithmConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.set_val.is_finite() || self.set_val <= 0.0 {
            return Err(Error::InvalidConfig(format!(
                "set_val must be positive and finite, got {}",
                self.set_val
            )));
        }
        CloneChannel::new(self.eta)?;
        if self.max_iterations_per_attempt == Some(0) {
            return Err(Error::InvalidConfig(
                "max_iterations_per_attempt must be at least 1".into(),
            ));
        }
        Ok(())
    }

    pub fn effective_max_iterations(&self, fraction: &TargetFraction<Real>) -> u64 {
        self.max_iterations_per_attempt.unwrap_or_else(|| {
            let derived = 20.0 / fraction.p().sqrt() + 200.0;
            derived.ceil() as u64
        })
    }
}

/// One measurement attempt inside a run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AttemptRecord {
    /// Pass index the rule fired at (= samples - 1); for the baseline, the
    /// fixed rotation count.
    pub stop_iteration: u64,
    /// Success probability the last counted sample was drawn from.
    pub g_at_stop: Real,
    /// Success probability at the measurement itself, one rotation later.
    pub g_at_measure: Real,
    /// True when the per-attempt cap forced the measurement.
    pub forced_by_cap: bool,
    pub success: bool,
}

/// Aggregate record of one full run including restarts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchOutcome {
    pub found: bool,
    pub measured_index: u64,
    pub grover_iterations_total: u64,
    pub oracle_queries_total: u64,
    pub restarts: u64,
    pub attempts: Vec<AttemptRecord>,
}

enum ModeState {
    TwoDim(TwoDimState<Real>),
    Full(Register<Real>),
    Density(DensityMatrix2<Real>),
}

impl ModeState {
    fn initial(
        problem: &ProblemInstance,
        mode: EngineMode,
        fraction: &TargetFraction<Real>,
    ) -> Result<Self> {
        match mode {
            EngineMode::Idealized2d => Ok(Self::TwoDim(TwoDimState::new(fraction))),
            EngineMode::DephasedDensity => Ok(Self::Density(DensityMatrix2::pure(fraction.theta()))),
            EngineMode::FullStatevector => match problem {
                ProblemInstance::Indexed { n_qubits, targets } => {
                    Ok(Self::Full(Register::uniform(*n_qubits, targets)?))
                }
                ProblemInstance::Counts { .. } => Err(Error::InvalidConfig(
                    "the statevector mode needs an explicit register instance".into(),
                )),
            },
        }
    }

    fn success_weight(&self) -> Real {
        match self {
            Self::TwoDim(s) => s.success_probability(),
            Self::Full(r) => r.success_probability(),
            Self::Density(d) => d.target_weight(),
        }
    }

    /// Back-action of the readout cycle on the register.
    fn after_readout(&mut self) {
        if let Self::Density(d) = self {
            d.dephase();
        }
    }

    fn grover_step(&mut self, theta0: Real) {
        match self {
            Self::TwoDim(s) => s.grover_step(theta0),
            Self::Full(r) => r.grover_step(),
            Self::Density(d) => d.grover_step(theta0),
        }
    }

    fn measure<R: Rng + ?Sized>(&self, problem: &ProblemInstance, rng: &mut R) -> (u64, bool) {
        match self {
            Self::Full(r) => r.measure(rng),
            _ => {
                let p_success = self.success_weight();
                let u_subspace = rng.random::<f64>();
                let u_within = rng.random::<f64>();
                let success =
                    u_subspace < p_success || problem.marked_count() == problem.total_states();
                (problem.index_label(u_within, success), success)
            }
        }
    }
}

/// Runs the ratio-stopped search: sample the ancilla, tally it, rotate,
/// measure once the corrected ratio reaches the threshold, and restart from
/// scratch on a wrong measurement.
pub fn run_proposed<R: Rng + ?Sized>(
    problem: &ProblemInstance,
    config: &AlgorithmConfig,
    rng: &mut R,
) -> Result<SearchOutcome> {
    config.validate()?;
    let fraction = problem.fraction();
    let channel = CloneChannel::new(config.eta)?;
    let theta0 = fraction.theta();
    let max_iter = config.effective_max_iterations(&fraction);

    let mut attempts = Vec::new();
    let mut iterations_total = 0u64;
    let mut found = false;
    let mut measured_index = 0u64;

    for _attempt in 0..=config.max_restarts {
        let mut state = ModeState::initial(problem, config.mode, &fraction)?;
        let mut counter = CounterState::new();
        for iter in 0..max_iter {
            let weight = state.success_weight();
            let p1 = channel.outcome_one_probability(weight);
            counter.record(sample_ancilla(p1, rng));
            let ratio = corrected_ratio(&counter, config.eta)?;
            state.after_readout();
            state.grover_step(theta0);
            iterations_total += 1;
            let fired = should_stop(&ratio, config.set_val, counter.total(), config.burn_in);
            if fired || iter + 1 == max_iter {
                let (index, hit) = state.measure(problem, rng);
                attempts.push(AttemptRecord {
                    stop_iteration: iter,
                    g_at_stop: weight,
                    g_at_measure: state.success_weight(),
                    forced_by_cap: !fired,
                    success: hit,
                });
                measured_index = index;
                found = hit;
                break;
            }
        }
        if found {
            break;
        }
    }

    debug_assert!(!found || problem.contains(measured_index));
    Ok(SearchOutcome {
        found,
        measured_index,
        grover_iterations_total: iterations_total,
        // One membership query per pass plus the query inside each rotation.
        oracle_queries_total: 2 * iterations_total,
        restarts: attempts.len().saturating_sub(1) as u64,
        attempts,
    })
}

/// Default rotation count of the baseline, floor(pi / (4 theta)).
pub fn canonical_rotations(fraction: &TargetFraction<Real>) -> u64 {
    (std::f64::consts::FRAC_PI_4 / fraction.theta()).floor() as u64
}

/// Runs the fixed-rotation baseline: r rotations, one measurement, restart
/// on failure. Costs one oracle query per rotation.
pub fn run_canonical<R: Rng + ?Sized>(
    problem: &ProblemInstance,
    config: &AlgorithmConfig,
    r_override: Option<u64>,
    rng: &mut R,
) -> Result<SearchOutcome> {
    config.validate()?;
    let fraction = problem.fraction();
    let theta0 = fraction.theta();
    let rotations = r_override.unwrap_or_else(|| canonical_rotations(&fraction));

    let mut attempts = Vec::new();
    let mut iterations_total = 0u64;
    let mut found = false;
    let mut measured_index = 0u64;

    for _attempt in 0..=config.max_restarts {
        let mut state = ModeState::initial(problem, config.mode, &fraction)?;
        for _ in 0..rotations {
            state.grover_step(theta0);
        }
        iterations_total += rotations;
        let weight = state.success_weight();
        let (index, hit) = state.measure(problem, rng);
        attempts.push(AttemptRecord {
            stop_iteration: rotations,
            g_at_stop: weight,
            g_at_measure: weight,
            forced_by_cap: false,
            success: hit,
        });
        measured_index = index;
        if hit {
            found = true;
            break;
        }
    }

    debug_assert!(!found || problem.contains(measured_index));
    Ok(SearchOutcome {
        found,
        measured_index,
        grover_iterations_total: iterations_total,
        oracle_queries_total: iterations_total,
        restarts: attempts.len().saturating_sub(1) as u64,
        attempts,
    })
}

/// Outcome of the noise-free expectation run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpectationOutcome {
    pub stop_iteration: u64,
    pub g_at_stop: Real,
    pub g_at_measure: Real,
    pub oracle_queries: u64,
    pub capped: bool,
}

/// Replaces the Bernoulli draws with their expected fractional increments
/// and runs the same stopping logic. The stop iteration coincides with the
/// first horizon where the expected cumulative ratio reaches the threshold.
pub fn deterministic_expectation_run(
    fraction: &TargetFraction<Real>,
    config: &AlgorithmConfig,
) -> Result<ExpectationOutcome> {
    config.validate()?;
    let channel = CloneChannel::new(config.eta)?;
    let max_iter = config.effective_max_iterations(fraction);
    let mut c0 = 0.0;
    let mut c1 = 0.0;
    for iter in 0..max_iter {
        let g = success_probability(fraction, iter);
        let p1 = channel.outcome_one_probability(g);
        c1 += p1;
        c0 += 1.0 - p1;
        let ratio = corrected_ratio_real(c0, c1, config.eta);
        let fired = should_stop(&ratio, config.set_val, iter + 1, config.burn_in);
        if fired || iter + 1 == max_iter {
            return Ok(ExpectationOutcome {
                stop_iteration: iter,
                g_at_stop: g,
                g_at_measure: success_probability(fraction, iter + 1),
                oracle_queries: 2 * (iter + 1),
                capped: !fired,
            });
        }
    }
    unreachable!("the loop always returns at the cap")
}
