//! Classical counters for the ancilla readouts, the bias correction that
//! strips the cloner's isotropic component, and the threshold decision.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Tallies of ancilla outcomes: c0 zeros, c1 ones.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterState {
    c0: u64,
    c1: u64,
}

impl CounterState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_counts(c0: u64, c1: u64) -> Self {
        Self { c0, c1 }
    }

    pub fn record(&mut self, bit: bool) {
        if bit {
            self.c1 += 1;
        } else {
            self.c0 += 1;
        }
    }

    pub fn c0(&self) -> u64 {
        self.c0
    }

    pub fn c1(&self) -> u64 {
        self.c1
    }

    /// Total samples k = c0 + c1.
    pub fn total(&self) -> u64 {
        self.c0 + self.c1
    }
}

/// Bias-corrected ratio estimate. The denominator of the correction can be
/// driven to zero or below by noise, which the two flags distinguish: a
/// vanishing denominator with positive numerator reads as an overwhelming
/// target signal, while both nonpositive reads as contradictory counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CorrectedRatio<T> {
    Finite(T),
    PositiveInfinite,
    Indeterminate,
}

impl<T: Copy> CorrectedRatio<T> {
    pub fn value(&self) -> Option<T> {
        match self {
            CorrectedRatio::Finite(v) => Some(*v),
            _ => None,
        }
    }
}

/// Correction applied to raw real-valued counts: subtract the isotropic bias
/// k (1 - eta)/2 from each and rescale by 1/eta.
pub fn corrected_counts_real<T: Scalar>(c0: T, c1: T, eta: T) -> (T, T) {
    let bias = isotropic_bias(c0 + c1, eta);
    ((c0 - bias) / eta, (c1 - bias) / eta)
}

/// Integer-counter wrapper around [`corrected_counts_real`].
pub fn corrected_counts<T: Scalar>(counter: &CounterState, eta: T) -> Result<(T, T)> {
    if counter.total() == 0 {
        return Err(Error::NoSamples);
    }
    Ok(corrected_counts_real(
        T::from_u64_exact(counter.c0()),
        T::from_u64_exact(counter.c1()),
        eta,
    ))
}

/// Ratio of bias-corrected counts from real-valued tallies. The 1/eta
/// rescaling cancels, so only the bias subtraction enters.
pub fn corrected_ratio_real<T: Scalar>(c0: T, c1: T, eta: T) -> CorrectedRatio<T> {
    let bias = isotropic_bias(c0 + c1, eta);
    let num = c1 - bias;
    let den = c0 - bias;
    if den > T::zero() {
        CorrectedRatio::Finite(num / den)
    } else if num > T::zero() {
        CorrectedRatio::PositiveInfinite
    } else {
        CorrectedRatio::Indeterminate
    }
}

/// Ratio of bias-corrected counts from the integer counter.
pub fn corrected_ratio<T: Scalar>(counter: &CounterState, eta: T) -> Result<CorrectedRatio<T>> {
    if counter.total() == 0 {
        return Err(Error::NoSamples);
    }
    Ok(corrected_ratio_real(
        T::from_u64_exact(counter.c0()),
        T::from_u64_exact(counter.c1()),
        eta,
    ))
}

fn isotropic_bias<T: Scalar>(k: T, eta: T) -> T {
    k * ((T::one() - eta) * T::from_f64(0.5).unwrap())
}

/// Threshold decision: no stopping before `burn_in` samples, then fire when
/// the ratio is at least `set_val` or the corrected target mass has already
/// swallowed the denominator.
pub fn should_stop<T: Scalar>(
    ratio: &CorrectedRatio<T>,
    set_val: T,
    samples: u64,
    burn_in: u64,
) -> bool {
    if samples < burn_in {
        return false;
    }
    match ratio {
        CorrectedRatio::Finite(v) => *v >= set_val,
        CorrectedRatio::PositiveInfinite => true,
        CorrectedRatio::Indeterminate => false,
    }
}
