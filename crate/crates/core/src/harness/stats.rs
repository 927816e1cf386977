use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// z for a central 95% interval.
pub const Z_95: f64 = 1.959963984540054;

/// Wilson score interval for a binomial proportion. Always contains the
/// point estimate and stays inside [0, 1].
pub fn wilson_interval(successes: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let phat = successes as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (phat + z2 / (2.0 * n)) / denom;
    let half = z * (phat * (1.0 - phat) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    // The degenerate endpoints are exact; rounding must not pull them inward.
    let lo = if successes == 0 {
        0.0
    } else {
        (center - half).max(0.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        (center + half).min(1.0)
    };
    (lo, hi)
}

/// Goodness-of-fit summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareTest {
    pub statistic: f64,
    pub dof: u64,
    pub p_value: f64,
}

/// Pearson chi-square of observed counts against expected counts, merging
/// consecutive bins until each carries at least `min_expected`. Returns None
/// when fewer than two merged bins remain.
pub fn chi_square_goodness(
    observed: &[f64],
    expected: &[f64],
    min_expected: f64,
) -> Option<ChiSquareTest> {
    assert_eq!(observed.len(), expected.len());
    let mut merged: Vec<(f64, f64)> = Vec::new();
    let mut acc_o = 0.0;
    let mut acc_e = 0.0;
    for (&o, &e) in observed.iter().zip(expected) {
        acc_o += o;
        acc_e += e;
        if acc_e >= min_expected {
            merged.push((acc_o, acc_e));
            acc_o = 0.0;
            acc_e = 0.0;
        }
    }
    if acc_e > 0.0 || acc_o > 0.0 {
        if let Some(last) = merged.last_mut() {
            last.0 += acc_o;
            last.1 += acc_e;
        } else {
            merged.push((acc_o, acc_e));
        }
    }
    if merged.len() < 2 {
        return None;
    }
    let statistic: f64 = merged
        .iter()
        .map(|(o, e)| (o - e) * (o - e) / e)
        .sum();
    let dof = (merged.len() - 1) as u64;
    let dist = ChiSquared::new(dof as f64).expect("dof >= 1");
    Some(ChiSquareTest {
        statistic,
        dof,
        p_value: 1.0 - dist.cdf(statistic),
    })
}
