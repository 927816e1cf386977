//! Closed-form quantities behind the ratio-threshold stopping rule.
//!
//! Everything here is a pure function of the target fraction P = m/N and a
//! rotation horizon: the per-rotation success probability, the expected
//! counter sums, and the cumulative ratio in its discrete, quadrature, and
//! closed forms. The quadrature route exists so the closed form can be
//! checked against an independent evaluation of the same integral.

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Fraction of marked states, P = m/N, with its rotation angle theta = asin(sqrt(P)).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TargetFraction<T> {
    p: T,
    theta: T,
}

impl<T: Scalar> TargetFraction<T> {
    pub fn new(p: T) -> Result<Self> {
        if !(p > T::zero() && p <= T::one()) {
            return Err(Error::InvalidFraction(p.to_f64().unwrap_or(f64::NAN)));
        }
        Ok(Self {
            p,
            theta: p.sqrt().asin(),
        })
    }

    pub fn from_counts(marked: u64, total: u64) -> Result<Self> {
        if marked == 0 || marked > total {
            return Err(Error::InvalidCounts {
                m: marked,
                n: total,
            });
        }
        Self::new(T::from_u64_exact(marked) / T::from_u64_exact(total))
    }

    pub fn p(&self) -> T {
        self.p
    }

    /// Rotation half-angle theta in (0, pi/2].
    pub fn theta(&self) -> T {
        self.theta
    }
}

/// Angle X = asin(sqrt(g)) at which the cumulative ratio is evaluated,
/// pinned to [theta, pi/2] of its owning fraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopAngle<T> {
    x: T,
}

impl<T: Scalar> StopAngle<T> {
    /// Builds the angle from a stop probability g in [p, 1].
    pub fn from_probability(fraction: &TargetFraction<T>, g: T) -> Result<Self> {
        if !(g >= fraction.p() && g <= T::one()) {
            return Err(Error::StopProbabilityOutOfRange {
                g: g.to_f64().unwrap_or(f64::NAN),
                p: fraction.p().to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { x: g.sqrt().asin() })
    }

    /// Builds the angle directly in radians; must lie in [theta, pi/2].
    /// Angles a few ulps below theta (asin/sin round-trip noise) clamp up.
    pub fn from_radians(fraction: &TargetFraction<T>, x: T) -> Result<Self> {
        let theta = fraction.theta();
        let slack = theta * T::epsilon() * T::from_f64(4.0).unwrap();
        if !(x >= theta - slack && x <= T::FRAC_PI_2()) {
            return Err(Error::StopAngleOutOfRange {
                x: x.to_f64().unwrap_or(f64::NAN),
                theta: theta.to_f64().unwrap_or(f64::NAN),
            });
        }
        Ok(Self { x: x.max(theta) })
    }

    pub fn radians(&self) -> T {
        self.x
    }

    /// Stop probability g = sin^2 X this angle encodes.
    pub fn probability(&self) -> T {
        clamp01(self.x.sin().powi(2))
    }
}

/// One point of the cumulative-ratio curve at integer horizon `r`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RatioPoint<T> {
    /// Rotation count the row belongs to.
    pub r: u64,
    /// Success probability g_r at this horizon.
    pub g: T,
    /// Cumulative ratio over horizons 0..=r; +infinity once the
    /// complementary sum vanishes (only possible at p = 1).
    pub cumulative_ratio: T,
}

/// Infinite iterator over the cumulative-ratio curve of one fraction.
pub struct RatioCurve<T> {
    fraction: TargetFraction<T>,
    r: u64,
    sum_g: T,
}

impl<T: Scalar> RatioCurve<T> {
    pub fn new(fraction: &TargetFraction<T>) -> Self {
        Self {
            fraction: *fraction,
            r: 0,
            sum_g: T::zero(),
        }
    }
}

impl<T: Scalar> Iterator for RatioCurve<T> {
    type Item = RatioPoint<T>;

    fn next(&mut self) -> Option<Self::Item> {
        let r = self.r;
        let g = success_probability(&self.fraction, r);
        self.sum_g += g;
        let samples = T::from_u64_exact(r + 1);
        let complement = samples - self.sum_g;
        let cumulative_ratio = if complement > T::zero() {
            self.sum_g / complement
        } else {
            T::infinity()
        };
        self.r += 1;
        Some(RatioPoint {
            r,
            g,
            cumulative_ratio,
        })
    }
}

fn clamp01<T: Scalar>(v: T) -> T {
    v.max(T::zero()).min(T::one())
}

/// Success probability after `r` rotations: sin^2((2r+1) asin(sqrt(p))).
///
/// At r = 0 the fraction itself is returned so the identity g_0 = p holds
/// bit-exactly rather than through an asin/sin round trip.
pub fn success_probability<T: Scalar>(fraction: &TargetFraction<T>, r: u64) -> T {
    if r == 0 {
        return fraction.p();
    }
    let angle = T::from_u64_exact(2 * r + 1) * fraction.theta();
    clamp01(angle.sin().powi(2))
}

/// Expected raw counter values (<C0>, <C1>) after sampling horizons 0..=rn
/// through a channel with reduction factor `eta`. Their sum is rn + 1.
pub fn expected_counts<T: Scalar>(fraction: &TargetFraction<T>, rn: u64, eta: T) -> (T, T) {
    let iso = (T::one() - eta) * T::from_f64(0.5).unwrap();
    let mut c0 = T::zero();
    let mut c1 = T::zero();
    for r in 0..=rn {
        let g = success_probability(fraction, r);
        c0 += eta * (T::one() - g) + iso;
        c1 += eta * g + iso;
    }
    (c0, c1)
}

/// Cumulative ratio sum(g_r) / sum(1 - g_r) over r = 0..=rn; +infinity when
/// the denominator vanishes (p = 1).
pub fn expected_ratio_discrete<T: Scalar>(fraction: &TargetFraction<T>, rn: u64) -> T {
    RatioCurve::new(fraction)
        .nth(rn as usize)
        .map(|pt| pt.cumulative_ratio)
        .unwrap()
}

/// Cumulative ratio as the quotient of integrals of g_r and 1 - g_r over the
/// real horizon [0, R] with R chosen so g reaches `g_target` on the first
/// rising branch. Serves as the independent check of the closed form.
pub fn expected_ratio_quadrature<T: Scalar>(fraction: &TargetFraction<T>, g_target: T) -> Result<T> {
    let stop = StopAngle::from_probability(fraction, g_target)?;
    let theta = fraction.theta();
    let x = stop.radians();
    if x - theta < T::ANGLE_TOL {
        return Ok(ratio_at_theta_limit(fraction));
    }
    // R solves (2R+1) theta = X on the first branch.
    let two = T::from_f64(2.0).unwrap();
    let horizon = (x / theta - T::one()) / two;
    let theta_c = theta;
    let integral_g = adaptive_simpson(
        &|r: T| {
            let a = (two * r + T::one()) * theta_c;
            a.sin().powi(2)
        },
        T::zero(),
        horizon,
        T::QUAD_TOL,
    );
    let complement = horizon - integral_g;
    if complement <= T::zero() {
        return Ok(T::infinity());
    }
    Ok(integral_g / complement)
}

fn ratio_at_theta_limit<T: Scalar>(fraction: &TargetFraction<T>) -> T {
    let denom = T::one() - fraction.p();
    if denom <= T::zero() {
        T::infinity()
    } else {
        fraction.p() / denom
    }
}

/// Closed form of the cumulative ratio,
/// (2X - sin 2X - (2 theta - sin 2 theta)) / (2X + sin 2X - (2 theta + sin 2 theta)).
///
/// The removable 0/0 at X = theta is replaced by its limit tan^2 theta,
/// which equals the discrete ratio at horizon zero.
pub fn expected_ratio_closed<T: Scalar>(fraction: &TargetFraction<T>, stop: &StopAngle<T>) -> T {
    let theta = fraction.theta();
    let x = stop.radians();
    if x - theta < T::ANGLE_TOL {
        return ratio_at_theta_limit(fraction);
    }
    let two = T::from_f64(2.0).unwrap();
    let linear = two * (x - theta);
    let oscillating = (two * x).sin() - (two * theta).sin();
    (linear - oscillating) / (linear + oscillating)
}

/// The same ratio written entirely in arcsin form, evaluated literally from
/// the two probabilities. Exists as a second algebraic route for testing
/// against [`expected_ratio_closed`].
pub fn expected_ratio_arcsin<T: Scalar>(p: T, g: T) -> T {
    let two = T::from_f64(2.0).unwrap();
    let x = g.sqrt().asin();
    let theta = p.sqrt().asin();
    let linear = two * (x - theta);
    let oscillating = (two * x).sin() - (two * theta).sin();
    (linear - oscillating) / (linear + oscillating)
}

/// Inverts the closed form: finds g such that the cumulative ratio equals
/// `ratio`, by bisection on X in [theta, pi/2].
pub fn solve_stop_probability<T: Scalar>(fraction: &TargetFraction<T>, ratio: T) -> Result<T> {
    let theta = fraction.theta();
    let lo_ratio = ratio_at_theta_limit(fraction);
    let top = StopAngle::from_radians(fraction, T::FRAC_PI_2())?;
    let hi_ratio = expected_ratio_closed(fraction, &top);
    if !(ratio >= lo_ratio && ratio <= hi_ratio) {
        return Err(Error::UnsatisfiableRatio {
            ratio: ratio.to_f64().unwrap_or(f64::NAN),
            min: lo_ratio.to_f64().unwrap_or(f64::NAN),
            max: hi_ratio.to_f64().unwrap_or(f64::NAN),
        });
    }
    let half = T::from_f64(0.5).unwrap();
    let mut lo = theta;
    let mut hi = T::FRAC_PI_2();
    for _ in 0..200 {
        let mid = (lo + hi) * half;
        if mid <= lo || mid >= hi {
            break;
        }
        let stop = StopAngle { x: mid };
        if expected_ratio_closed(fraction, &stop) < ratio {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let x = (lo + hi) * half;
    Ok(clamp01(x.sin().powi(2)))
}

/// One row of the Set_Val calibration table: a fraction and the closed-form
/// ratio at the three reference stop probabilities.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationRow {
    pub label: &'static str,
    pub p: f64,
    /// Closed-form ratios at g in {0.5, 0.75, 1.0}.
    pub ratios: [f64; 3],
    /// Published reference values, kept for side-by-side output.
    pub reference: [f64; 3],
}

/// Stop probabilities the calibration table is evaluated at.
pub const CALIBRATION_G: [f64; 3] = [0.5, 0.75, 1.0];

/// Fraction standing in for the "1/N with N large" row.
pub const CALIBRATION_SMALL_P: f64 = 1.0 / ((1u64 << 20) as f64);

/// Regenerates the three-case calibration table for the universal threshold.
pub fn calibration_table() -> [CalibrationRow; 3] {
    let cases: [(&'static str, f64, [f64; 3]); 3] = [
        ("I", CALIBRATION_SMALL_P, [0.23, 0.42, 1.00]),
        ("II", 0.25, [0.60, 1.00, 2.41]),
        ("III", 0.50, [1.00, 1.69, 4.50]),
    ];
    cases.map(|(label, p, reference)| {
        let fraction = TargetFraction::new(p).expect("case fractions are valid");
        let ratios = CALIBRATION_G.map(|g| {
            let stop = StopAngle::from_probability(&fraction, g)
                .expect("calibration g is reachable for every case");
            expected_ratio_closed(&fraction, &stop)
        });
        CalibrationRow {
            label,
            p,
            ratios,
            reference,
        }
    })
}

/// Default iteration cap for [`stop_iteration_expected`]: a generous multiple
/// of the ~ (pi/4) sqrt(1/p) rotations the continuous analysis predicts.
pub fn default_expectation_cap<T: Scalar>(fraction: &TargetFraction<T>) -> u64 {
    let root = (T::one() / fraction.p()).sqrt();
    let cap = T::from_f64(10.0).unwrap() * root + T::from_f64(100.0).unwrap();
    cap.ceil().to_u64().unwrap_or(u64::MAX)
}

/// First integer horizon at which the expected cumulative ratio reaches
/// `set_val`, together with g at that horizon.
pub fn stop_iteration_expected<T: Scalar>(
    fraction: &TargetFraction<T>,
    set_val: T,
    cap: Option<u64>,
) -> Result<(u64, T)> {
    let cap = cap.unwrap_or_else(|| default_expectation_cap(fraction));
    for point in RatioCurve::new(fraction).take(cap as usize + 1) {
        if point.cumulative_ratio >= set_val {
            return Ok((point.r, point.g));
        }
    }
    Err(Error::ThresholdUnreachable { cap })
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
fn adaptive_simpson<T: Scalar, F: Fn(T) -> T>(f: &F, a: T, b: T, tol: T) -> T {
    let half = T::from_f64(0.5).unwrap();
    let sixth = T::from_f64(6.0).unwrap();
    let m = (a + b) * half;
    let fa = f(a);
    let fm = f(m);
    let fb = f(b);
    let four = T::from_f64(4.0).unwrap();
    let whole = (b - a) * (fa + four * fm + fb) / sixth;
    simpson_step(f, a, b, fa, fm, fb, whole, tol, 40)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<T: Scalar, F: Fn(T) -> T>(
    f: &F,
    a: T,
    b: T,
    fa: T,
    fm: T,
    fb: T,
    whole: T,
    tol: T,
    depth: u32,
) -> T {
    let half = T::from_f64(0.5).unwrap();
    let four = T::from_f64(4.0).unwrap();
    let six = T::from_f64(6.0).unwrap();
    let fifteen = T::from_f64(15.0).unwrap();
    let m = (a + b) * half;
    let lm = (a + m) * half;
    let rm = (m + b) * half;
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) * (fa + four * flm + fm) / six;
    let right = (b - m) * (fm + four * frm + fb) / six;
    let refined = left + right;
    let err = refined - whole;
    if depth == 0 || err.abs() <= fifteen * tol {
        return refined + err / fifteen;
    }
    let half_tol = tol * half;
    simpson_step(f, a, m, fa, flm, fm, left, half_tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, half_tol, depth - 1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn frac(p: f64) -> TargetFraction<f64> {
        TargetFraction::new(p).unwrap()
    }

    #[test]
    fn fraction_construction_bounds() {
        assert!(TargetFraction::<f64>::new(0.0).is_err());
        assert!(TargetFraction::<f64>::new(-0.1).is_err());
        assert!(TargetFraction::<f64>::new(1.0 + 1e-12).is_err());
        assert!(TargetFraction::<f64>::new(1.0).is_ok());
        assert!(TargetFraction::<f64>::from_counts(0, 4).is_err());
        assert!(TargetFraction::<f64>::from_counts(5, 4).is_err());
        let f = TargetFraction::<f64>::from_counts(1, 4).unwrap();
        assert_eq!(f.p(), 0.25);
        assert_abs_diff_eq!(f.theta(), std::f64::consts::FRAC_PI_6, epsilon = 1e-15);
    }

    #[test]
    fn success_probability_examples() {
        assert_eq!(success_probability(&frac(0.25), 0), 0.25);
        assert_abs_diff_eq!(success_probability(&frac(0.25), 1), 1.0, epsilon = 1e-15);
        assert_eq!(success_probability(&frac(0.5), 0), 0.5);
    }

    #[test]
    fn success_probability_zero_horizon_is_exact() {
        for &p in &[0.3, 0.123456789, 1e-12, 0.999999] {
            assert_eq!(success_probability(&frac(p), 0), p);
        }
    }

    #[test]
    fn expected_counts_examples() {
        let eta = 1.0 / 3.0;
        let (c0, c1) = expected_counts(&frac(1e-12), 0, eta);
        assert_abs_diff_eq!(c0, 2.0 / 3.0, epsilon = 1e-9);
        assert_abs_diff_eq!(c1, 1.0 / 3.0, epsilon = 1e-9);

        let (c0, c1) = expected_counts(&frac(1.0), 0, eta);
        assert_abs_diff_eq!(c0, 1.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c1, 2.0 / 3.0, epsilon = 1e-12);

        // Hand sum over g0 = 0.25, g1 = 1.0.
        let (c0, c1) = expected_counts(&frac(0.25), 1, eta);
        assert_abs_diff_eq!(c0, eta * 0.75 + 2.0 * (1.0 - eta) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c1, eta * 1.25 + 2.0 * (1.0 - eta) / 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(c0, 0.9167, epsilon = 5e-5);
        assert_abs_diff_eq!(c1, 1.0833, epsilon = 5e-5);
    }

    #[test]
    fn expected_counts_conserve_sample_total() {
        for &(p, rn) in &[(0.1, 0u64), (0.37, 7), (0.91, 40), (1.0, 3)] {
            let (c0, c1) = expected_counts(&frac(p), rn, 1.0 / 3.0);
            assert_abs_diff_eq!(c0 + c1, (rn + 1) as f64, epsilon = 1e-10);
        }
    }

    #[test]
    fn discrete_ratio_examples() {
        assert_abs_diff_eq!(expected_ratio_discrete(&frac(0.5), 0), 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(
            expected_ratio_discrete(&frac(0.25), 0),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(
            expected_ratio_discrete(&frac(0.25), 1),
            5.0 / 3.0,
            epsilon = 1e-12
        );
        assert!(expected_ratio_discrete(&frac(1.0), 2).is_infinite());
    }

    #[test]
    fn quadrature_examples() {
        let zero_len = expected_ratio_quadrature(&frac(0.25), 0.25).unwrap();
        assert_abs_diff_eq!(zero_len, 1.0 / 3.0, epsilon = 1e-12);

        // Vanishing theta, g -> 1: the ratio exceeds one by about 4 theta / pi,
        // so theta = 1e-7 pins it to unity at the 1e-6 level.
        let tiny = frac(1e-14);
        let full = expected_ratio_quadrature(&tiny, 1.0).unwrap();
        assert_abs_diff_eq!(full, 1.0, epsilon = 1e-6);

        let case2c = expected_ratio_quadrature(&frac(0.25), 1.0).unwrap();
        assert_abs_diff_eq!(case2c, 2.410, epsilon = 1e-3);

        assert!(matches!(
            expected_ratio_quadrature(&frac(0.25), 0.1),
            Err(Error::StopProbabilityOutOfRange { .. })
        ));
    }

    #[test]
    fn closed_form_examples() {
        let tiny = frac(2f64.powi(-40));
        let stop = StopAngle::from_radians(&tiny, std::f64::consts::FRAC_PI_3).unwrap();
        assert_abs_diff_eq!(expected_ratio_closed(&tiny, &stop), 0.4149, epsilon = 1e-4);

        let case2 = frac(0.25);
        let stop = StopAngle::from_radians(&case2, std::f64::consts::FRAC_PI_2).unwrap();
        assert_abs_diff_eq!(expected_ratio_closed(&case2, &stop), 2.4100, epsilon = 1e-4);

        let case3 = frac(0.5);
        let stop = StopAngle::from_radians(&case3, std::f64::consts::FRAC_PI_4).unwrap();
        assert_abs_diff_eq!(expected_ratio_closed(&case3, &stop), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn closed_form_rejects_angles_below_theta() {
        let f = frac(0.5);
        assert!(StopAngle::from_radians(&f, 0.5).is_err());
        assert!(StopAngle::from_probability(&f, 0.4).is_err());
    }

    #[test]
    fn closed_form_matches_quadrature_on_grid() {
        // 50 x 50 grid: theta in (0, pi/3], X in (theta, pi/2].
        let mut worst = 0.0f64;
        for i in 1..=50 {
            let theta = (i as f64 / 50.0) * std::f64::consts::FRAC_PI_3;
            let p = theta.sin().powi(2);
            let fraction = frac(p);
            for j in 1..=50 {
                let x = theta + (j as f64 / 50.0) * (std::f64::consts::FRAC_PI_2 - theta);
                let stop = StopAngle::from_radians(&fraction, x).unwrap();
                let closed = expected_ratio_closed(&fraction, &stop);
                let quad = expected_ratio_quadrature(&fraction, stop.probability()).unwrap();
                worst = worst.max((closed - quad).abs());
            }
        }
        assert!(worst <= 1e-6, "worst closed-vs-quadrature gap {worst:e}");
    }

    #[test]
    fn arcsin_form_matches_closed_form_on_grid() {
        let mut worst = 0.0f64;
        for i in 1..=50 {
            let theta = (i as f64 / 50.0) * std::f64::consts::FRAC_PI_3;
            let p = theta.sin().powi(2);
            let fraction = frac(p);
            for j in 1..=50 {
                let x = theta + (j as f64 / 50.0) * (std::f64::consts::FRAC_PI_2 - theta);
                let stop = StopAngle::from_radians(&fraction, x).unwrap();
                let closed = expected_ratio_closed(&fraction, &stop);
                let arcsin = expected_ratio_arcsin(p, stop.probability());
                worst = worst.max((closed - arcsin).abs());
            }
        }
        assert!(worst <= 1e-10, "worst arcsin-vs-closed gap {worst:e}");
    }

    #[test]
    fn inversion_examples() {
        let case2 = frac(0.25);
        let g = solve_stop_probability(&case2, 1.0).unwrap();
        assert_abs_diff_eq!(g, 0.75, epsilon = 1e-9);

        let case3 = frac(0.5);
        let top = StopAngle::from_radians(&case3, std::f64::consts::FRAC_PI_2).unwrap();
        let max_ratio = expected_ratio_closed(&case3, &top);
        let g = solve_stop_probability(&case3, max_ratio).unwrap();
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-9);

        let g = solve_stop_probability(&case3, 1.0).unwrap();
        assert_abs_diff_eq!(g, 0.5, epsilon = 1e-9);
    }

    #[test]
    fn closed_form_is_monotone_in_the_stop_angle() {
        // Bisection in solve_stop_probability relies on this.
        for &p in &[1e-6, 0.01, 0.25, 0.5, 0.75] {
            let fraction = frac(p);
            let theta = fraction.theta();
            let mut prev = f64::NEG_INFINITY;
            for j in 0..=400 {
                let x = theta + (j as f64 / 400.0) * (std::f64::consts::FRAC_PI_2 - theta);
                let stop = StopAngle::from_radians(&fraction, x).unwrap();
                let v = expected_ratio_closed(&fraction, &stop);
                assert!(v >= prev - 1e-13, "ratio decreased at p={p}, x={x}");
                prev = v;
            }
        }
    }

    #[test]
    fn inversion_rejects_unreachable_ratios() {
        let case3 = frac(0.5);
        assert!(matches!(
            solve_stop_probability(&case3, 0.5),
            Err(Error::UnsatisfiableRatio { .. })
        ));
        assert!(matches!(
            solve_stop_probability(&case3, 100.0),
            Err(Error::UnsatisfiableRatio { .. })
        ));
    }

    #[test]
    fn inversion_round_trips_forward_evaluation() {
        for &p in &[0.01, 0.1, 0.25, 0.5, 0.75] {
            let fraction = frac(p);
            for &g in &[p + 0.05, 0.9, 1.0] {
                if g > 1.0 {
                    continue;
                }
                let stop = StopAngle::from_probability(&fraction, g).unwrap();
                let ratio = expected_ratio_closed(&fraction, &stop);
                let back = solve_stop_probability(&fraction, ratio).unwrap();
                assert_abs_diff_eq!(back, g, epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn calibration_table_values() {
        let table = calibration_table();
        let quad_check = |p: f64, g: f64| {
            expected_ratio_quadrature(&frac(p), g).unwrap()
        };
        for row in &table {
            for (k, &g) in CALIBRATION_G.iter().enumerate() {
                assert_abs_diff_eq!(row.ratios[k], quad_check(row.p, g), epsilon = 1e-6);
                assert!(
                    (row.ratios[k] - row.reference[k]).abs() <= 0.02,
                    "case {} g={} ratio {} vs reference {}",
                    row.label,
                    g,
                    row.ratios[k],
                    row.reference[k]
                );
            }
        }
        assert_abs_diff_eq!(table[2].ratios[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(table[2].ratios[1], 1.688, epsilon = 1e-3);
        assert_abs_diff_eq!(table[2].ratios[2], 4.504, epsilon = 1e-3);
        assert_abs_diff_eq!(table[1].ratios[0], 0.593, epsilon = 1e-3);
        assert_abs_diff_eq!(table[1].ratios[1], 1.000, epsilon = 1e-9);
        assert_abs_diff_eq!(table[1].ratios[2], 2.410, epsilon = 1e-3);
        // Case I sits at p = 2^-20, slightly away from the theta -> 0 limit
        // (0.2220, 0.4149, 1.0); the finite-theta shift is ~4 theta / pi.
        assert_abs_diff_eq!(table[0].ratios[0], 0.2224, epsilon = 5e-4);
        assert_abs_diff_eq!(table[0].ratios[1], 0.4155, epsilon = 5e-4);
        assert_abs_diff_eq!(table[0].ratios[2], 1.0012, epsilon = 5e-4);
    }

    #[test]
    fn stop_iteration_examples() {
        let (r, g) = stop_iteration_expected(&frac(0.5), 1.0, None).unwrap();
        assert_eq!(r, 0);
        assert_eq!(g, 0.5);

        let (r, g) = stop_iteration_expected(&frac(0.25), 1.0, None).unwrap();
        assert_eq!(r, 1);
        assert_abs_diff_eq!(g, 1.0, epsilon = 1e-12);

        let (_, g) = stop_iteration_expected(&frac(1.0 / 1024.0), 1.0, None).unwrap();
        assert!(g >= 0.5, "g at stop {g}");
    }

    #[test]
    fn stop_iteration_cap_reports_unreachable() {
        // A threshold far above the reachable maximum never fires.
        let err = stop_iteration_expected(&frac(0.25), 1e6, Some(500)).unwrap_err();
        assert!(matches!(err, Error::ThresholdUnreachable { cap: 500 }));
    }

    #[test]
    fn discrete_ratio_nondecreasing_on_first_branch() {
        for &p in &[0.001, 0.01, 0.1, 0.3] {
            let fraction = frac(p);
            let theta = fraction.theta();
            let max_r = ((std::f64::consts::FRAC_PI_2 / theta - 1.0) / 2.0).floor() as u64;
            let mut prev = 0.0;
            for (r, point) in RatioCurve::new(&fraction).take(max_r as usize + 1).enumerate() {
                assert!(
                    point.cumulative_ratio >= prev - 1e-14,
                    "ratio decreased at p={p}, r={r}"
                );
                prev = point.cumulative_ratio;
            }
        }
    }

    #[test]
    fn discrete_ratio_approaches_closed_form_for_small_p() {
        // Hold (2R+1) theta ~ X fixed while p -> 0.
        let p = 1e-4;
        let fraction = frac(p);
        let theta = fraction.theta();
        for &x in &[
            std::f64::consts::FRAC_PI_4,
            std::f64::consts::FRAC_PI_3,
            std::f64::consts::FRAC_PI_2 * 0.95,
        ] {
            let rn = ((x / theta - 1.0) / 2.0).round() as u64;
            let x_discrete = (2 * rn + 1) as f64 * theta;
            let stop = StopAngle::from_radians(&fraction, x_discrete).unwrap();
            let discrete = expected_ratio_discrete(&fraction, rn);
            let closed = expected_ratio_closed(&fraction, &stop);
            assert!(
                (discrete - closed).abs() <= 0.01,
                "x={x}: discrete {discrete} vs closed {closed}"
            );
        }
    }

    #[test]
    fn quadrature_integrates_smooth_functions() {
        let cube = adaptive_simpson(&|x: f64| x * x * x, 0.0, 2.0, 1e-12);
        assert_abs_diff_eq!(cube, 4.0, epsilon = 1e-10);
        let sine = adaptive_simpson(&|x: f64| x.sin(), 0.0, std::f64::consts::PI, 1e-12);
        assert_abs_diff_eq!(sine, 2.0, epsilon = 1e-10);
        let sin2 = adaptive_simpson(&|x: f64| x.sin().powi(2), 0.0, 10.0, 1e-10);
        let exact = 5.0 - 20.0f64.sin() / 4.0;
        assert_abs_diff_eq!(sin2, exact, epsilon = 1e-8);
    }

    #[test]
    fn works_in_single_precision() {
        let fraction = TargetFraction::<f32>::new(0.25).unwrap();
        assert_abs_diff_eq!(success_probability(&fraction, 1), 1.0f32, epsilon = 1e-6);
        let stop = StopAngle::from_probability(&fraction, 1.0).unwrap();
        assert_abs_diff_eq!(
            expected_ratio_closed(&fraction, &stop),
            2.41f32,
            epsilon = 1e-2
        );
    }
}
