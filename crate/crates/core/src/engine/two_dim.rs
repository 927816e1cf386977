use crate::analytic::TargetFraction;
use crate::scalar::Scalar;

/// Search register reduced to its rotation angle in the plane spanned by the
/// uniform superpositions of non-targets and targets.
///
/// The angle accumulates without wrapping; each rotation adds 2*theta0 and
/// callers read probabilities through sin^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TwoDimState<T> {
    theta: T,
}

impl<T: Scalar> TwoDimState<T> {
    /// Uniform-superposition start: theta = asin(sqrt(p)).
    pub fn new(fraction: &TargetFraction<T>) -> Self {
        Self {
            theta: fraction.theta(),
        }
    }

    pub fn from_angle(theta: T) -> Self {
        Self { theta }
    }

    pub fn angle(&self) -> T {
        self.theta
    }

    /// One rotation step: theta += 2 * theta0.
    pub fn grover_step(&mut self, theta0: T) {
        self.theta += theta0 + theta0;
    }

    /// Weight on the target subspace, sin^2 theta.
    pub fn success_probability(&self) -> T {
        let s = self.theta.sin();
        (s * s).max(T::zero()).min(T::one())
    }
}
