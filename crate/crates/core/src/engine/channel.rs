use num_complex::Complex;
use rand::Rng;

use crate::engine::DensityMatrix2;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Effective disentanglement channel of the isotropic cloner, characterized
/// by its reduction factor eta in (0, 1/3]. The cloned ancilla shrinks toward
/// the maximally mixed state while the other subsystem keeps its reduced
/// density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CloneChannel<T> {
    eta: T,
}

impl<T: Scalar> CloneChannel<T> {
    pub fn new(eta: T) -> Result<Self> {
        let max = T::one() / T::from_f64(3.0).unwrap();
        if !(eta > T::zero() && eta <= max) {
            return Err(Error::InvalidReductionFactor(
                eta.to_f64().unwrap_or(f64::NAN),
            ));
        }
        Ok(Self { eta })
    }

    /// The universal cloner's maximum, eta = 1/3.
    pub fn isotropic() -> Self {
        Self {
            eta: T::one() / T::from_f64(3.0).unwrap(),
        }
    }

    pub fn eta(&self) -> T {
        self.eta
    }

    /// Probability of reading the cloned ancilla as 1:
    /// eta * sin^2(theta) + (1 - eta)/2.
    pub fn outcome_one_probability(&self, sin2theta: T) -> T {
        let half = T::from_f64(0.5).unwrap();
        self.eta * sin2theta + (T::one() - self.eta) * half
    }

    /// Complementary outcome: eta * cos^2(theta) + (1 - eta)/2.
    pub fn outcome_zero_probability(&self, sin2theta: T) -> T {
        self.outcome_one_probability(T::one() - sin2theta)
    }

    /// Full post-cloning ancilla matrix; its diagonal reproduces the two
    /// outcome probabilities.
    pub fn output_density(&self, sin2theta: T) -> DensityMatrix2<T> {
        let half = T::from_f64(0.5).unwrap();
        let iso = (T::one() - self.eta) * half;
        let cos2 = (T::one() - sin2theta).max(T::zero());
        let off = self.eta * (sin2theta * cos2).max(T::zero()).sqrt();
        DensityMatrix2::from_rows([
            [
                Complex::new(self.eta * cos2 + iso, T::zero()),
                Complex::new(off, T::zero()),
            ],
            [
                Complex::new(off, T::zero()),
                Complex::new(self.eta * sin2theta + iso, T::zero()),
            ],
        ])
    }
}

impl<T: Scalar> Default for CloneChannel<T> {
    fn default() -> Self {
        Self::isotropic()
    }
}

/// One Bernoulli draw of the ancilla readout. Deterministic given the rng
/// state; p1 = 0 and p1 = 1 never consult the variate's edge behavior.
pub fn sample_ancilla<T: Scalar, R: Rng + ?Sized>(p1: T, rng: &mut R) -> bool {
    T::from_f64(rng.random::<f64>()).unwrap() < p1
}
