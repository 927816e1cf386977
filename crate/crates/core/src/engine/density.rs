use num_complex::Complex;

use crate::scalar::Scalar;

/// 2x2 density matrix in the {non-target, target} basis of the search plane.
///
/// Used by the dephasing diagnostic mode, where the register is allowed to
/// decohere after every ancilla readout instead of staying pure.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix2<T> {
    m: [[Complex<T>; 2]; 2],
}

impl<T: Scalar> DensityMatrix2<T> {
    pub fn from_rows(m: [[Complex<T>; 2]; 2]) -> Self {
        Self { m }
    }

    /// Pure state cos(theta)|0> + sin(theta)|1> as a projector.
    pub fn pure(theta: T) -> Self {
        let c = theta.cos();
        let s = theta.sin();
        let z = T::zero();
        Self {
            m: [
                [Complex::new(c * c, z), Complex::new(c * s, z)],
                [Complex::new(s * c, z), Complex::new(s * s, z)],
            ],
        }
    }

    pub fn diagonal(w0: T, w1: T) -> Self {
        let z = T::zero();
        Self {
            m: [
                [Complex::new(w0, z), Complex::new(z, z)],
                [Complex::new(z, z), Complex::new(w1, z)],
            ],
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex<T> {
        self.m[row][col]
    }

    pub fn trace(&self) -> T {
        self.m[0][0].re + self.m[1][1].re
    }

    /// Weight on the target axis.
    pub fn target_weight(&self) -> T {
        self.m[1][1].re.max(T::zero()).min(T::one())
    }

    /// Zeroes the off-diagonal entries, keeping the diagonal.
    pub fn dephase(&mut self) {
        let z = Complex::new(T::zero(), T::zero());
        self.m[0][1] = z;
        self.m[1][0] = z;
    }

    /// Conjugation by the plane rotation of angle 2*theta0: one full rotation
    /// step acting on a possibly mixed state.
    pub fn grover_step(&mut self, theta0: T) {
        let angle = theta0 + theta0;
        let c = angle.cos();
        let s = angle.sin();
        let u = [[c, -s], [s, c]];
        let zero = Complex::new(T::zero(), T::zero());
        // rho U^T, then U (rho U^T).
        let mut tmp = [[zero; 2]; 2];
        for (i, row) in tmp.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.m[i]
                    .iter()
                    .zip(&u[j])
                    .fold(zero, |acc, (a, &w)| acc + a.scale(w));
            }
        }
        let mut out = [[zero; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = u[i]
                    .iter()
                    .zip(&tmp)
                    .fold(zero, |acc, (&w, t_row)| acc + t_row[j].scale(w));
            }
        }
        self.m = out;
    }

    pub fn is_hermitian(&self, tol: T) -> bool {
        (self.m[0][1] - self.m[1][0].conj()).norm() <= tol
            && self.m[0][0].im.abs() <= tol
            && self.m[1][1].im.abs() <= tol
    }

    /// For a Hermitian 2x2 matrix: nonnegative diagonal and determinant.
    pub fn is_positive_semidefinite(&self, tol: T) -> bool {
        let det = (self.m[0][0] * self.m[1][1] - self.m[0][1] * self.m[1][0]).re;
        self.m[0][0].re >= -tol && self.m[1][1].re >= -tol && det >= -tol
    }
}
