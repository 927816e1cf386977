use num_complex::Complex;
use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Largest register the dense statevector backend accepts. 2^24 complex
/// doubles is ~256 MiB; anything bigger runs through the 2-D model instead.
pub const MAX_QUBITS: u32 = 24;

/// Dense n-qubit statevector with an explicit set of marked basis states.
#[derive(Debug, Clone)]
pub struct Register<T> {
    n_qubits: u32,
    amps: Vec<Complex<T>>,
    /// Sorted, deduplicated marked indices.
    targets: Vec<u64>,
}

impl<T: Scalar> Register<T> {
    /// Uniform superposition over all 2^n basis states.
    pub fn uniform(n_qubits: u32, targets: &[u64]) -> Result<Self> {
        let targets = validate_targets(n_qubits, targets)?;
        let size = 1usize << n_qubits;
        let amp = T::one() / T::from_u64_exact(size as u64).sqrt();
        Ok(Self {
            n_qubits,
            amps: vec![Complex::new(amp, T::zero()); size],
            targets,
        })
    }

    /// Builds a register from explicit amplitudes; the norm must already be
    /// 1 within 1e-10.
    pub fn from_amplitudes(n_qubits: u32, targets: &[u64], amps: Vec<Complex<T>>) -> Result<Self> {
        let targets = validate_targets(n_qubits, targets)?;
        if amps.len() != 1usize << n_qubits {
            return Err(Error::InvalidConfig(format!(
                "expected {} amplitudes, got {}",
                1u64 << n_qubits,
                amps.len()
            )));
        }
        let reg = Self {
            n_qubits,
            amps,
            targets,
        };
        let norm = reg.norm_sqr().to_f64().unwrap_or(f64::NAN);
        if (norm - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidConfig(format!(
                "amplitudes are not normalized: |psi|^2 = {norm}"
            )));
        }
        Ok(reg)
    }

    pub fn n_qubits(&self) -> u32 {
        self.n_qubits
    }

    pub fn len(&self) -> u64 {
        1u64 << self.n_qubits
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn targets(&self) -> &[u64] {
        &self.targets
    }

    pub fn amplitude(&self, index: u64) -> Complex<T> {
        self.amps[index as usize]
    }

    pub fn is_target(&self, index: u64) -> bool {
        self.targets.binary_search(&index).is_ok()
    }

    pub fn norm_sqr(&self) -> T {
        self.amps
            .iter()
            .fold(T::zero(), |acc, a| acc + a.norm_sqr())
    }

    /// Phase oracle: negate the amplitude of every marked state.
    pub fn apply_oracle(&mut self) {
        for &t in &self.targets {
            let a = &mut self.amps[t as usize];
            *a = -*a;
        }
    }

    /// Inversion about the mean: a_i -> 2 * mean - a_i.
    pub fn apply_diffusion(&mut self) {
        let n = T::from_u64_exact(self.len());
        let mut sum = Complex::new(T::zero(), T::zero());
        for a in &self.amps {
            sum = sum + *a;
        }
        let mean = sum / n;
        let two_mean = mean + mean;
        for a in &mut self.amps {
            *a = two_mean - *a;
        }
    }

    /// One full rotation: oracle followed by diffusion.
    pub fn grover_step(&mut self) {
        self.apply_oracle();
        self.apply_diffusion();
    }

    /// Total weight on the marked subspace.
    pub fn success_probability(&self) -> T {
        let p = self
            .targets
            .iter()
            .fold(T::zero(), |acc, &t| acc + self.amps[t as usize].norm_sqr());
        p.max(T::zero()).min(T::one())
    }

    /// Samples a basis state under the Born rule, factored as a subspace draw
    /// followed by a conditional draw inside the chosen subspace. Consumes
    /// exactly two uniform variates.
    pub fn measure<R: Rng + ?Sized>(&self, rng: &mut R) -> (u64, bool) {
        let p_target = self.success_probability();
        let u_subspace = T::from_f64(rng.random::<f64>()).unwrap();
        let u_within = T::from_f64(rng.random::<f64>()).unwrap();
        if u_subspace < p_target {
            (self.conditional_draw(u_within, p_target, true), true)
        } else {
            let p_rest = (T::one() - p_target).max(T::zero());
            (self.conditional_draw(u_within, p_rest, false), false)
        }
    }

    fn conditional_draw(&self, u: T, subspace_mass: T, in_target: bool) -> u64 {
        let threshold = u * subspace_mass;
        let mut acc = T::zero();
        let mut last = None;
        if in_target {
            for &t in &self.targets {
                acc += self.amps[t as usize].norm_sqr();
                last = Some(t);
                if acc >= threshold {
                    return t;
                }
            }
        } else {
            let mut next_target = self.targets.iter().copied().peekable();
            for i in 0..self.len() {
                if next_target.peek() == Some(&i) {
                    next_target.next();
                    continue;
                }
                acc += self.amps[i as usize].norm_sqr();
                last = Some(i);
                if acc >= threshold {
                    return i;
                }
            }
        }
        // Rounding pushed the threshold past the accumulated mass.
        last.expect("subspace is nonempty")
    }
}

fn validate_targets(n_qubits: u32, targets: &[u64]) -> Result<Vec<u64>> {
    if n_qubits == 0 || n_qubits > MAX_QUBITS {
        return Err(Error::RegisterTooLarge {
            n: n_qubits,
            max: MAX_QUBITS,
        });
    }
    let size = 1u64 << n_qubits;
    let mut sorted: Vec<u64> = targets.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.is_empty() || *sorted.last().unwrap() >= size {
        return Err(Error::InvalidTargets);
    }
    Ok(sorted)
}
