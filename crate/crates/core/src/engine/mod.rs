//! State evolution in three fidelity modes: the two-dimensional angle model,
//! the full statevector register, and a 2x2 density-matrix model used as a
//! dephasing diagnostic. Also hosts the effective disentanglement channel and
//! ancilla sampling.

mod channel;
mod density;
mod register;
mod two_dim;

pub use channel::{sample_ancilla, CloneChannel};
pub use density::DensityMatrix2;
pub use register::{Register, MAX_QUBITS};
pub use two_dim::TwoDimState;
