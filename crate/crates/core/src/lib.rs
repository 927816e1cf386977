//! Simulation library for a measurement-stopped, fixed-point variant of
//! rotation-based unstructured search.
//!
//! The algorithm under study runs the usual rotation dynamics but decides
//! when to measure from data: each pass entangles an ancilla with the search
//! register, disentangles it through a lossy cloning channel, reads the
//! ancilla out, and tallies the outcomes in two classical counters. A
//! bias-corrected ratio of the counters estimates how close the register is
//! to the marked subspace; once the ratio reaches a universal threshold the
//! register is measured, and on a miss everything restarts.
//!
//! The crate splits into:
//!
//! - [`analytic`]: closed-form success probabilities, expected counters, and
//!   the cumulative ratio in discrete / quadrature / closed form;
//! - [`engine`]: state evolution (2-D angle model, dense statevector, 2x2
//!   density-matrix diagnostic) plus the cloning channel;
//! - [`estimator`]: counters, bias correction, and the threshold rule;
//! - [`search`]: the full stopped search, the fixed-rotation baseline, and a
//!   noise-free expectation variant;
//! - [`harness`]: seeded Monte-Carlo batches, an exact stop-time law by
//!   dynamic programming, sweeps, and scaling fits.
//!
//! The math modules are generic over the floating-point [`Scalar`]; the
//! aliases below pin the shipped double-precision configuration.

pub mod analytic;
pub mod engine;
pub mod error;
pub mod estimator;
pub mod harness;
pub mod scalar;
pub mod search;

pub use error::{Error, Result};
pub use scalar::Scalar;

/// Scalar type every shipped driver runs on.
pub type Real = f64;

/// Double-precision aliases of the generic core types.
pub type TargetFraction = analytic::TargetFraction<Real>;
pub type StopAngle = analytic::StopAngle<Real>;
pub type RatioPoint = analytic::RatioPoint<Real>;
pub type TwoDimState = engine::TwoDimState<Real>;
pub type Register = engine::Register<Real>;
pub type DensityMatrix2 = engine::DensityMatrix2<Real>;
pub type CloneChannel = engine::CloneChannel<Real>;
pub type CorrectedRatio = estimator::CorrectedRatio<Real>;
