use num_traits::float::FloatConst;
use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the math kernels are generic over: f32 or f64.
///
/// The two associated tolerances scale with the precision of the type;
/// everything that ships through the harness and CLI uses [`crate::Real`].
pub trait Scalar:
    Float
    + FloatConst
    + FromPrimitive
    + core::ops::AddAssign
    + core::ops::SubAssign
    + core::fmt::Debug
    + core::fmt::Display
    + Send
    + Sync
    + 'static
{
    /// Absolute tolerance of the adaptive quadrature.
    const QUAD_TOL: Self;
    /// Half-width of the degenerate band around X = theta where the closed
    /// ratio switches to its analytic limit.
    const ANGLE_TOL: Self;

    fn from_u64_exact(v: u64) -> Self {
        Self::from_u64(v).expect("u64 fits the scalar range")
    }
}

impl Scalar for f32 {
    const QUAD_TOL: Self = 1e-4;
    const ANGLE_TOL: Self = 1e-5;
}

impl Scalar for f64 {
    const QUAD_TOL: Self = 1e-9;
    const ANGLE_TOL: Self = 1e-9;
}
