use thiserror::Error;

/// Errors surfaced by the library. Operations documented as total never
/// return one of these.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("target fraction must lie in (0, 1], got {0}")]
    InvalidFraction(f64),
    #[error("marked-state count must satisfy 1 <= m <= N, got m={m}, n={n}")]
    InvalidCounts { m: u64, n: u64 },
    #[error("stop probability must lie in [p, 1], got g={g} with p={p}")]
    StopProbabilityOutOfRange { g: f64, p: f64 },
    #[error("stop angle must lie in [theta, pi/2], got x={x} with theta={theta}")]
    StopAngleOutOfRange { x: f64, theta: f64 },
    #[error("ratio {ratio} is unsatisfiable; reachable range is [{min}, {max}]")]
    UnsatisfiableRatio { ratio: f64, min: f64, max: f64 },
    #[error("threshold unreachable in expectation within {cap} rotations")]
    ThresholdUnreachable { cap: u64 },
    #[error("counter holds no samples")]
    NoSamples,
    #[error("reduction factor must lie in (0, 1/3], got {0}")]
    InvalidReductionFactor(f64),
    #[error("register of {n} qubits exceeds the statevector cap of {max}")]
    RegisterTooLarge { n: u32, max: u32 },
    #[error("marked set must be nonempty and lie within the register")]
    InvalidTargets,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("horizon {got} exceeds the exact-enumeration cap {max}")]
    HorizonTooLarge { got: u64, max: u64 },
    #[error("scaling fit needs at least 4 grid points spanning 3 octaves")]
    DegenerateGrid,
}

pub type Result<T> = std::result::Result<T, Error>;
