//! Crate-wide error type.

use crate::generator::Stability;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("metric mismatch: ({0},{1}) vs ({2},{3})")]
    MetricMismatch(usize, usize, usize, usize),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("degenerate metric ({m},{n}): both signature counts must be >= 1")]
    DegenerateMetric { m: usize, n: usize },

    #[error("matrix is not Hermitian: defect {defect:.3e} exceeds {tol:.1e}")]
    NotHermitian { defect: f64, tol: f64 },

    #[error("boost normalization violated: | |x|^2 - |y|^2 - 1 | = {defect:.3e}")]
    BoostNormalization { defect: f64 },

    #[error("not a Lorentz map: metric defect {defect:.3e} exceeds {tol:.1e}")]
    NotLorentz { defect: f64, tol: f64 },

    #[error("operation requires a stable eigensystem, got {stability:?}")]
    NotStable { stability: Stability },

    #[error("degenerate eigenvalues (gap {gap:.3e})")]
    Degenerate { gap: f64 },

    #[error("amplitude growth exponent {exponent:.1} would overflow f64")]
    Overflow { exponent: f64 },

    #[error("step control failed: estimate {estimate:.3e} above {tol:.1e} after {steps} steps")]
    StepControl { estimate: f64, tol: f64, steps: usize },

    #[error("path sample {index} touches the degeneracy cone (cone distance {cone_distance:.3e})")]
    ConeTouching { index: usize, cone_distance: f64 },

    #[error("band tracking lost at sample {index}: sigma-overlap modulus {overlap:.3e} < 0.5")]
    BandTrackingLost { index: usize, overlap: f64 },

    #[error("connection imaginary residue {residue:.3e} exceeds {tol:.1e}")]
    ConnectionResidue { residue: f64, tol: f64 },

    #[error("refinement cap reached: {0}")]
    RefinementCap(String),

    #[error("eigensolver failure: {0}")]
    Eigensolver(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;
