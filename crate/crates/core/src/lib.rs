//! Lorentz quantum mechanics at desk scale.
//!
//! Dynamics generated by `K = sigma_{m,n} H` (Hermitian `H`, indefinite
//! diagonal metric `sigma`) conserve the interval
//! `sum_{j<=m} |a_j|^2 - sum_{j>m} |a_j|^2` instead of the norm: time
//! evolution and representation changes are complex Lorentz
//! transformations. This crate implements that machinery:
//!
//! - [`minkowski`]: the metric, spinor states, interval and causal
//!   classification, sigma-inner products, and Lorentz maps.
//! - [`generator`]: generators `K = sigma H`, the `(m1, m2, m3)` and tau
//!   decompositions for two modes, the sigma-orthonormal eigenproblem,
//!   stability classification, and completeness diagnostics.
//! - [`evolution`]: interval-preserving propagators `exp(-i K t)`,
//!   time-dependent stepping, and the Heisenberg picture.
//! - [`geometry`]: adiabatic sweeps, Berry connection/phase/curvature over
//!   the `(m1, m2, m3)` parameter space, flux-density profiles, and total
//!   flux integration.
//! - [`models`]: builders for three physical systems carrying this
//!   structure (1D Fermi gas, BEC-vortex phonons, 1D antiferromagnet).
//! - [`cli`]: the `lqm` command-line front end emitting reproducible CSV
//!   and JSON artifacts.
//!
//! Units: `hbar = 1` throughout; energies and times are reciprocal.

// pub mod cli;
pub mod error;
pub mod evolution;
pub mod expm;
pub mod generator;
pub mod geometry;
pub mod minkowski;
pub mod models;

pub use error::{Error, Result};
pub use evolution::{evolve, evolve_timedep, heisenberg_evolve, EvolutionTrace, Propagator, StepControl};
pub use generator::{
    eigensolve, eigensolve_dense, tau_matrices, BdgGenerator, EigenSystem, HermitianGenerator,
    Stability,
};
pub use geometry::{
    adiabatic_sweep, berry_phase_loop, curvature_map, flux_density_profile, total_flux, Band,
    BerryResult, CurvatureSample, ParameterPath,
};
pub use minkowski::{sigma_inner, CausalClass, CausalKind, LorentzMap, MinkowskiMetric, SpinorState};

use num_complex::Complex64;

/// Dense complex matrix used throughout the crate.
pub type CMatrix = ndarray::Array2<Complex64>;
/// Dense complex vector used throughout the crate.
pub type CVector = ndarray::Array1<Complex64>;

pub(crate) mod linalg {
    use super::{CMatrix, CVector};
    use num_complex::Complex64;

    pub fn identity(d: usize) -> CMatrix {
        CMatrix::eye(d)
    }

    /// Conjugate transpose.
    pub fn dagger(a: &CMatrix) -> CMatrix {
        a.t().mapv(|z| z.conj())
    }

    pub fn frobenius(a: &CMatrix) -> f64 {
        a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Max column sum of absolute values (induced 1-norm).
    pub fn one_norm(a: &CMatrix) -> f64 {
        let mut best = 0.0_f64;
        for col in a.columns() {
            let s: f64 = col.iter().map(|z| z.norm()).sum();
            best = best.max(s);
        }
        best
    }

}
