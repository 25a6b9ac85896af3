//! Complex Minkowski space: the indefinite metric `sigma_{m,n}`, spinor
//! states, the conserved interval, causal classification, and Lorentz maps.
//!
//! The metric is stored as the signature pair `(m, n)` only; every
//! sigma-product is computed by flipping the sign of the last `n` terms,
//! which is exact and O(d).

use crate::error::{Error, Result};
use crate::{linalg, CMatrix, CVector};
use num_complex::Complex64;

/// Signature `(m, n)` of the diagonal metric: `m` entries `+1` followed by
/// `n` entries `-1`. Both counts must be at least one; `m = 0` or `n = 0`
/// reduces to unitary quantum mechanics and is rejected.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub struct MinkowskiMetric {
    m: usize,
    n: usize,
}

impl MinkowskiMetric {
    pub fn new(m: usize, n: usize) -> Result<Self> {
        if m == 0 || n == 0 {
            return Err(Error::DegenerateMetric { m, n });
        }
        Ok(Self { m, n })
    }

    /// The `(1,1)` metric, the workhorse of the two-mode theory.
    pub fn one_one() -> Self {
        Self { m: 1, n: 1 }
    }

    pub fn positive(&self) -> usize {
        self.m
    }

    pub fn negative(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.m + self.n
    }

    /// Diagonal entry `sigma_ii`, +1 for the first `m` indices, -1 after.
    pub fn sign(&self, i: usize) -> f64 {
        if i < self.m {
            1.0
        } else {
            -1.0
        }
    }

    /// `sigma * v`.
    pub fn apply_vec(&self, v: &CVector) -> CVector {
        let mut out = v.clone();
        for i in self.m..self.dim() {
            out[i] = -out[i];
        }
        out
    }

    /// `sigma * A` (flips the last `n` rows).
    pub fn apply_left(&self, a: &CMatrix) -> CMatrix {
        let mut out = a.clone();
        for i in self.m..self.dim() {
            for z in out.row_mut(i) {
                *z = -*z;
            }
        }
        out
    }

    /// `A * sigma` (flips the last `n` columns).
    pub fn apply_right(&self, a: &CMatrix) -> CMatrix {
        let mut out = a.clone();
        for j in self.m..self.dim() {
            for z in out.column_mut(j) {
                *z = -*z;
            }
        }
        out
    }

    /// Dense form, for diagnostics only.
    pub fn to_matrix(&self) -> CMatrix {
        CMatrix::from_diag(&CVector::from_iter(
            (0..self.dim()).map(|i| Complex64::new(self.sign(i), 0.0)),
        ))
    }
}

/// Causal character of a state, with the signed interval that produced it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum CausalKind {
    SpaceLike,
    TimeLike,
    LightLike,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CausalClass {
    pub kind: CausalKind,
    pub interval: f64,
}

/// A complex amplitude vector tied to a metric. Immutable by construction:
/// every operation returns a new state.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorState {
    amplitudes: CVector,
    metric: MinkowskiMetric,
}

impl SpinorState {
    pub fn new(amplitudes: CVector, metric: MinkowskiMetric) -> Result<Self> {
        if amplitudes.len() != metric.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                got: amplitudes.len(),
            });
        }
        Ok(Self { amplitudes, metric })
    }

    pub fn from_slice(amplitudes: &[Complex64], metric: MinkowskiMetric) -> Result<Self> {
        Self::new(CVector::from_vec(amplitudes.to_vec()), metric)
    }

    /// Real-component convenience constructor.
    pub fn from_reals(amplitudes: &[f64], metric: MinkowskiMetric) -> Result<Self> {
        Self::new(
            CVector::from_iter(amplitudes.iter().map(|&x| Complex64::new(x, 0.0))),
            metric,
        )
    }

    pub fn amplitudes(&self) -> &CVector {
        &self.amplitudes
    }

    pub fn metric(&self) -> MinkowskiMetric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Euclidean norm squared, `sum |a_j|^2`.
    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    /// The interval `sum_{j<=m} |a_j|^2 - sum_{j>m} |a_j|^2`. Computed from
    /// moduli directly, so it is exactly real.
    pub fn interval(&self) -> f64 {
        self.amplitudes
            .iter()
            .enumerate()
            .map(|(i, z)| self.metric.sign(i) * z.norm_sqr())
            .sum()
    }

    /// Causal classification with the threshold scaled by the squared norm
    /// of the amplitudes: light-likeness is a measure-zero condition, so the
    /// tolerance band must be relative to the state's magnitude.
    pub fn classify(&self, tol: f64) -> CausalClass {
        let interval = self.interval();
        let threshold = tol * self.norm_sqr();
        let kind = if interval > threshold {
            CausalKind::SpaceLike
        } else if interval < -threshold {
            CausalKind::TimeLike
        } else {
            CausalKind::LightLike
        };
        CausalClass { kind, interval }
    }

    /// Returns the state multiplied by a complex scalar.
    pub fn scaled(&self, c: Complex64) -> SpinorState {
        SpinorState {
            amplitudes: self.amplitudes.mapv(|z| z * c),
            metric: self.metric,
        }
    }
}

/// Default classification tolerance for [`SpinorState::classify`].
pub const DEFAULT_CLASSIFY_TOL: f64 = 1e-9;

/// Sesquilinear sigma-product `bra^dagger sigma ket`.
///
/// `sigma_inner(psi, psi)` equals `interval(psi)` up to roundoff, and
/// `sigma_inner(psi, phi) = conj(sigma_inner(phi, psi))`.
pub fn sigma_inner(bra: &SpinorState, ket: &SpinorState) -> Result<Complex64> {
    if bra.metric != ket.metric {
        return Err(Error::MetricMismatch(
            bra.metric.m,
            bra.metric.n,
            ket.metric.m,
            ket.metric.n,
        ));
    }
    Ok(sigma_inner_raw(
        bra.amplitudes(),
        ket.amplitudes(),
        bra.metric,
    ))
}

/// Unchecked sigma-product on raw vectors of matching length.
pub(crate) fn sigma_inner_raw(bra: &CVector, ket: &CVector, metric: MinkowskiMetric) -> Complex64 {
    bra.iter()
        .zip(ket.iter())
        .enumerate()
        .map(|(i, (b, k))| b.conj() * k * metric.sign(i))
        .sum()
}

/// A complex Lorentz transformation: any matrix with `L^dagger sigma L = sigma`.
/// The inverse `sigma L^dagger sigma` is cached at construction.
#[derive(Debug, Clone)]
pub struct LorentzMap {
    matrix: CMatrix,
    inverse: CMatrix,
    metric: MinkowskiMetric,
}

/// Construction tolerance for the metric-preservation residual of general
/// Lorentz maps.
pub const LORENTZ_CONSTRUCTION_TOL: f64 = 1e-12;

impl LorentzMap {
    /// The `(1,1)` boost `[[x, y*], [y, x*]]` with `|x|^2 - |y|^2 = 1`.
    /// The inverse is `[[x*, -y*], [-y, x]]`.
    pub fn boost(x: Complex64, y: Complex64) -> Result<Self> {
        let defect = (x.norm_sqr() - y.norm_sqr() - 1.0).abs();
        if defect > LORENTZ_CONSTRUCTION_TOL {
            return Err(Error::BoostNormalization { defect });
        }
        let matrix = ndarray::array![[x, y.conj()], [y, x.conj()]];
        let inverse = ndarray::array![[x.conj(), -y.conj()], [-y, x]];
        Ok(Self {
            matrix,
            inverse,
            metric: MinkowskiMetric::one_one(),
        })
    }

    /// A real rapidity boost, `x = cosh r`, `y = sinh r`.
    pub fn real_boost(rapidity: f64) -> Self {
        Self::boost(
            Complex64::new(rapidity.cosh(), 0.0),
            Complex64::new(rapidity.sinh(), 0.0),
        )
        .expect("cosh^2 - sinh^2 = 1")
    }

    pub fn identity(metric: MinkowskiMetric) -> Self {
        let d = metric.dim();
        Self {
            matrix: linalg::identity(d),
            inverse: linalg::identity(d),
            metric,
        }
    }

    /// Accepts an arbitrary matrix after validating `L^dagger sigma L = sigma`
    /// to within `tol` (Frobenius). The inverse is `sigma L^dagger sigma`,
    /// which is exact given the validated identity.
    pub fn from_matrix(matrix: CMatrix, metric: MinkowskiMetric, tol: f64) -> Result<Self> {
        if matrix.nrows() != metric.dim() || matrix.ncols() != metric.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                got: matrix.nrows().max(matrix.ncols()),
            });
        }
        let defect = metric_defect(&matrix, metric);
        if defect > tol {
            return Err(Error::NotLorentz { defect, tol });
        }
        let inverse = metric.apply_left(&metric.apply_right(&linalg::dagger(&matrix)));
        Ok(Self {
            matrix,
            inverse,
            metric,
        })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn inverse_matrix(&self) -> &CMatrix {
        &self.inverse
    }

    pub fn metric(&self) -> MinkowskiMetric {
        self.metric
    }

    /// Residual `|| L^dagger sigma L - sigma ||_F`.
    pub fn metric_defect(&self) -> f64 {
        metric_defect(&self.matrix, self.metric)
    }

    /// Residual `|| L L^{-1} - I ||_F`.
    pub fn inverse_defect(&self) -> f64 {
        let prod = self.matrix.dot(&self.inverse);
        linalg::frobenius(&(&prod - &linalg::identity(self.metric.dim())))
    }

    /// Applies the map to a state. The interval is preserved by the defining
    /// property; no renormalization happens here.
    pub fn apply(&self, state: &SpinorState) -> Result<SpinorState> {
        if state.metric() != self.metric {
            return Err(Error::MetricMismatch(
                self.metric.m,
                self.metric.n,
                state.metric().m,
                state.metric().n,
            ));
        }
        SpinorState::new(self.matrix.dot(state.amplitudes()), self.metric)
    }

    /// Conjugates an operator, `K -> L K L^{-1}`. Similarity preserves the
    /// eigenvalue multiset.
    pub fn conjugate(&self, operator: &CMatrix) -> Result<CMatrix> {
        let d = self.metric.dim();
        if operator.nrows() != d || operator.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: operator.nrows().max(operator.ncols()),
            });
        }
        Ok(self.matrix.dot(operator).dot(&self.inverse))
    }

    pub fn composed(&self, other: &LorentzMap) -> Result<LorentzMap> {
        if self.metric != other.metric {
            return Err(Error::MetricMismatch(
                self.metric.m,
                self.metric.n,
                other.metric.m,
                other.metric.n,
            ));
        }
        Ok(LorentzMap {
            matrix: self.matrix.dot(&other.matrix),
            inverse: other.inverse.dot(&self.inverse),
            metric: self.metric,
        })
    }
}

/// `|| L^dagger sigma L - sigma ||_F` for a raw matrix.
pub fn metric_defect(matrix: &CMatrix, metric: MinkowskiMetric) -> f64 {
    let lhs = linalg::dagger(matrix).dot(&metric.apply_left(matrix));
    linalg::frobenius(&(&lhs - &metric.to_matrix()))
}
