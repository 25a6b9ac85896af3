//! Generators `K = sigma H`, their two-mode decompositions, and the
//! sigma-orthonormal eigenproblem.
//!
//! A two-mode generator, after dropping its trace part, expands over the
//! basis `X1 = [[0,1],[-1,0]]`, `X2 = [[0,i],[i,0]]`, `X3 = diag(1,-1)` with
//! real coefficients `(m1, m2, m3)`. Its eigenvalues obey
//! `E^2 = m3^2 - m1^2 - m2^2`; the sign of that cone distance splits the
//! parameter space into a stable exterior (real spectrum, one space-like and
//! one time-like eigenvector), the degeneracy cone itself (defective), and a
//! dynamically unstable interior (complex-conjugate pair).

use crate::error::{Error, Result};
use crate::minkowski::{sigma_inner_raw, LorentzMap, MinkowskiMetric, SpinorState};
use crate::{linalg, CMatrix, CVector};
use ndarray_linalg::Eig;
use num_complex::Complex64;

/// Hermiticity tolerance at construction (Frobenius).
pub const HERMITICITY_TOL: f64 = 1e-12;
/// Relative half-width of the on-cone band: `|cone_distance| <=
/// ONCONE_REL_TOL * (m1^2 + m2^2 + m3^2)`. Relative scaling keeps the test
/// meaningful at all magnitudes.
pub const ONCONE_REL_TOL: f64 = 1e-9;
/// Relative imaginary-part tolerance for calling a dense spectrum real.
pub const REALITY_REL_TOL: f64 = 1e-9;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// A validated Hermitian matrix `H` (energy units, hbar = 1) tied to a metric.
#[derive(Debug, Clone)]
pub struct HermitianGenerator {
    h: CMatrix,
    metric: MinkowskiMetric,
}

impl HermitianGenerator {
    pub fn new(h: CMatrix, metric: MinkowskiMetric) -> Result<Self> {
        if h.nrows() != metric.dim() || h.ncols() != metric.dim() {
            return Err(Error::DimensionMismatch {
                expected: metric.dim(),
                got: h.nrows().max(h.ncols()),
            });
        }
        let defect = linalg::frobenius(&(&h - &linalg::dagger(&h)));
        if defect > HERMITICITY_TOL * linalg::frobenius(&h).max(1.0) {
            return Err(Error::NotHermitian {
                defect,
                tol: HERMITICITY_TOL,
            });
        }
        Ok(Self { h, metric })
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.h
    }

    pub fn metric(&self) -> MinkowskiMetric {
        self.metric
    }
}

/// The generator `K = sigma H` together with, for two modes, its cached
/// `(m1, m2, m3)` decomposition and retained trace part.
///
/// The trace part is kept and added back to eigenvalues: physical spectra
/// need the identity coefficient even though the decomposition drops it.
#[derive(Debug, Clone)]
pub struct BdgGenerator {
    k: CMatrix,
    metric: MinkowskiMetric,
    m: Option<[f64; 3]>,
    trace_part: Option<f64>,
}

impl BdgGenerator {
    /// Builds `K = sigma H` and, for two modes, fills the decomposition:
    /// `m1 = Re K12`, `m2 = Im K12`, `m3 = (K11 - K22)/2`,
    /// `trace_part = (K11 + K22)/2`.
    pub fn from_hermitian(h: &HermitianGenerator) -> Self {
        let k = h.metric().apply_left(h.matrix());
        let (m, trace_part) = if h.metric().dim() == 2 {
            let m1 = k[[0, 1]].re;
            let m2 = k[[0, 1]].im;
            let m3 = 0.5 * (k[[0, 0]].re - k[[1, 1]].re);
            let tp = 0.5 * (k[[0, 0]].re + k[[1, 1]].re);
            (Some([m1, m2, m3]), Some(tp))
        } else {
            (None, None)
        };
        Self {
            k,
            metric: h.metric(),
            m,
            trace_part,
        }
    }

    /// Direct `(1,1)` constructor from the coefficient triple and trace part:
    /// `K = m1 X1 + m2 X2 + m3 X3 + trace_part I`.
    pub fn from_m_coeffs(m: [f64; 3], trace_part: f64) -> Self {
        let [m1, m2, m3] = m;
        let k = ndarray::array![
            [c(trace_part + m3, 0.0), c(m1, m2)],
            [c(-m1, m2), c(trace_part - m3, 0.0)]
        ];
        Self {
            k,
            metric: MinkowskiMetric::one_one(),
            m: Some(m),
            trace_part: Some(trace_part),
        }
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.k
    }

    pub fn metric(&self) -> MinkowskiMetric {
        self.metric
    }

    pub fn dim(&self) -> usize {
        self.metric.dim()
    }

    /// Recovers `H = sigma K`.
    pub fn hermitian_part(&self) -> CMatrix {
        self.metric.apply_left(&self.k)
    }

    /// `|| sigma K - (sigma K)^dagger ||_F`; zero for a valid generator.
    pub fn hermiticity_defect(&self) -> f64 {
        let h = self.hermitian_part();
        linalg::frobenius(&(&h - &linalg::dagger(&h)))
    }

    pub fn m_decomp(&self) -> Option<[f64; 3]> {
        self.m
    }

    pub fn trace_part(&self) -> Option<f64> {
        self.trace_part
    }

    /// `m3^2 - m1^2 - m2^2` for two modes.
    pub fn cone_distance(&self) -> Option<f64> {
        self.m.map(|[m1, m2, m3]| m3 * m3 - m1 * m1 - m2 * m2)
    }

    /// Tau-basis coefficients `(n1, n2, n3)` with
    /// `n1 tau1 + n2 tau2 + n3 tau3 + trace_part I = K`. Matching the two
    /// basis expansions gives `n1 = m1`, `n2 = m2`,
    /// `n3 = m3 - sqrt(2) (m1 + m2)` exactly.
    pub fn tau_decomp(&self) -> Result<[f64; 3]> {
        let [m1, m2, m3] = self.m.ok_or(Error::DimensionMismatch {
            expected: 2,
            got: self.dim(),
        })?;
        let n = [m1, m2, m3 - std::f64::consts::SQRT_2 * (m1 + m2)];
        debug_assert!(self.tau_reconstruction_residual(n) <= 1e-12);
        Ok(n)
    }

    fn tau_reconstruction_residual(&self, n: [f64; 3]) -> f64 {
        let [t1, t2, t3] = tau_matrices();
        let tp = self.trace_part.unwrap_or(0.0);
        let rebuilt = t1.mapv(|z| z * c(n[0], 0.0))
            + t2.mapv(|z| z * c(n[1], 0.0))
            + t3.mapv(|z| z * c(n[2], 0.0))
            + linalg::identity(2).mapv(|z| z * c(tp, 0.0));
        linalg::frobenius(&(&rebuilt - &self.k))
    }
}

/// Stability class of a generator's spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stability {
    /// Real, non-defective spectrum with a full sigma-orthonormal eigenbasis.
    Stable,
    /// On the degeneracy cone: the generator is defective (or its
    /// sigma-Gram structure is), eigenvectors are withheld.
    OnCone,
    /// Complex-conjugate eigenvalue pairs; amplitudes grow exponentially
    /// while the interval stays conserved.
    Unstable,
}

/// Band of a stable two-mode system, tracked by the sign of the sigma-norm
/// rather than by index: for `m3 < 0` the energy ordering swaps but the
/// signature does not.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Band {
    SpaceLike,
    TimeLike,
}

impl Band {
    pub fn signature(self) -> i8 {
        match self {
            Band::SpaceLike => 1,
            Band::TimeLike => -1,
        }
    }

    pub fn other(self) -> Band {
        match self {
            Band::SpaceLike => Band::TimeLike,
            Band::TimeLike => Band::SpaceLike,
        }
    }
}

/// Sigma-orthonormalized eigenpairs with signature labels.
///
/// Eigenvalues are sorted by descending real part, ties broken with the
/// space-like member first. Space-like vectors carry `<j|sigma|j> = +1`,
/// time-like `-1`; the gauge makes the largest-modulus component of each
/// vector real positive so output is reproducible.
#[derive(Debug, Clone)]
pub struct EigenSystem {
    metric: MinkowskiMetric,
    stability: Stability,
    eigenvalues: Vec<Complex64>,
    eigenvectors: Vec<SpinorState>,
    signatures: Vec<i8>,
    cone_distance: Option<f64>,
}

impl EigenSystem {
    pub fn stability(&self) -> Stability {
        self.stability
    }

    pub fn metric(&self) -> MinkowskiMetric {
        self.metric
    }

    pub fn eigenvalues(&self) -> &[Complex64] {
        &self.eigenvalues
    }

    /// Empty unless the system is stable.
    pub fn eigenvectors(&self) -> &[SpinorState] {
        &self.eigenvectors
    }

    /// Signatures (+1 space-like, -1 time-like); empty unless stable.
    pub fn signatures(&self) -> &[i8] {
        &self.signatures
    }

    pub fn cone_distance(&self) -> Option<f64> {
        self.cone_distance
    }

    fn require_stable(&self) -> Result<()> {
        if self.stability != Stability::Stable {
            return Err(Error::NotStable {
                stability: self.stability,
            });
        }
        Ok(())
    }

    /// Index of the requested band for a two-mode system.
    pub fn band_index(&self, band: Band) -> Result<usize> {
        self.require_stable()?;
        if self.metric.dim() != 2 {
            return Err(Error::InvalidParameter(
                "band selection is defined for two-mode systems".into(),
            ));
        }
        self.signatures
            .iter()
            .position(|&s| s == band.signature())
            .ok_or_else(|| Error::InvalidParameter("band signature not present".into()))
    }

    pub fn band_vector(&self, band: Band) -> Result<&SpinorState> {
        Ok(&self.eigenvectors[self.band_index(band)?])
    }

    pub fn band_energy(&self, band: Band) -> Result<f64> {
        Ok(self.eigenvalues[self.band_index(band)?].re)
    }

    /// Projects a state onto the energy representation:
    /// `c_j = signature_j <j|sigma|psi>`. The signature-weighted sum
    /// `sum_j signature_j |c_j|^2` equals the interval of `psi`.
    pub fn to_energy_representation(&self, psi: &SpinorState) -> Result<Vec<Complex64>> {
        self.require_stable()?;
        if psi.metric() != self.metric {
            return Err(Error::DimensionMismatch {
                expected: self.metric.dim(),
                got: psi.dim(),
            });
        }
        Ok(self
            .eigenvectors
            .iter()
            .zip(&self.signatures)
            .map(|(v, &s)| {
                sigma_inner_raw(v.amplitudes(), psi.amplitudes(), self.metric) * c(s as f64, 0.0)
            })
            .collect())
    }

    /// Rebuilds `sum_j c_j |j>` from energy-representation coefficients.
    pub fn reconstruct(&self, coeffs: &[Complex64]) -> Result<SpinorState> {
        self.require_stable()?;
        if coeffs.len() != self.eigenvectors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.eigenvectors.len(),
                got: coeffs.len(),
            });
        }
        let mut out = CVector::zeros(self.metric.dim());
        for (v, &cj) in self.eigenvectors.iter().zip(coeffs) {
            out = out + v.amplitudes().mapv(|z| z * cj);
        }
        SpinorState::new(out, self.metric)
    }

    /// Completeness residual: with `S = sum_j signature_j |j><j|`, returns
    /// `max(||S sigma - I||_F, ||sigma S - I||_F)`.
    pub fn completeness_residual(&self) -> Result<f64> {
        self.require_stable()?;
        let d = self.metric.dim();
        let mut s = CMatrix::zeros((d, d));
        for (v, &sig) in self.eigenvectors.iter().zip(&self.signatures) {
            let a = v.amplitudes();
            for i in 0..d {
                for j in 0..d {
                    s[[i, j]] += a[i] * a[j].conj() * c(sig as f64, 0.0);
                }
            }
        }
        let eye = linalg::identity(d);
        let right = linalg::frobenius(&(&self.metric.apply_right(&s) - &eye));
        let left = linalg::frobenius(&(&self.metric.apply_left(&s) - &eye));
        Ok(right.max(left))
    }

    /// Largest sigma-orthogonality violation `|<j|sigma|k>|`, j != k.
    pub fn orthogonality_residual(&self) -> Result<f64> {
        self.require_stable()?;
        let mut worst = 0.0_f64;
        for (j, vj) in self.eigenvectors.iter().enumerate() {
            for vk in self.eigenvectors.iter().skip(j + 1) {
                worst = worst.max(
                    sigma_inner_raw(vj.amplitudes(), vk.amplitudes(), self.metric).norm(),
                );
            }
        }
        Ok(worst)
    }

    /// Largest normalization violation `| <j|sigma|j> - signature_j |`.
    pub fn normalization_residual(&self) -> Result<f64> {
        self.require_stable()?;
        let mut worst = 0.0_f64;
        for (v, &s) in self.eigenvectors.iter().zip(&self.signatures) {
            let form = sigma_inner_raw(v.amplitudes(), v.amplitudes(), self.metric);
            worst = worst.max((form.re - s as f64).abs().max(form.im.abs()));
        }
        Ok(worst)
    }
}

/// Makes the largest-modulus component real positive. Deterministic output
/// for reproducibility; loop phases are gauge-invariant and unaffected.
fn gauge_fix(v: &mut CVector) {
    let mut best = 0usize;
    let mut best_mod = 0.0_f64;
    for (i, z) in v.iter().enumerate() {
        let m = z.norm();
        if m > best_mod {
            best_mod = m;
            best = i;
        }
    }
    if best_mod > 0.0 {
        let phase = v[best] / best_mod;
        let corr = phase.conj();
        for z in v.iter_mut() {
            *z *= corr;
        }
    }
}

/// Closed-form eigensolve for a two-mode generator; exact near the cone where
/// dense solvers turn ill-conditioned.
fn eigensolve_2x2(k: &BdgGenerator) -> EigenSystem {
    let [m1, m2, m3] = k.m_decomp().expect("two-mode generator");
    let tp = k.trace_part().expect("two-mode generator");
    let metric = k.metric();
    let cone = m3 * m3 - m1 * m1 - m2 * m2;
    let scale = m1 * m1 + m2 * m2 + m3 * m3;

    if cone.abs() <= ONCONE_REL_TOL * scale {
        // Defective (or identically scalar); eigenvectors withheld.
        let root = cone.abs().sqrt();
        return EigenSystem {
            metric,
            stability: Stability::OnCone,
            eigenvalues: vec![c(tp + root, 0.0), c(tp - root, 0.0)],
            eigenvectors: vec![],
            signatures: vec![],
            cone_distance: Some(cone),
        };
    }

    if cone < 0.0 {
        let g = (-cone).sqrt();
        return EigenSystem {
            metric,
            stability: Stability::Unstable,
            eigenvalues: vec![c(tp, g), c(tp, -g)],
            eigenvectors: vec![],
            signatures: vec![],
            cone_distance: Some(cone),
        };
    }

    let e = cone.sqrt();
    let couple = c(m1, m2);
    let mut pairs: Vec<(f64, CVector)> = Vec::with_capacity(2);
    for &ev in &[e, -e] {
        let mut v = if couple.norm() == 0.0 {
            // Diagonal generator: eigenvector is a basis vector.
            if (m3 - ev).abs() < (m3 + ev).abs() {
                ndarray::array![c(1.0, 0.0), c(0.0, 0.0)]
            } else {
                ndarray::array![c(0.0, 0.0), c(1.0, 0.0)]
            }
        } else {
            ndarray::array![couple, c(ev - m3, 0.0)]
        };
        let form = v[0].norm_sqr() - v[1].norm_sqr();
        let norm = form.abs().sqrt();
        for z in v.iter_mut() {
            *z /= norm;
        }
        gauge_fix(&mut v);
        pairs.push((ev, v));
    }

    let eigenvalues = pairs.iter().map(|(ev, _)| c(tp + ev, 0.0)).collect();
    let signatures = pairs
        .iter()
        .map(|(_, v)| {
            if v[0].norm_sqr() - v[1].norm_sqr() > 0.0 {
                1i8
            } else {
                -1i8
            }
        })
        .collect();
    let eigenvectors = pairs
        .into_iter()
        .map(|(_, v)| SpinorState::new(v, metric).expect("dimension 2"))
        .collect();

    EigenSystem {
        metric,
        stability: Stability::Stable,
        eigenvalues,
        eigenvectors,
        signatures,
        cone_distance: Some(cone),
    }
}

/// Solves the sigma-orthonormal eigenproblem. Two-mode generators use the
/// closed form; larger systems go through the dense solver.
pub fn eigensolve(k: &BdgGenerator) -> Result<EigenSystem> {
    if k.dim() == 2 {
        Ok(eigensolve_2x2(k))
    } else {
        eigensolve_dense(k)
    }
}

/// Dense nonsymmetric eigensolve followed by sigma-normalization, signature
/// labeling, and sigma-Gram-Schmidt inside degenerate real clusters.
/// Available for two-mode systems as an independent route to the closed form.
pub fn eigensolve_dense(k: &BdgGenerator) -> Result<EigenSystem> {
    let metric = k.metric();
    let d = metric.dim();
    let cone = k.cone_distance();
    let (vals, vecs) = k
        .matrix()
        .eig()
        .map_err(|e| Error::Eigensolver(format!("dense eigensolve failed: {e}")))?;

    let scale = linalg::frobenius(k.matrix()).max(f64::MIN_POSITIVE);
    let imag_tol = REALITY_REL_TOL * scale;

    if vals.iter().any(|z| z.im.abs() > imag_tol) {
        let mut eigenvalues: Vec<Complex64> = vals.to_vec();
        eigenvalues.sort_by(|a, b| {
            (b.re, b.im)
                .partial_cmp(&(a.re, a.im))
                .expect("finite eigenvalues")
        });
        return Ok(EigenSystem {
            metric,
            stability: Stability::Unstable,
            eigenvalues,
            eigenvectors: vec![],
            signatures: vec![],
            cone_distance: cone,
        });
    }

    // Two-mode systems inside the on-cone band are labeled defective even if
    // the raw solver produced vectors; keeps the two routes consistent.
    if d == 2 {
        if let Some(cd) = cone {
            let [m1, m2, m3] = k.m_decomp().unwrap();
            if cd.abs() <= ONCONE_REL_TOL * (m1 * m1 + m2 * m2 + m3 * m3) {
                return Ok(eigensolve_2x2(k));
            }
        }
    }

    // Sort by descending real part.
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| vals[b].re.partial_cmp(&vals[a].re).expect("finite"));

    let cluster_tol = 1e-8 * scale;
    let mut eigenvalues = Vec::with_capacity(d);
    let mut vectors: Vec<CVector> = Vec::with_capacity(d);
    let mut signatures: Vec<i8> = Vec::with_capacity(d);

    let mut pos = 0;
    while pos < order.len() {
        // Collect one degenerate cluster.
        let mut end = pos + 1;
        while end < order.len() && (vals[order[end]].re - vals[order[end - 1]].re).abs() <= cluster_tol
        {
            end += 1;
        }
        let mut cluster_vecs: Vec<CVector> = Vec::new();
        let mut cluster_sigs: Vec<i8> = Vec::new();
        for &idx in &order[pos..end] {
            let mut v = vecs.column(idx).to_owned();
            // sigma-Gram-Schmidt against the accepted cluster members.
            for (u, &s) in cluster_vecs.iter().zip(&cluster_sigs) {
                let coeff = sigma_inner_raw(u, &v, metric) * c(s as f64, 0.0);
                v = v - u.mapv(|z| z * coeff);
            }
            let form = sigma_inner_raw(&v, &v, metric);
            let vnorm = v.iter().map(|z| z.norm_sqr()).sum::<f64>();
            if form.re.abs() <= 1e-8 * vnorm.max(f64::MIN_POSITIVE) {
                // Mixed-signature degeneracy: sigma-degenerate Gram block is
                // reported as an on-cone defect, not resolved arbitrarily.
                let mut eigenvalues: Vec<Complex64> = vals.to_vec();
                eigenvalues.sort_by(|a, b| b.re.partial_cmp(&a.re).expect("finite"));
                return Ok(EigenSystem {
                    metric,
                    stability: Stability::OnCone,
                    eigenvalues,
                    eigenvectors: vec![],
                    signatures: vec![],
                    cone_distance: cone,
                });
            }
            let sig = if form.re > 0.0 { 1i8 } else { -1i8 };
            let scale = form.re.abs().sqrt();
            let mut v = v.mapv(|z| z / c(scale, 0.0));
            gauge_fix(&mut v);
            cluster_vecs.push(v);
            cluster_sigs.push(sig);
        }
        // Within the cluster: space-like first.
        let mut cluster: Vec<(i8, CVector, Complex64)> = cluster_sigs
            .into_iter()
            .zip(cluster_vecs)
            .zip(order[pos..end].iter().map(|&i| c(vals[i].re, 0.0)))
            .map(|((s, v), e)| (s, v, e))
            .collect();
        cluster.sort_by_key(|(s, _, _)| -(*s as i32));
        for (s, v, e) in cluster {
            signatures.push(s);
            vectors.push(v);
            eigenvalues.push(e);
        }
        pos = end;
    }

    let expected_pos = metric.positive();
    let got_pos = signatures.iter().filter(|&&s| s == 1).count();
    if got_pos != expected_pos {
        // Signature census violates the metric inertia: the eigenbasis is not
        // sigma-orthonormalizable, another defective boundary case.
        return Ok(EigenSystem {
            metric,
            stability: Stability::OnCone,
            eigenvalues,
            eigenvectors: vec![],
            signatures: vec![],
            cone_distance: cone,
        });
    }

    let eigenvectors = vectors
        .into_iter()
        .map(|v| SpinorState::new(v, metric).expect("dimension checked"))
        .collect();

    Ok(EigenSystem {
        metric,
        stability: Stability::Stable,
        eigenvalues,
        eigenvectors,
        signatures,
        cone_distance: cone,
    })
}

/// The Lorentz analogue of the Pauli matrices:
/// `tau1 = [[sqrt2, 1], [-1, -sqrt2]]`, `tau2 = [[sqrt2, i], [i, -sqrt2]]`,
/// `tau3 = diag(1, -1)`. Each has eigenvalues exactly {+1, -1}, expands any
/// two-mode generator with real coefficients, and the three are related by
/// Lorentz conjugation.
pub fn tau_matrices() -> [CMatrix; 3] {
    let s = std::f64::consts::SQRT_2;
    [
        ndarray::array![[c(s, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(-s, 0.0)]],
        ndarray::array![[c(s, 0.0), c(0.0, 1.0)], [c(0.0, 1.0), c(-s, 0.0)]],
        ndarray::array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]],
    ]
}

/// Boost with `L tau3 L^{-1} = tau1`: `x = i sqrt((sqrt2 + 1)/2)`,
/// `y = -i sqrt((sqrt2 - 1)/2)`. The moduli satisfy `|x|^2 - |y|^2 = 1` and
/// `-2 x y* = 1`, which pin the conjugation exactly.
pub fn tau_boost_to_tau1() -> LorentzMap {
    let s = std::f64::consts::SQRT_2;
    let p = ((s + 1.0) / 2.0).sqrt();
    let q = ((s - 1.0) / 2.0).sqrt();
    LorentzMap::boost(c(0.0, p), c(0.0, -q)).expect("p^2 - q^2 = 1")
}

/// Boost with `L tau3 L^{-1} = tau2`: `x = sqrt((sqrt2 + 1)/2) e^{-i pi/4}`,
/// `y = sqrt((sqrt2 - 1)/2) e^{+i pi/4}`.
pub fn tau_boost_to_tau2() -> LorentzMap {
    let s = std::f64::consts::SQRT_2;
    let p = ((s + 1.0) / 2.0).sqrt();
    let q = ((s - 1.0) / 2.0).sqrt();
    let quarter = std::f64::consts::FRAC_PI_4;
    LorentzMap::boost(
        Complex64::from_polar(p, -quarter),
        Complex64::from_polar(q, quarter),
    )
    .expect("p^2 - q^2 = 1")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::minkowski::sigma_inner;
    use ndarray_linalg::Solve;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn hermitian_2x2(h11: f64, h12: Complex64, h22: f64) -> HermitianGenerator {
        let h = ndarray::array![[c(h11, 0.0), h12], [h12.conj(), c(h22, 0.0)]];
        HermitianGenerator::new(h, MinkowskiMetric::one_one()).unwrap()
    }

    fn random_hermitian(rng: &mut ChaCha8Rng, metric: MinkowskiMetric) -> HermitianGenerator {
        let d = metric.dim();
        let a = CMatrix::from_shape_fn((d, d), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = (&a + &linalg::dagger(&a)).mapv(|z| z * c(0.5, 0.0));
        HermitianGenerator::new(h, metric).unwrap()
    }

    /// Positive-definite H gives a stable generator: sigma H is similar to
    /// the Hermitian H^{1/2} sigma H^{1/2}.
    fn random_stable(rng: &mut ChaCha8Rng, metric: MinkowskiMetric) -> BdgGenerator {
        let d = metric.dim();
        let a = CMatrix::from_shape_fn((d, d), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let h = linalg::dagger(&a).dot(&a) + linalg::identity(d).mapv(|z| z * c(0.3, 0.0));
        BdgGenerator::from_hermitian(&HermitianGenerator::new(h, metric).unwrap())
    }

    #[test]
    fn build_diagonal_example() {
        let g = BdgGenerator::from_hermitian(&hermitian_2x2(1.0, c(0.0, 0.0), -1.0));
        assert_eq!(g.m_decomp().unwrap(), [0.0, 0.0, 0.0]);
        assert_eq!(g.trace_part().unwrap(), 1.0);
        let defect = linalg::frobenius(&(g.matrix() - &linalg::identity(2)));
        assert!(defect == 0.0);
    }

    #[test]
    fn build_offdiagonal_example() {
        let g = BdgGenerator::from_hermitian(&hermitian_2x2(0.0, c(1.0, 0.0), 0.0));
        assert_eq!(g.m_decomp().unwrap(), [1.0, 0.0, 0.0]);
        assert_eq!(g.matrix()[[1, 0]], c(-1.0, 0.0));
    }

    #[test]
    fn build_mixed_example_direct_arithmetic() {
        // Direct matrix arithmetic oracle: H = [[1, 0.6], [0.6, 1]] gives
        // K = [[1, 0.6], [-0.6, -1]], so m = (0.6, 0, 1), trace 0.
        let g = BdgGenerator::from_hermitian(&hermitian_2x2(1.0, c(0.6, 0.0), 1.0));
        assert_eq!(g.m_decomp().unwrap(), [0.6, 0.0, 1.0]);
        assert_eq!(g.trace_part().unwrap(), 0.0);

        // With H22 = -1 the same oracle lands the weight on the trace part.
        let g = BdgGenerator::from_hermitian(&hermitian_2x2(1.0, c(0.6, 0.0), -1.0));
        assert_eq!(g.m_decomp().unwrap(), [0.6, 0.0, 0.0]);
        assert_eq!(g.trace_part().unwrap(), 1.0);
    }

    #[test]
    fn rejects_non_hermitian() {
        let h = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.5, 0.0), c(0.0, 0.0)]];
        assert!(HermitianGenerator::new(h, MinkowskiMetric::one_one()).is_err());
    }

    #[test]
    fn decomposition_reconstructs_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..100 {
            let h = random_hermitian(&mut rng, MinkowskiMetric::one_one());
            let g = BdgGenerator::from_hermitian(&h);
            let rebuilt = BdgGenerator::from_m_coeffs(
                g.m_decomp().unwrap(),
                g.trace_part().unwrap(),
            );
            let defect = linalg::frobenius(&(g.matrix() - rebuilt.matrix()));
            assert!(defect <= 1e-13);
            assert!(g.hermiticity_defect() <= 1e-13);
        }
    }

    #[test]
    fn eigensolve_axis_example() {
        let eig = eigensolve(&BdgGenerator::from_m_coeffs([0.0, 0.0, 1.0], 0.0)).unwrap();
        assert_eq!(eig.stability(), Stability::Stable);
        assert_eq!(eig.eigenvalues()[0], c(1.0, 0.0));
        assert_eq!(eig.eigenvalues()[1], c(-1.0, 0.0));
        assert_eq!(eig.signatures(), &[1, -1]);
        assert!((eig.eigenvectors()[0].amplitudes()[0] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((eig.eigenvectors()[1].amplitudes()[1] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn eigensolve_characteristic_polynomial_oracle() {
        // E^2 = m3^2 - m1^2 - m2^2 from the characteristic polynomial.
        let eig = eigensolve(&BdgGenerator::from_m_coeffs([0.6, 0.0, 1.0], 0.0)).unwrap();
        assert!((eig.eigenvalues()[0].re - 0.8).abs() < 1e-14);
        assert!((eig.eigenvalues()[1].re + 0.8).abs() < 1e-14);

        let on_cone = eigensolve(&BdgGenerator::from_m_coeffs([1.0, 0.0, 1.0], 0.0)).unwrap();
        assert_eq!(on_cone.stability(), Stability::OnCone);
        assert_eq!(on_cone.cone_distance(), Some(0.0));
        assert!(on_cone.eigenvectors().is_empty());

        let unstable = eigensolve(&BdgGenerator::from_m_coeffs([2.0, 0.0, 1.0], 0.0)).unwrap();
        assert_eq!(unstable.stability(), Stability::Unstable);
        let g = 3.0_f64.sqrt();
        assert!((unstable.eigenvalues()[0] - c(0.0, g)).norm() < 1e-14);
        assert!((unstable.eigenvalues()[1] - c(0.0, -g)).norm() < 1e-14);
    }

    #[test]
    fn unstable_when_m3_vanishes_with_coupling() {
        let eig = eigensolve(&BdgGenerator::from_m_coeffs([0.7, 0.4, 0.0], 0.0)).unwrap();
        assert_eq!(eig.stability(), Stability::Unstable);
    }

    #[test]
    fn eigenvalue_relation_random_sweep() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..500 {
            let m1: f64 = rng.gen_range(-1.0..1.0);
            let m2: f64 = rng.gen_range(-1.0..1.0);
            let r = (m1 * m1 + m2 * m2).sqrt();
            let m3 = (r + rng.gen_range(0.05..2.0)) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            let tp: f64 = rng.gen_range(-1.0..1.0);
            let eig = eigensolve(&BdgGenerator::from_m_coeffs([m1, m2, m3], tp)).unwrap();
            assert_eq!(eig.stability(), Stability::Stable);
            let d = m3 * m3 - m1 * m1 - m2 * m2;
            for ev in eig.eigenvalues() {
                let shifted = ev.re - tp;
                assert!((shifted * shifted - d).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn stable_pairing_structure() {
        // |2> = (v*, u*) up to phase when |1> = (u, v): compare the
        // swap-conjugate of one vector against the other.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let g = random_stable(&mut rng, MinkowskiMetric::one_one());
            let eig = eigensolve(&g).unwrap();
            let a = eig.eigenvectors()[0].amplitudes();
            let b = eig.eigenvectors()[1].amplitudes();
            let swapped = ndarray::array![b[1].conj(), b[0].conj()];
            // Align phases before comparing.
            let overlap: Complex64 = a.iter().zip(swapped.iter()).map(|(x, y)| x.conj() * y).sum();
            let phase = overlap / overlap.norm();
            let residual: f64 = a
                .iter()
                .zip(swapped.iter())
                .map(|(x, y)| (x * phase - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(residual <= 1e-8, "pairing residual {residual:.3e}");
        }
    }

    #[test]
    fn stable_systems_have_one_of_each_signature() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..200 {
            let g = random_stable(&mut rng, MinkowskiMetric::one_one());
            let eig = eigensolve(&g).unwrap();
            assert_eq!(eig.stability(), Stability::Stable);
            let plus = eig.signatures().iter().filter(|&&s| s == 1).count();
            assert_eq!(plus, 1);
            assert!(eig.normalization_residual().unwrap() <= 1e-10);
            assert!(eig.orthogonality_residual().unwrap() <= 1e-9);
        }
    }

    #[test]
    fn energy_representation_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..100 {
            let g = random_stable(&mut rng, MinkowskiMetric::one_one());
            let eig = eigensolve(&g).unwrap();
            let psi = SpinorState::from_slice(
                &[
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                    c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                ],
                MinkowskiMetric::one_one(),
            )
            .unwrap();
            let coeffs = eig.to_energy_representation(&psi).unwrap();

            // Linear-solve oracle: solve V c = psi column-wise.
            let d = 2;
            let mut v = CMatrix::zeros((d, d));
            for (j, vec) in eig.eigenvectors().iter().enumerate() {
                v.column_mut(j).assign(vec.amplitudes());
            }
            let oracle = v.solve(psi.amplitudes()).unwrap();
            for (a, b) in coeffs.iter().zip(oracle.iter()) {
                assert!((a - b).norm() <= 1e-9);
            }

            // Reconstruction and interval equality.
            let rebuilt = eig.reconstruct(&coeffs).unwrap();
            let diff: f64 = rebuilt
                .amplitudes()
                .iter()
                .zip(psi.amplitudes().iter())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff <= 1e-9);
            let weighted: f64 = coeffs
                .iter()
                .zip(eig.signatures())
                .map(|(cj, &s)| s as f64 * cj.norm_sqr())
                .sum();
            assert!((weighted - psi.interval()).abs() <= 1e-10);
        }
    }

    #[test]
    fn energy_representation_named_examples() {
        let g = BdgGenerator::from_m_coeffs([0.5, 0.2, 1.3], 0.0);
        let eig = eigensolve(&g).unwrap();
        let one = eig.eigenvectors()[0].clone();
        let coeffs = eig.to_energy_representation(&one).unwrap();
        assert!((coeffs[0] - c(1.0, 0.0)).norm() <= 1e-12);
        assert!(coeffs[1].norm() <= 1e-12);

        // Equal-weight superposition is light-like.
        let two = eig.eigenvectors()[1].clone();
        let sum = SpinorState::new(
            one.amplitudes() + two.amplitudes(),
            MinkowskiMetric::one_one(),
        )
        .unwrap();
        let coeffs = eig.to_energy_representation(&sum).unwrap();
        assert!((coeffs[0].norm_sqr() - coeffs[1].norm_sqr()).abs() <= 1e-10);
        assert!(sum.interval().abs() <= 1e-10);
    }

    #[test]
    fn energy_representation_rejects_unstable() {
        let g = BdgGenerator::from_m_coeffs([2.0, 0.0, 1.0], 0.0);
        let eig = eigensolve(&g).unwrap();
        let psi = SpinorState::from_reals(&[1.0, 0.0], MinkowskiMetric::one_one()).unwrap();
        assert!(matches!(
            eig.to_energy_representation(&psi),
            Err(Error::NotStable { .. })
        ));
    }

    #[test]
    fn completeness_residuals() {
        let exact = eigensolve(&BdgGenerator::from_m_coeffs([0.0, 0.0, 1.0], 0.0)).unwrap();
        assert_eq!(exact.completeness_residual().unwrap(), 0.0);

        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..50 {
            let g = random_stable(&mut rng, MinkowskiMetric::one_one());
            let eig = eigensolve(&g).unwrap();
            assert!(eig.completeness_residual().unwrap() <= 1e-10);
        }
        for _ in 0..25 {
            let g = random_stable(&mut rng, MinkowskiMetric::new(2, 2).unwrap());
            let eig = eigensolve(&g).unwrap();
            assert_eq!(eig.stability(), Stability::Stable);
            assert!(eig.completeness_residual().unwrap() <= 1e-9);
        }
    }

    #[test]
    fn multimode_signature_census() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for (m, n) in [(2, 1), (1, 3), (3, 3), (4, 4)] {
            let metric = MinkowskiMetric::new(m, n).unwrap();
            let g = random_stable(&mut rng, metric);
            let eig = eigensolve(&g).unwrap();
            assert_eq!(eig.stability(), Stability::Stable);
            let plus = eig.signatures().iter().filter(|&&s| s == 1).count();
            assert_eq!(plus, m);
            assert!(eig.orthogonality_residual().unwrap() <= 1e-9);
            assert!(eig.normalization_residual().unwrap() <= 1e-10);
        }
    }

    #[test]
    fn dense_and_closed_form_agree_on_two_modes() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        for _ in 0..100 {
            let g = random_stable(&mut rng, MinkowskiMetric::one_one());
            let a = eigensolve(&g).unwrap();
            let b = eigensolve_dense(&g).unwrap();
            assert_eq!(a.stability(), b.stability());
            for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
                assert!((x - y).norm() <= 1e-10 * linalg::frobenius(g.matrix()).max(1.0));
            }
            for (va, vb) in a.eigenvectors().iter().zip(b.eigenvectors()) {
                // Gauge fixing makes both deterministic up to roundoff.
                let diff: f64 = va
                    .amplitudes()
                    .iter()
                    .zip(vb.amplitudes().iter())
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt();
                assert!(diff <= 1e-7, "vector mismatch {diff:.3e}");
            }
        }
    }

    #[test]
    fn degeneracy_locus_sweep() {
        // Approaching the cone from above: gap closes, eigenvector condition
        // number diverges, and the cone distance signs the three regimes.
        let (m1, m2) = (0.8_f64, 0.6_f64);
        let r = (m1 * m1 + m2 * m2).sqrt();
        let mut previous_gap = f64::INFINITY;
        let mut previous_cond = 0.0;
        for &eps in &[1e-1, 1e-2, 1e-3, 1e-4] {
            let m3 = r * (1.0 + eps);
            let g = BdgGenerator::from_m_coeffs([m1, m2, m3], 0.0);
            let eig = eigensolve(&g).unwrap();
            assert_eq!(eig.stability(), Stability::Stable);
            let gap = eig.eigenvalues()[0].re - eig.eigenvalues()[1].re;
            assert!(gap < previous_gap);
            previous_gap = gap;
            // Condition proxy: Euclidean norm of the normalized eigenvectors
            // grows as the sigma-norm degenerates.
            let cond = eig.eigenvectors()[0].norm_sqr();
            assert!(cond > previous_cond);
            previous_cond = cond;
        }
        let stable = BdgGenerator::from_m_coeffs([m1, m2, r * (1.0 + 1e-3)], 0.0);
        assert!(stable.cone_distance().unwrap() > 0.0);
        let unstable = BdgGenerator::from_m_coeffs([m1, m2, r * (1.0 - 1e-3)], 0.0);
        assert!(unstable.cone_distance().unwrap() < 0.0);
        assert_eq!(
            eigensolve(&unstable).unwrap().stability(),
            Stability::Unstable
        );
    }

    #[test]
    fn tau_matrices_have_unit_eigenvalues() {
        // det(tau - lambda I) = lambda^2 - 1 for each construction, checked
        // by direct polynomial arithmetic.
        for tau in tau_matrices() {
            let trace = tau[[0, 0]] + tau[[1, 1]];
            let det = tau[[0, 0]] * tau[[1, 1]] - tau[[0, 1]] * tau[[1, 0]];
            assert!(trace.norm() <= 1e-15);
            assert!((det + c(1.0, 0.0)).norm() <= 1e-15);
        }
    }

    #[test]
    fn tau_boosts_conjugate_tau3() {
        let [t1, t2, t3] = tau_matrices();
        let b1 = tau_boost_to_tau1();
        let got1 = b1.conjugate(&t3).unwrap();
        assert!(linalg::frobenius(&(&got1 - &t1)) <= 1e-12);

        let b2 = tau_boost_to_tau2();
        let got2 = b2.conjugate(&t3).unwrap();
        assert!(linalg::frobenius(&(&got2 - &t2)) <= 1e-12);
    }

    #[test]
    fn tau_decompose_examples() {
        let s = std::f64::consts::SQRT_2;
        let k = BdgGenerator::from_m_coeffs([0.0, 0.0, 1.0], 0.0);
        assert_eq!(k.tau_decomp().unwrap(), [0.0, 0.0, 1.0]);

        let k = BdgGenerator::from_m_coeffs([1.0, 0.0, 0.0], 0.0);
        let n = k.tau_decomp().unwrap();
        assert!((n[0] - 1.0).abs() < 1e-15 && n[1] == 0.0 && (n[2] + s).abs() < 1e-15);

        let k = BdgGenerator::from_m_coeffs([0.0, 1.0, 0.0], 0.0);
        let n = k.tau_decomp().unwrap();
        assert!(n[0] == 0.0 && (n[1] - 1.0).abs() < 1e-15 && (n[2] + s).abs() < 1e-15);
    }

    #[test]
    fn tau_decompose_linear_solve_oracle() {
        // Independent 3x3 real linear system matching the basis expansions on
        // the (Re K12, Im K12, K11 tilde) coordinates.
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..50 {
            let h = random_hermitian(&mut rng, MinkowskiMetric::one_one());
            let g = BdgGenerator::from_hermitian(&h);
            let n = g.tau_decomp().unwrap();
            // tau-basis coordinates of X-basis coefficients:
            // K12: n1*1 + n2*i ; diag: n1*sqrt2 + n2*sqrt2 + n3.
            let [m1, m2, m3] = g.m_decomp().unwrap();
            let s = std::f64::consts::SQRT_2;
            // Solve [[1,0,0],[0,1,0],[s,s,1]] n = (m1, m2, m3).
            let n_oracle = [m1, m2, m3 - s * (m1 + m2)];
            for (a, b) in n.iter().zip(n_oracle.iter()) {
                assert!((a - b).abs() <= 1e-12);
            }
            assert!(g.tau_reconstruction_residual(n) <= 1e-12);
        }
    }

    #[test]
    fn unphysical_unitary_gauge_breaks_interval_equality() {
        // Forcing |u|^2 + |v|^2 = 1 on the eigenvectors wrecks the interval
        // equality between representations.
        let g = BdgGenerator::from_m_coeffs([0.6, 0.3, 1.2], 0.0);
        let eig = eigensolve(&g).unwrap();
        let psi = SpinorState::from_slice(
            &[c(1.0, 0.0), c(0.3, 0.2)],
            MinkowskiMetric::one_one(),
        )
        .unwrap();

        let mut v = CMatrix::zeros((2, 2));
        for (j, vec) in eig.eigenvectors().iter().enumerate() {
            let norm = vec.norm_sqr().sqrt();
            let unit = vec.amplitudes().mapv(|z| z / c(norm, 0.0));
            v.column_mut(j).assign(&unit);
        }
        let coeffs = v.solve(psi.amplitudes()).unwrap();
        let pseudo_interval = coeffs[0].norm_sqr() - coeffs[1].norm_sqr();
        assert!(
            (pseudo_interval - psi.interval()).abs() > 1e-3,
            "unitary gauge should break interval equality"
        );
    }

    #[test]
    fn band_selection_follows_signature() {
        // For m3 < 0 the energy ordering swaps but the signature tracks.
        let up = eigensolve(&BdgGenerator::from_m_coeffs([0.3, 0.1, 1.0], 0.0)).unwrap();
        assert_eq!(up.band_index(Band::SpaceLike).unwrap(), 0);
        let down = eigensolve(&BdgGenerator::from_m_coeffs([0.3, 0.1, -1.0], 0.0)).unwrap();
        assert_eq!(down.band_index(Band::SpaceLike).unwrap(), 1);
        assert!(down.band_energy(Band::SpaceLike).unwrap() < 0.0);
    }

    #[test]
    fn sigma_inner_of_eigenvectors_matches_signature() {
        let g = BdgGenerator::from_m_coeffs([0.4, -0.2, 1.1], 0.3);
        let eig = eigensolve(&g).unwrap();
        for (v, &s) in eig.eigenvectors().iter().zip(eig.signatures()) {
            let form = sigma_inner(v, v).unwrap();
            assert!((form.re - s as f64).abs() <= 1e-12);
        }
    }
}
