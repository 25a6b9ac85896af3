//! Adiabatic sweeps and Berry geometry over the `(m1, m2, m3)` parameter
//! space of two-mode generators.
//!
//! The connection of the tracked band is `A_j = i s_j <j| sigma nabla |j>`
//! with `s_j` the band signature (+1 space-like, -1 time-like); it is real
//! in any sigma-normalized gauge. Loop phases are computed two independent
//! ways and both reported:
//!
//! - connection quadrature: finite-difference samples of `A` integrated by
//!   the trapezoid rule along the polyline;
//! - overlap product: `-sum_k arg(s_j <j_k| sigma |j_{k+1}>)`, the
//!   gauge-invariant discretization (it reduces to the familiar unitary
//!   overlap formula when sigma is replaced by the identity).
//!
//! Sign conventions: loop phases follow the `e^{i beta}` ansatz, so a
//! counterclockwise circle about the `+m3` axis gives the space-like band a
//! negative phase. Reported fluxes and curvatures flip that sign once,
//! globally, so that the space-like band's flux emanates outward positively;
//! the time-like band then carries the opposite sign throughout.

use crate::error::{Error, Result};
use crate::evolution::{evolve_timedep, StepControl};
use crate::generator::{eigensolve, BdgGenerator, Stability, ONCONE_REL_TOL};
pub use crate::generator::Band;
use crate::minkowski::{sigma_inner_raw, MinkowskiMetric, SpinorState};
use crate::{CMatrix, CVector};
use num_complex::Complex64;
use rayon::prelude::*;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Finite-difference step (relative to the local parameter scale) for
/// eigenvector derivatives. The fourth-order stencil keeps truncation far
/// below roundoff at this step size.
const CONNECTION_FD_STEP: f64 = 1e-4;
/// Imaginary residue allowed on connection samples before they are
/// discarded as real.
pub const CONNECTION_IM_TOL: f64 = 1e-10;
/// Step (relative) for the local curl stencils in the curvature map.
const CURL_FD_STEP: f64 = 1e-3;
/// Band-tracking threshold on successive sigma-overlap moduli.
const TRACKING_MIN_OVERLAP: f64 = 0.5;

/// A discretized path of `R = (m1, m2, m3)` samples.
#[derive(Debug, Clone)]
pub struct ParameterPath {
    samples: Vec<[f64; 3]>,
    closed: bool,
    exploratory: bool,
}

impl ParameterPath {
    /// A polyline through the given vertices. Closed paths are forced to end
    /// where they start (the first sample is appended if missing).
    pub fn polyline(mut samples: Vec<[f64; 3]>, closed: bool) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::InvalidParameter("path needs at least two samples".into()));
        }
        if closed {
            let first = samples[0];
            let last = *samples.last().unwrap();
            if first != last {
                samples.push(first);
            }
        }
        Ok(Self {
            samples,
            closed,
            exploratory: false,
        })
    }

    /// Counterclockwise circle of the given polar angle about the `m3` axis
    /// (seen from `+m3`), sampled at `resolution` segments on a sphere of
    /// the given radius. Polar angles above `pi/2` give south-side circles.
    pub fn circle(theta: f64, radius: f64, resolution: usize) -> Result<Self> {
        if !(0.0..=std::f64::consts::PI).contains(&theta) {
            return Err(Error::InvalidParameter("polar angle out of [0, pi]".into()));
        }
        if radius <= 0.0 {
            return Err(Error::InvalidParameter("circle radius must be positive".into()));
        }
        if resolution < 3 {
            return Err(Error::InvalidParameter("circle needs at least 3 segments".into()));
        }
        let (st, ct) = theta.sin_cos();
        let mut samples = Vec::with_capacity(resolution + 1);
        for k in 0..resolution {
            let phi = std::f64::consts::TAU * k as f64 / resolution as f64;
            samples.push([radius * st * phi.cos(), radius * st * phi.sin(), radius * ct]);
        }
        samples.push(samples[0]);
        Ok(Self {
            samples,
            closed: true,
            exploratory: false,
        })
    }

    /// Marks the path as deliberately allowed to hold non-stable samples
    /// (construction-time only; loop integrals still reject such paths).
    pub fn exploratory(mut self) -> Self {
        self.exploratory = true;
        self
    }

    /// Uniformly rescales every sample, `R -> s R`.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self
                .samples
                .iter()
                .map(|r| [r[0] * factor, r[1] * factor, r[2] * factor])
                .collect(),
            closed: self.closed,
            exploratory: self.exploratory,
        }
    }

    pub fn samples(&self) -> &[[f64; 3]] {
        &self.samples
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    /// Segment count (vertex count minus one).
    pub fn resolution(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn generator_at(&self, index: usize) -> BdgGenerator {
        BdgGenerator::from_m_coeffs(self.samples[index], 0.0)
    }

    /// Linear interpolation by fractional arc position in [0, 1].
    pub fn point_at(&self, s: f64) -> [f64; 3] {
        let segs = self.resolution() as f64;
        let x = (s.clamp(0.0, 1.0)) * segs;
        let i = (x.floor() as usize).min(self.resolution() - 1);
        let frac = x - i as f64;
        let a = self.samples[i];
        let b = self.samples[i + 1];
        [
            a[0] + frac * (b[0] - a[0]),
            a[1] + frac * (b[1] - a[1]),
            a[2] + frac * (b[2] - a[2]),
        ]
    }

    /// Rejects paths that touch or cross the degeneracy cone, unless the
    /// path was marked exploratory.
    pub fn validate_stable(&self) -> Result<()> {
        for (index, r) in self.samples.iter().enumerate() {
            let cone = r[2] * r[2] - r[0] * r[0] - r[1] * r[1];
            let scale = r[0] * r[0] + r[1] * r[1] + r[2] * r[2];
            if cone <= ONCONE_REL_TOL * scale {
                return Err(Error::ConeTouching {
                    index,
                    cone_distance: cone,
                });
            }
        }
        Ok(())
    }
}

/// How eigenvector phases are chosen before the overlap product.
#[derive(Debug, Clone, Copy)]
pub enum GaugeMode {
    /// The library's deterministic gauge.
    Deterministic,
    /// Independent random phase on every sampled eigenvector; the loop
    /// phase must not move (gauge invariance of the estimator).
    Randomized { seed: u64 },
}

/// Geometric phase of one band around a closed parameter loop.
#[derive(Debug, Clone)]
pub struct BerryResult {
    /// Overlap-product phase reduced to (-pi, pi].
    pub phase: f64,
    /// Winding-resolved accumulator (not reduced).
    pub phase_unreduced: f64,
    /// Independent estimate: trapezoid quadrature of the sampled connection.
    pub phase_quadrature: f64,
    /// Real connection 3-vector at each loop vertex.
    pub connection_samples: Vec<[f64; 3]>,
    pub band: Band,
    pub signature: i8,
    /// Segment count of the loop.
    pub resolution: usize,
    /// Richardson estimate from the half-resolution subloop.
    pub discretization_error: f64,
    /// |overlap-product - quadrature|, the cross-estimator gap.
    pub estimator_gap: f64,
    /// Smallest sigma-overlap modulus seen while tracking the band.
    pub min_overlap: f64,
}

fn band_vector_at(r: [f64; 3], band: Band) -> Result<(SpinorState, i8, f64)> {
    let gen = BdgGenerator::from_m_coeffs(r, 0.0);
    let eig = eigensolve(&gen)?;
    if eig.stability() != Stability::Stable {
        return Err(Error::NotStable {
            stability: eig.stability(),
        });
    }
    let idx = eig.band_index(band)?;
    Ok((
        eig.eigenvectors()[idx].clone(),
        eig.signatures()[idx],
        eig.eigenvalues()[idx].re,
    ))
}

/// Real Berry connection `A = i s <j| sigma nabla |j>` at a parameter point,
/// by central finite differences of the band eigenvector in the
/// deterministic gauge. The imaginary residue of each component must stay
/// below [`CONNECTION_IM_TOL`]; it is asserted, then discarded.
pub fn connection_at(r: [f64; 3], band: Band) -> Result<[f64; 3]> {
    let scale = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt().max(1.0);
    let h = CONNECTION_FD_STEP * scale;
    let (base, sig, _) = band_vector_at(r, band)?;
    let metric = MinkowskiMetric::one_one();
    let mut out = [0.0; 3];
    for axis in 0..3 {
        let at = |offset: f64| -> Result<CVector> {
            let mut rs = r;
            rs[axis] += offset;
            Ok(band_vector_at(rs, band)?.0.amplitudes().clone())
        };
        // Fourth-order central difference of the band eigenvector.
        let p2 = at(2.0 * h)?;
        let p1 = at(h)?;
        let m1 = at(-h)?;
        let m2 = at(-2.0 * h)?;
        let derivative: CVector = (p1.mapv(|z| z * c(8.0, 0.0)) - m1.mapv(|z| z * c(8.0, 0.0))
            + m2
            - p2)
            / c(12.0 * h, 0.0);
        let value = c(0.0, sig as f64) * sigma_inner_raw(base.amplitudes(), &derivative, metric);
        if value.im.abs() > CONNECTION_IM_TOL {
            return Err(Error::ConnectionResidue {
                residue: value.im.abs(),
                tol: CONNECTION_IM_TOL,
            });
        }
        out[axis] = value.re;
    }
    Ok(out)
}

fn wrap_to_pi(x: f64) -> f64 {
    let tau = std::f64::consts::TAU;
    let mut y = x % tau;
    if y > std::f64::consts::PI {
        y -= tau;
    } else if y <= -std::f64::consts::PI {
        y += tau;
    }
    y
}

/// Overlap-product phase over a closed vertex list (first vertex not
/// repeated). Returns (phase, min overlap modulus).
fn overlap_phase(vectors: &[CVector], signature: i8, metric: MinkowskiMetric) -> Result<(f64, f64)> {
    let n = vectors.len();
    let mut acc = 0.0;
    let mut min_overlap = f64::INFINITY;
    for k in 0..n {
        let next = &vectors[(k + 1) % n];
        let w = sigma_inner_raw(&vectors[k], next, metric) * c(signature as f64, 0.0);
        let modulus = w.norm();
        if modulus < TRACKING_MIN_OVERLAP {
            return Err(Error::BandTrackingLost {
                index: k,
                overlap: modulus,
            });
        }
        min_overlap = min_overlap.min(modulus);
        acc -= w.arg();
    }
    Ok((acc, min_overlap))
}

/// Loop geometric phase with an explicit gauge mode; see
/// [`berry_phase_loop`].
pub fn berry_phase_loop_gauged(
    path: &ParameterPath,
    band: Band,
    gauge: GaugeMode,
) -> Result<BerryResult> {
    if !path.is_closed() {
        return Err(Error::InvalidParameter("loop phase needs a closed path".into()));
    }
    if path.resolution() < 16 {
        return Err(Error::InvalidParameter("loop resolution must be at least 16".into()));
    }
    path.validate_stable()?;

    let n = path.resolution();
    let vertices = &path.samples()[..n];
    let metric = MinkowskiMetric::one_one();

    let solved: Result<Vec<(SpinorState, i8, f64)>> = vertices
        .par_iter()
        .map(|&r| band_vector_at(r, band))
        .collect();
    let solved = solved?;
    let signature = solved[0].1;

    let mut vectors: Vec<CVector> = solved
        .iter()
        .map(|(s, _, _)| s.amplitudes().clone())
        .collect();
    if let GaugeMode::Randomized { seed } = gauge {
        use rand::prelude::*;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        for v in vectors.iter_mut() {
            let phase = Complex64::from_polar(1.0, rng.gen_range(0.0..std::f64::consts::TAU));
            for z in v.iter_mut() {
                *z *= phase;
            }
        }
    }

    let (unreduced, min_overlap) = overlap_phase(&vectors, signature, metric)?;

    // Half-resolution subloop for the Richardson error estimate.
    let discretization_error = if n % 2 == 0 && n >= 32 {
        let half: Vec<CVector> = vectors.iter().step_by(2).cloned().collect();
        let (half_phase, _) = overlap_phase(&half, signature, metric)?;
        (unreduced - half_phase).abs() / 3.0
    } else {
        f64::NAN
    };

    // Independent route: trapezoid quadrature of the finite-difference
    // connection (always sampled in the deterministic gauge).
    let connection_samples: Result<Vec<[f64; 3]>> = vertices
        .par_iter()
        .map(|&r| connection_at(r, band))
        .collect();
    let connection_samples = connection_samples?;
    let mut quadrature = 0.0;
    for k in 0..n {
        let a = connection_samples[k];
        let b = connection_samples[(k + 1) % n];
        let r0 = vertices[k];
        let r1 = path.samples()[k + 1];
        for axis in 0..3 {
            quadrature += 0.5 * (a[axis] + b[axis]) * (r1[axis] - r0[axis]);
        }
    }

    Ok(BerryResult {
        phase: wrap_to_pi(unreduced),
        phase_unreduced: unreduced,
        phase_quadrature: quadrature,
        connection_samples,
        band,
        signature,
        resolution: n,
        discretization_error,
        estimator_gap: (unreduced - quadrature).abs(),
        min_overlap,
    })
}

/// Geometric phase of `band` around a closed stable loop, by the
/// gauge-invariant overlap product, cross-checked by connection quadrature.
pub fn berry_phase_loop(path: &ParameterPath, band: Band) -> Result<BerryResult> {
    berry_phase_loop_gauged(path, band, GaugeMode::Deterministic)
}

/// The adiabatic coupling element `<2| nabla H |1> / (E1 - E2)` between the
/// space-like (1) and time-like (2) bands, one component per supplied
/// gradient direction of `H`.
pub fn adiabatic_element(
    eig: &crate::generator::EigenSystem,
    grad_h: &[CMatrix; 3],
) -> Result<[Complex64; 3]> {
    if eig.stability() != Stability::Stable {
        return Err(Error::NotStable {
            stability: eig.stability(),
        });
    }
    let space = eig.band_index(Band::SpaceLike)?;
    let time = eig.band_index(Band::TimeLike)?;
    let e1 = eig.eigenvalues()[space].re;
    let e2 = eig.eigenvalues()[time].re;
    let gap = e1 - e2;
    let scale = e1.abs().max(e2.abs()).max(1.0);
    if gap.abs() <= 1e-12 * scale {
        return Err(Error::Degenerate { gap: gap.abs() });
    }
    let bra = eig.eigenvectors()[time].amplitudes();
    let ket = eig.eigenvectors()[space].amplitudes();
    let mut out = [c(0.0, 0.0); 3];
    for (axis, grad) in grad_h.iter().enumerate() {
        let gk = grad.dot(ket);
        let elem: Complex64 = bra.iter().zip(gk.iter()).map(|(b, g)| b.conj() * g).sum();
        out[axis] = elem / c(gap, 0.0);
    }
    Ok(out)
}

/// Gradient triple of `H(R) = sigma K(R)` in the `(m1, m2, m3)`
/// parameterization: `dH/dm_i = sigma X_i`.
pub fn hermitian_gradient_basis() -> [CMatrix; 3] {
    let x1 = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(-1.0, 0.0), c(0.0, 0.0)]];
    let x2 = ndarray::array![[c(0.0, 0.0), c(0.0, 1.0)], [c(0.0, 1.0), c(0.0, 0.0)]];
    let x3 = ndarray::array![[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(-1.0, 0.0)]];
    let metric = MinkowskiMetric::one_one();
    [
        metric.apply_left(&x1),
        metric.apply_left(&x2),
        metric.apply_left(&x3),
    ]
}

/// A rectilinear grid in `(m1, m2, m3)`.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
pub struct Grid3 {
    pub origin: [f64; 3],
    pub step: [f64; 3],
    pub shape: [usize; 3],
}

impl Grid3 {
    pub fn point(&self, i: usize, j: usize, k: usize) -> [f64; 3] {
        [
            self.origin[0] + self.step[0] * i as f64,
            self.origin[1] + self.step[1] * j as f64,
            self.origin[2] + self.step[2] * k as f64,
        ]
    }

    pub fn len(&self) -> usize {
        self.shape[0] * self.shape[1] * self.shape[2]
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn indices(&self) -> Vec<[usize; 3]> {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.shape[0] {
            for j in 0..self.shape[1] {
                for k in 0..self.shape[2] {
                    out.push([i, j, k]);
                }
            }
        }
        out
    }

    pub fn flat_index(&self, idx: [usize; 3]) -> usize {
        (idx[0] * self.shape[1] + idx[1]) * self.shape[2] + idx[2]
    }
}

/// Berry curvature at one grid point, reported in the outward-positive
/// convention (space-like band flux emanates from the origin).
#[derive(Debug, Clone)]
pub struct CurvatureSample {
    pub position: [f64; 3],
    pub b: [f64; 3],
    /// Polar angle of the position from the `m3` axis.
    pub theta: f64,
    /// `B . r_hat * r^2`, the flux density per solid angle at this point.
    pub flux_density: f64,
    /// Stencil-halving agreement flag; false where the local estimate is
    /// unreliable (too close to the cone for the stencil).
    pub reliable: bool,
}

fn curl_at(r: [f64; 3], band: Band, h: f64) -> Result<[f64; 3]> {
    // d A / d axis, each row one axis derivative of the connection vector.
    let mut jac = [[0.0; 3]; 3];
    for axis in 0..3 {
        let mut rp = r;
        rp[axis] += h;
        let mut rm = r;
        rm[axis] -= h;
        let ap = connection_at(rp, band)?;
        let am = connection_at(rm, band)?;
        for comp in 0..3 {
            jac[axis][comp] = (ap[comp] - am[comp]) / (2.0 * h);
        }
    }
    Ok([
        jac[1][2] - jac[2][1],
        jac[2][0] - jac[0][2],
        jac[0][1] - jac[1][0],
    ])
}

/// Berry curvature on a grid of stable points. Each point gets its own local
/// curl stencil of the finite-difference connection; the divergence check
/// must difference these independent estimates across grid spacing, since
/// the discrete curl of one shared connection grid is divergence-free by
/// construction and would test nothing.
pub fn curvature_map(grid: &Grid3, band: Band) -> Result<Vec<CurvatureSample>> {
    let indices = grid.indices();
    indices
        .par_iter()
        .map(|&[i, j, k]| {
            let r = grid.point(i, j, k);
            let radius = (r[0] * r[0] + r[1] * r[1] + r[2] * r[2]).sqrt();
            let h = CURL_FD_STEP * radius.max(1.0);
            let full = curl_at(r, band, h)?;
            let half = curl_at(r, band, 0.5 * h)?;
            let b = [-half[0], -half[1], -half[2]]; // outward-positive convention
            let delta = (0..3)
                .map(|a| (full[a] - half[a]).abs())
                .fold(0.0, f64::max);
            let norm = (b[0] * b[0] + b[1] * b[1] + b[2] * b[2]).sqrt();
            let reliable = delta <= (1e-3 * norm).max(1e-8);
            let theta = (r[2] / radius.max(f64::MIN_POSITIVE)).clamp(-1.0, 1.0).acos();
            let radial = (b[0] * r[0] + b[1] * r[1] + b[2] * r[2]) / radius.max(f64::MIN_POSITIVE);
            Ok(CurvatureSample {
                position: r,
                b,
                theta,
                flux_density: radial * radius * radius,
                reliable,
            })
        })
        .collect()
}

/// Max `|div B|` over interior grid points together with max `|B|`, using
/// fourth-order central differences where the margin allows and second-order
/// otherwise. Samples must come from [`curvature_map`] on the same grid.
pub fn divergence_residual(grid: &Grid3, samples: &[CurvatureSample]) -> (f64, f64) {
    let b_at = |idx: [usize; 3], comp: usize| samples[grid.flat_index(idx)].b[comp];
    let max_b = samples
        .iter()
        .map(|s| (s.b[0] * s.b[0] + s.b[1] * s.b[1] + s.b[2] * s.b[2]).sqrt())
        .fold(0.0, f64::max);
    let mut max_div = 0.0_f64;
    for i in 1..grid.shape[0].saturating_sub(1) {
        for j in 1..grid.shape[1].saturating_sub(1) {
            for k in 1..grid.shape[2].saturating_sub(1) {
                let idx = [i, j, k];
                let mut div = 0.0;
                for axis in 0..3 {
                    let h = grid.step[axis];
                    let margin4 = idx[axis] >= 2 && idx[axis] + 2 < grid.shape[axis];
                    let shift = |d: isize| {
                        let mut out = idx;
                        out[axis] = (out[axis] as isize + d) as usize;
                        out
                    };
                    div += if margin4 {
                        (-b_at(shift(2), axis) + 8.0 * b_at(shift(1), axis)
                            - 8.0 * b_at(shift(-1), axis)
                            + b_at(shift(-2), axis))
                            / (12.0 * h)
                    } else {
                        (b_at(shift(1), axis) - b_at(shift(-1), axis)) / (2.0 * h)
                    };
                }
                max_div = max_div.max(div.abs());
            }
        }
    }
    (max_div, max_b)
}

/// Closed-form flux density per solid angle,
/// `rho = +-(1 + tan^2 theta)^{3/2} / (2 sqrt(1 - tan^2 theta))`, positive
/// for the space-like band. Diverges toward the cone and is undefined past
/// it.
pub fn flux_density_closed_form(theta: f64, band: Band) -> Result<f64> {
    if !(0.0..std::f64::consts::FRAC_PI_4).contains(&theta) {
        return Err(Error::InvalidParameter(
            "flux profile is defined for theta in [0, pi/4)".into(),
        ));
    }
    let t2 = theta.tan().powi(2);
    let value = (1.0 + t2).powf(1.5) / (2.0 * (1.0 - t2).sqrt());
    Ok(band.signature() as f64 * value)
}

/// Options for the measured flux-density ladder.
#[derive(Debug, Clone, Copy)]
pub struct FluxOpts {
    /// Ladder stability target on the measured density.
    pub ladder_tol: f64,
    /// Loop resolution for each phase evaluation (Richardson-extrapolated
    /// against half resolution).
    pub resolution: usize,
    /// Initial half-width of the polar-angle finite difference.
    pub delta0: f64,
    /// Ladder depth budget.
    pub max_halvings: u32,
}

impl Default for FluxOpts {
    fn default() -> Self {
        Self {
            ladder_tol: 1e-5,
            resolution: 1 << 14,
            delta0: 0.02,
            max_halvings: 8,
        }
    }
}

/// One point of the flux-density profile.
#[derive(Debug, Clone)]
pub struct FluxProfilePoint {
    pub theta: f64,
    pub closed_form: f64,
    pub measured: f64,
    /// Change across the last ladder rung.
    pub ladder_delta: f64,
    pub converged: bool,
}

/// Loop phase of a circle at the given polar angle, Richardson-extrapolated
/// in the loop resolution.
fn circle_phase(theta: f64, band: Band, resolution: usize) -> Result<f64> {
    if theta <= 0.0 || theta >= std::f64::consts::PI {
        // Degenerate circle at a pole: the loop integral vanishes.
        return Ok(0.0);
    }
    let coarse = berry_phase_loop(&ParameterPath::circle(theta, 1.0, resolution / 2)?, band)?;
    let fine = berry_phase_loop(&ParameterPath::circle(theta, 1.0, resolution)?, band)?;
    Ok((4.0 * fine.phase_unreduced - coarse.phase_unreduced) / 3.0)
}

/// Measured outward flux through the polar cap bounded by the circle at
/// `polar`: north-side caps for `polar < pi/2`, south-side above. The global
/// outward-positive sign flip is applied here.
fn cap_flux_measured(polar: f64, band: Band, resolution: usize) -> Result<f64> {
    let beta = circle_phase(polar, band, resolution)?;
    if polar <= std::f64::consts::FRAC_PI_2 {
        Ok(-beta)
    } else {
        Ok(beta)
    }
}

/// Solid angle of the north polar cap of half-angle theta.
fn cap_solid_angle(theta: f64) -> f64 {
    std::f64::consts::TAU * (1.0 - theta.cos())
}

/// Measured flux density `d Phi / d Omega` at polar angle `theta`
/// (north side), by step-doubled central differences of the cap flux.
fn measured_density_north(theta: f64, band: Band, opts: &FluxOpts) -> Result<FluxProfilePoint> {
    let closed_form = flux_density_closed_form(theta, band)?;
    let margin = std::f64::consts::FRAC_PI_4 - theta;
    let mut delta = opts.delta0.min(margin / 4.0).min(if theta > 0.0 {
        theta
    } else {
        f64::INFINITY
    });

    let density_at = |d: f64| -> Result<f64> {
        if theta < d * 1.5 {
            // One-sided form anchored at the pole where the cap flux is zero.
            let flux = cap_flux_measured(theta + d, band, opts.resolution)?;
            Ok(flux / cap_solid_angle(theta + d))
        } else {
            let plus = cap_flux_measured(theta + d, band, opts.resolution)?;
            let minus = cap_flux_measured(theta - d, band, opts.resolution)?;
            Ok((plus - minus) / (cap_solid_angle(theta + d) - cap_solid_angle(theta - d)))
        }
    };

    // Richardson pairs (delta, delta/2); ladder until the extrapolated value
    // settles.
    let mut previous: Option<f64> = None;
    let mut ladder_delta = f64::INFINITY;
    for _ in 0..opts.max_halvings {
        let rho_full = density_at(delta)?;
        let rho_half = density_at(0.5 * delta)?;
        let extrapolated = (4.0 * rho_half - rho_full) / 3.0;
        if let Some(p) = previous {
            ladder_delta = (extrapolated - p).abs();
            if ladder_delta <= opts.ladder_tol * extrapolated.abs().max(1.0) {
                return Ok(FluxProfilePoint {
                    theta,
                    closed_form,
                    measured: extrapolated,
                    ladder_delta,
                    converged: true,
                });
            }
        }
        previous = Some(extrapolated);
        delta *= 0.5;
    }
    Ok(FluxProfilePoint {
        theta,
        closed_form,
        measured: previous.unwrap_or(f64::NAN),
        ladder_delta,
        converged: false,
    })
}

/// Flux-density profile over a polar-angle grid: the closed form and the
/// measured `d beta / d Omega` side by side. Agreement is reported by the
/// caller, never asserted; the two disagree increasingly toward the cone.
pub fn flux_density_profile(
    thetas: &[f64],
    band: Band,
    opts: &FluxOpts,
) -> Result<Vec<FluxProfilePoint>> {
    thetas
        .par_iter()
        .map(|&theta| measured_density_north(theta, band, opts))
        .collect()
}

/// Measured total flux integrated over both exterior caps.
#[derive(Debug, Clone)]
pub struct TotalFlux {
    pub band: Band,
    pub theta_max: f64,
    /// Cumulative both-cap flux at each ladder angle.
    pub running: Vec<(f64, f64)>,
    /// Total at `theta_max` by quadrature of the measured density.
    pub total: f64,
    /// North-cap flux measured directly from the bounding loop.
    pub upper_cap_direct: f64,
    /// South-cap flux measured directly from the mirrored loop.
    pub lower_cap_direct: f64,
    /// `total / (sign * 2 pi)`, the comparison against the monopole total
    /// claimed by the closed form.
    pub ratio_to_two_pi: f64,
    /// Integral of the closed-form density over both caps up to `theta_max`.
    pub closed_form_total: f64,
    /// Fitted exponent `p` in `rho ~ (cos 2 theta)^{-p}` near `theta_max`
    /// (the closed form has p = 1/2; the measured profile is steeper).
    pub divergence_exponent: f64,
    /// Whether the tail increments are shrinking, i.e. whether extrapolation
    /// toward the cone converges at all.
    pub extrapolation_converged: bool,
}

/// Integrates the measured flux density over the north and south exterior
/// caps up to `theta_max < pi/4` on a `resolution`-point polar ladder.
pub fn total_flux(band: Band, theta_max: f64, resolution: usize) -> Result<TotalFlux> {
    if !(0.0..std::f64::consts::FRAC_PI_4).contains(&theta_max) || theta_max == 0.0 {
        return Err(Error::InvalidParameter(
            "theta_max must lie in (0, pi/4)".into(),
        ));
    }
    if resolution < 4 {
        return Err(Error::InvalidParameter("need at least 4 ladder points".into()));
    }
    let opts = FluxOpts::default();
    let thetas: Vec<f64> = (0..=resolution)
        .map(|i| theta_max * i as f64 / resolution as f64)
        .collect();

    let north: Result<Vec<FluxProfilePoint>> = thetas
        .par_iter()
        .map(|&t| measured_density_north(t, band, &opts))
        .collect();
    let north = north?;

    // South densities from mirrored loops at polar angle pi - theta.
    let south: Result<Vec<f64>> = thetas
        .par_iter()
        .map(|&t| {
            let d = (opts.delta0.min(t / 2.0).max(1e-3)).min(0.02);
            let polar = std::f64::consts::PI - t;
            if t < d * 1.5 {
                let flux = cap_flux_measured(polar - d, band, opts.resolution)?;
                Ok(flux / cap_solid_angle(t + d))
            } else {
                let plus = cap_flux_measured(polar - d, band, opts.resolution)?;
                let minus = cap_flux_measured(polar + d, band, opts.resolution)?;
                Ok((plus - minus) / (cap_solid_angle(t + d) - cap_solid_angle(t - d)))
            }
        })
        .collect();
    let south = south?;

    // Trapezoid quadrature of rho(theta) * 2 pi sin(theta).
    let mut running = Vec::with_capacity(thetas.len());
    let mut north_total = 0.0;
    let mut south_total = 0.0;
    running.push((0.0, 0.0));
    for i in 1..thetas.len() {
        let dt = thetas[i] - thetas[i - 1];
        let weight = |t: f64| std::f64::consts::TAU * t.sin();
        north_total += 0.5
            * dt
            * (north[i - 1].measured * weight(thetas[i - 1]) + north[i].measured * weight(thetas[i]));
        south_total +=
            0.5 * dt * (south[i - 1] * weight(thetas[i - 1]) + south[i] * weight(thetas[i]));
        running.push((thetas[i], north_total + south_total));
    }
    let total = north_total + south_total;

    let upper_cap_direct = cap_flux_measured(theta_max, band, opts.resolution)?;
    let lower_cap_direct =
        cap_flux_measured(std::f64::consts::PI - theta_max, band, opts.resolution)?;

    // Closed-form comparison: integrating the printed density over both caps
    // gives +-2 pi (1 - sqrt(cos 2 theta)/cos theta).
    let sign = band.signature() as f64;
    let closed_form_total =
        sign * std::f64::consts::TAU * (1.0 - (2.0 * theta_max).cos().sqrt() / theta_max.cos());

    // Power-law fit of |rho| against cos(2 theta) over the last few points.
    let tail = 5.min(thetas.len() - 1);
    let mut sx = 0.0;
    let mut sy = 0.0;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    let mut count = 0.0;
    for i in (thetas.len() - tail)..thetas.len() {
        let x = (2.0 * thetas[i]).cos().ln();
        let y = north[i].measured.abs().max(f64::MIN_POSITIVE).ln();
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        count += 1.0;
    }
    let slope = (count * sxy - sx * sy) / (count * sxx - sx * sx);
    let divergence_exponent = -slope;

    // Convergent extrapolation toward the cone needs integrable density,
    // i.e. exponent below one.
    let extrapolation_converged = divergence_exponent < 1.0;

    Ok(TotalFlux {
        band,
        theta_max,
        running,
        total,
        upper_cap_direct,
        lower_cap_direct,
        ratio_to_two_pi: total / (sign * std::f64::consts::TAU),
        closed_form_total,
        divergence_exponent,
        extrapolation_converged,
    })
}

/// Options for the adiabatic sweep driver.
#[derive(Debug, Clone, Copy)]
pub struct SweepOpts {
    /// Output sample count along the sweep.
    pub samples: usize,
    /// Step control handed to the integrator.
    pub step: StepControl,
}

impl Default for SweepOpts {
    fn default() -> Self {
        Self {
            samples: 2049,
            step: StepControl::default(),
        }
    }
}

/// An adiabatic sweep along a parameter path.
#[derive(Debug, Clone)]
pub struct AdiabaticSweep {
    pub band: Band,
    pub total_time: f64,
    pub times: Vec<f64>,
    /// `|<j(R(t))| sigma |psi(t)>|` of the tracked band. Leakage makes this
    /// exceed one: the tracked coefficient obeys `|c|^2 = interval + |leak|^2`.
    pub fidelity: Vec<f64>,
    /// `|<other band| sigma |psi(t)>|`, the leakage amplitude.
    pub leak: Vec<f64>,
    /// Max leakage amplitude over the final quarter of the sweep; the 1/T
    /// adiabatic envelope without the oscillatory zeros.
    pub final_infidelity: f64,
    /// `int E_band dt` along the sweep.
    pub dynamical_phase: f64,
    /// Unwrapped phase of the tracked coefficient at the end.
    pub total_phase: f64,
    /// `total_phase + dynamical_phase`: the geometric remainder.
    pub geometric_phase: f64,
}

/// Drives `K(R(t/T))` from the band eigenstate at the path start and tracks
/// the instantaneous-eigenstate projections.
pub fn adiabatic_sweep(
    path: &ParameterPath,
    total_time: f64,
    band: Band,
    opts: &SweepOpts,
) -> Result<AdiabaticSweep> {
    if total_time <= 0.0 {
        return Err(Error::InvalidParameter("total time must be positive".into()));
    }
    path.validate_stable()?;
    let (psi0, _, _) = band_vector_at(path.samples()[0], band)?;

    let k_of_t = |t: f64| BdgGenerator::from_m_coeffs(path.point_at(t / total_time), 0.0);
    let trace = evolve_timedep(&psi0, k_of_t, (0.0, total_time), opts.samples, opts.step)?;

    let metric = MinkowskiMetric::one_one();
    let mut fidelity = Vec::with_capacity(trace.times.len());
    let mut leak = Vec::with_capacity(trace.times.len());
    let mut energies = Vec::with_capacity(trace.times.len());
    let mut tracked_coeff = Vec::with_capacity(trace.times.len());
    for (t, psi) in trace.times.iter().zip(&trace.states) {
        let (j, sig, energy) = band_vector_at(path.point_at(t / total_time), band)?;
        let (other, other_sig, _) = band_vector_at(path.point_at(t / total_time), band.other())?;
        let c_tracked =
            sigma_inner_raw(j.amplitudes(), psi.amplitudes(), metric) * c(sig as f64, 0.0);
        let c_other = sigma_inner_raw(other.amplitudes(), psi.amplitudes(), metric)
            * c(other_sig as f64, 0.0);
        fidelity.push(c_tracked.norm());
        leak.push(c_other.norm());
        energies.push(energy);
        tracked_coeff.push(c_tracked);
    }

    // Dynamical phase by trapezoid over the sample grid.
    let mut dynamical_phase = 0.0;
    for i in 1..trace.times.len() {
        let dt = trace.times[i] - trace.times[i - 1];
        dynamical_phase += 0.5 * dt * (energies[i] + energies[i - 1]);
    }

    // Unwrapped phase of the tracked coefficient.
    let mut total_phase = 0.0;
    for i in 1..tracked_coeff.len() {
        let step = (tracked_coeff[i] / tracked_coeff[i - 1]).arg();
        total_phase += step;
    }

    let quarter = trace.times.len() - trace.times.len() / 4;
    let final_infidelity = leak[quarter..].iter().copied().fold(0.0, f64::max);

    Ok(AdiabaticSweep {
        band,
        total_time,
        times: trace.times,
        fidelity,
        leak,
        final_infidelity,
        dynamical_phase,
        total_phase,
        geometric_phase: total_phase + dynamical_phase,
    })
}

/// Closed-form loop phase of a counterclockwise circle at polar angle
/// `theta` for the space-like band: `pi (1 - cos theta / sqrt(cos 2 theta))`.
/// Derived by integrating the connection of the analytic eigenvector around
/// the circle; used as the independent oracle for the estimators.
#[doc(hidden)]
pub fn circle_phase_closed_form(theta: f64, band: Band) -> f64 {
    let value =
        std::f64::consts::PI * (1.0 - theta.cos() / (2.0 * theta).cos().sqrt());
    band.signature() as f64 * value
}
