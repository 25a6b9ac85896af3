//! Interval-preserving time evolution.
//!
//! The propagator `U(t) = exp(-i K t)` (hbar = 1) satisfies
//! `U^dagger sigma U = sigma` for every generator `K = sigma H`, stable or
//! not; the interval of a state is conserved along the flow while the norm
//! is free to grow. Nothing here renormalizes: interval drift is diagnostic
//! output, and silent correction would mask integrator bugs.

use crate::error::{Error, Result};
use crate::expm::expm;
use crate::generator::{eigensolve, BdgGenerator};
use crate::minkowski::{metric_defect, MinkowskiMetric, SpinorState};
use crate::{linalg, CMatrix};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Growth exponent `max|Im E| * |t|` beyond which amplitudes overflow f64.
const OVERFLOW_EXPONENT: f64 = 690.0;

/// The evolution operator `U = exp(-i K t)` for a fixed generator.
#[derive(Debug, Clone)]
pub struct Propagator {
    u: CMatrix,
    t: f64,
    metric: MinkowskiMetric,
}

impl Propagator {
    pub fn matrix(&self) -> &CMatrix {
        &self.u
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn metric(&self) -> MinkowskiMetric {
        self.metric
    }

    /// `|| U^dagger sigma U - sigma ||_F`.
    pub fn lorentz_defect(&self) -> f64 {
        metric_defect(&self.u, self.metric)
    }

    /// Defect scaled by `max(1, ||U||_F^2)`; the meaningful measure once
    /// unstable growth inflates the entries of `U`.
    pub fn lorentz_defect_relative(&self) -> f64 {
        let scale = linalg::frobenius(&self.u).powi(2).max(1.0);
        self.lorentz_defect() / scale
    }

    pub fn apply(&self, state: &SpinorState) -> Result<SpinorState> {
        if state.metric() != self.metric {
            return Err(Error::DimensionMismatch {
                expected: self.metric.dim(),
                got: state.dim(),
            });
        }
        SpinorState::new(self.u.dot(state.amplitudes()), self.metric)
    }
}

/// Largest eigenvalue growth rate `max |Im E|` of a generator.
fn growth_rate(k: &BdgGenerator) -> Result<f64> {
    if let Some(cone) = k.cone_distance() {
        return Ok(if cone < 0.0 { (-cone).sqrt() } else { 0.0 });
    }
    let eig = eigensolve(k)?;
    Ok(eig
        .eigenvalues()
        .iter()
        .map(|z| z.im.abs())
        .fold(0.0, f64::max))
}

/// Builds `U(t) = exp(-i K t)` by scaling and squaring. Unstable generators
/// at large `t` are rejected before the exponent leaves f64 range.
pub fn propagator(k: &BdgGenerator, t: f64) -> Result<Propagator> {
    if !t.is_finite() {
        return Err(Error::InvalidParameter("propagator time must be finite".into()));
    }
    let exponent = growth_rate(k)? * t.abs();
    if exponent > OVERFLOW_EXPONENT {
        return Err(Error::Overflow { exponent });
    }
    let a = k.matrix().mapv(|z| z * c(0.0, -t));
    let u = expm(&a)?;
    Ok(Propagator {
        u,
        t,
        metric: k.metric(),
    })
}

/// Closed-form two-mode propagator from the Cayley-Hamilton identity
/// `(K - tp I)^2 = cone_distance * I`: a cosine branch outside the cone, a
/// hyperbolic branch inside, and the tangent series on it. Used to
/// cross-check the series route and as the exact-Lorentz step kernel of the
/// time-dependent integrator.
pub fn propagator_closed_form(k: &BdgGenerator, t: f64) -> Result<Propagator> {
    let m = k.m_decomp().ok_or(Error::DimensionMismatch {
        expected: 2,
        got: k.dim(),
    })?;
    let tp = k.trace_part().expect("two-mode generator");
    let cone = k.cone_distance().expect("two-mode generator");

    // cospart = cos(sqrt(cone) t), coefpart = sin(sqrt(cone) t)/sqrt(cone),
    // with both branches meeting at the cone through the series.
    let (cospart, coefpart) = if cone.abs() * t * t < 1e-12 {
        let x = cone * t * t;
        (1.0 - 0.5 * x, t * (1.0 - x / 6.0))
    } else if cone > 0.0 {
        let e = cone.sqrt();
        ((e * t).cos(), (e * t).sin() / e)
    } else {
        let g = (-cone).sqrt();
        if g * t.abs() > OVERFLOW_EXPONENT {
            return Err(Error::Overflow { exponent: g * t.abs() });
        }
        ((g * t).cosh(), (g * t).sinh() / g)
    };

    let [m1, m2, m3] = m;
    let traceless = ndarray::array![
        [c(m3, 0.0), c(m1, m2)],
        [c(-m1, m2), c(-m3, 0.0)]
    ];
    let phase = c(0.0, -tp * t).exp();
    let u = (linalg::identity(2).mapv(|z| z * c(cospart, 0.0))
        + traceless.mapv(|z| z * c(0.0, -coefpart)))
    .mapv(|z| z * phase);
    Ok(Propagator {
        u,
        t,
        metric: k.metric(),
    })
}

/// A sampled trajectory with its diagnostics.
#[derive(Debug, Clone)]
pub struct EvolutionTrace {
    pub times: Vec<f64>,
    pub states: Vec<SpinorState>,
    /// `|interval(psi_k) - interval(psi_0)|` per sample, never corrected.
    pub interval_drift: Vec<f64>,
    /// Max amplitude modulus per sample.
    pub growth: Vec<f64>,
    /// Richardson error estimate of the final refinement (time-dependent
    /// integration only).
    pub error_estimate: Option<f64>,
}

impl EvolutionTrace {
    fn from_states(times: Vec<f64>, states: Vec<SpinorState>) -> Self {
        let base = states.first().map(|s| s.interval()).unwrap_or(0.0);
        let interval_drift = states.iter().map(|s| (s.interval() - base).abs()).collect();
        let growth = states
            .iter()
            .map(|s| s.amplitudes().iter().map(|z| z.norm()).fold(0.0, f64::max))
            .collect();
        Self {
            times,
            states,
            interval_drift,
            growth,
            error_estimate: None,
        }
    }

    pub fn max_interval_drift(&self) -> f64 {
        self.interval_drift.iter().copied().fold(0.0, f64::max)
    }
}

/// Evolves a state under a constant generator, sampling on the given grid.
/// Each sample uses `exp(-i K t_k)` directly, so there is no step-to-step
/// error accumulation.
pub fn evolve(psi0: &SpinorState, k: &BdgGenerator, t_grid: &[f64]) -> Result<EvolutionTrace> {
    if psi0.dim() != k.dim() {
        return Err(Error::DimensionMismatch {
            expected: k.dim(),
            got: psi0.dim(),
        });
    }
    let mut states = Vec::with_capacity(t_grid.len());
    for &t in t_grid {
        let u = propagator(k, t)?;
        states.push(u.apply(psi0)?);
    }
    Ok(EvolutionTrace::from_states(t_grid.to_vec(), states))
}

/// Step control for the time-dependent integrator.
#[derive(Debug, Clone, Copy)]
pub struct StepControl {
    /// Richardson error target on the sampled states.
    pub tol: f64,
    /// Steps of the first refinement level (rounded up to a multiple of the
    /// sample count).
    pub initial_steps: usize,
    /// Refinement budget; each level doubles the step count.
    pub max_doublings: u32,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            initial_steps: 1024,
            max_doublings: 16,
        }
    }
}

fn integrate_fixed<F>(
    psi0: &SpinorState,
    k_of_t: &F,
    t_span: (f64, f64),
    sample_times: &[f64],
    steps: usize,
) -> Result<Vec<SpinorState>>
where
    F: Fn(f64) -> BdgGenerator,
{
    let (t0, t1) = t_span;
    let dt = (t1 - t0) / steps as f64;
    let per_sample = steps / (sample_times.len() - 1);
    let mut psi = psi0.clone();
    let mut out = Vec::with_capacity(sample_times.len());
    out.push(psi.clone());
    for s in 0..steps {
        let t_mid = t0 + (s as f64 + 0.5) * dt;
        let k = k_of_t(t_mid);
        let u = if k.dim() == 2 {
            propagator_closed_form(&k, dt)?
        } else {
            propagator(&k, dt)?
        };
        psi = u.apply(&psi)?;
        if (s + 1) % per_sample == 0 {
            out.push(psi.clone());
        }
        if psi.norm_sqr() > 1e300 {
            return Err(Error::Overflow {
                exponent: psi.norm_sqr().ln(),
            });
        }
    }
    Ok(out)
}

/// Second-order midpoint-exponential integration of
/// `i dpsi/dt = K(t) psi`: each step applies `exp(-i K(t + dt/2) dt)`, which
/// is exactly Lorentz, so interval drift is bounded by floating-point
/// accumulation only. The step count doubles until the Richardson estimate
/// meets the tolerance.
pub fn evolve_timedep<F>(
    psi0: &SpinorState,
    k_of_t: F,
    t_span: (f64, f64),
    samples: usize,
    ctrl: StepControl,
) -> Result<EvolutionTrace>
where
    F: Fn(f64) -> BdgGenerator,
{
    if samples < 2 {
        return Err(Error::InvalidParameter("need at least two samples".into()));
    }
    if !(t_span.1 - t_span.0).is_finite() {
        return Err(Error::InvalidParameter("time span must be finite".into()));
    }
    let segments = samples - 1;
    let sample_times: Vec<f64> = (0..samples)
        .map(|i| t_span.0 + (t_span.1 - t_span.0) * i as f64 / segments as f64)
        .collect();

    let mut steps = ctrl.initial_steps.max(segments);
    steps = steps.div_ceil(segments) * segments;

    let mut coarse = integrate_fixed(psi0, &k_of_t, t_span, &sample_times, steps)?;
    for _ in 0..ctrl.max_doublings {
        let fine = integrate_fixed(psi0, &k_of_t, t_span, &sample_times, steps * 2)?;
        let diff = coarse
            .iter()
            .zip(fine.iter())
            .map(|(a, b)| {
                a.amplitudes()
                    .iter()
                    .zip(b.amplitudes().iter())
                    .map(|(x, y)| (x - y).norm_sqr())
                    .sum::<f64>()
                    .sqrt()
            })
            .fold(0.0, f64::max);
        let estimate = diff / 3.0;
        if estimate <= ctrl.tol {
            let mut trace = EvolutionTrace::from_states(sample_times, fine);
            trace.error_estimate = Some(estimate);
            return Ok(trace);
        }
        steps *= 2;
        coarse = fine;
    }
    Err(Error::StepControl {
        estimate: f64::NAN,
        tol: ctrl.tol,
        steps,
    })
}

/// Heisenberg-picture operator `O_h(t) = exp(i K t) O exp(-i K t)`. The
/// conjugating factor is not unitary, so spectra are preserved by similarity
/// rather than sigma-unitarity.
pub fn heisenberg_evolve(o: &CMatrix, k: &BdgGenerator, t: f64) -> Result<CMatrix> {
    let d = k.dim();
    if o.nrows() != d || o.ncols() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            got: o.nrows().max(o.ncols()),
        });
    }
    let forward = propagator(k, t)?;
    let backward = propagator(k, -t)?;
    Ok(backward.matrix().dot(o).dot(forward.matrix()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::generator::HermitianGenerator;
    use crate::minkowski::sigma_inner;
    use ndarray_linalg::Eig;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn state(values: &[Complex64]) -> SpinorState {
        SpinorState::from_slice(values, MinkowskiMetric::one_one()).unwrap()
    }

    #[test]
    fn diagonal_generator_rotates_phases() {
        // H = I gives K = sigma, U = diag(e^{-it}, e^{it}).
        let h = HermitianGenerator::new(linalg::identity(2), MinkowskiMetric::one_one()).unwrap();
        let k = BdgGenerator::from_hermitian(&h);
        let t = 0.77;
        let u = propagator(&k, t).unwrap();
        assert!((u.matrix()[[0, 0]] - c(0.0, -t).exp()).norm() < 1e-13);
        assert!((u.matrix()[[1, 1]] - c(0.0, t).exp()).norm() < 1e-13);
        let out = u.apply(&state(&[c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert!((out.amplitudes()[0] - c(0.0, -t).exp()).norm() < 1e-13);
        assert!(out.amplitudes()[1].norm() < 1e-15);
    }

    #[test]
    fn hyperbolic_branch_matches_closed_form_oracle() {
        // m = (1, 0, 0), t = 1: U = [[cosh 1, -i sinh 1], [i sinh 1, cosh 1]].
        let k = BdgGenerator::from_m_coeffs([1.0, 0.0, 0.0], 0.0);
        let u = propagator(&k, 1.0).unwrap();
        let ch = 1.0_f64.cosh();
        let sh = 1.0_f64.sinh();
        assert!((u.matrix()[[0, 0]] - c(ch, 0.0)).norm() < 1e-13);
        assert!((u.matrix()[[0, 1]] - c(0.0, -sh)).norm() < 1e-13);
        assert!((u.matrix()[[1, 0]] - c(0.0, sh)).norm() < 1e-13);

        let psi = u.apply(&state(&[c(1.0, 0.0), c(0.0, 0.0)])).unwrap();
        assert!((psi.amplitudes()[0] - c(ch, 0.0)).norm() < 1e-13);
        assert!((psi.amplitudes()[1] - c(0.0, sh)).norm() < 1e-13);
        assert!((psi.interval() - 1.0).abs() < 1e-12);

        let closed = propagator_closed_form(&k, 1.0).unwrap();
        let gap = linalg::frobenius(&(u.matrix() - closed.matrix()));
        assert!(gap < 1e-13);
    }

    #[test]
    fn series_and_closed_form_agree_across_regimes() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        for _ in 0..200 {
            let m = [
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
                rng.gen_range(-1.5..1.5),
            ];
            let tp = rng.gen_range(-1.0..1.0);
            let t = rng.gen_range(-3.0..3.0);
            let k = BdgGenerator::from_m_coeffs(m, tp);
            let a = propagator(&k, t).unwrap();
            let b = propagator_closed_form(&k, t).unwrap();
            let scale = linalg::frobenius(a.matrix()).max(1.0);
            assert!(linalg::frobenius(&(a.matrix() - b.matrix())) <= 1e-11 * scale);
        }
    }

    #[test]
    fn group_inverse_round_trip() {
        let k = BdgGenerator::from_m_coeffs([0.4, 0.7, 1.6], 0.2);
        let t = 2.3;
        let back_forth = propagator(&k, -t)
            .unwrap()
            .matrix()
            .dot(propagator(&k, t).unwrap().matrix());
        assert!(linalg::frobenius(&(&back_forth - &linalg::identity(2))) <= 1e-10);
    }

    #[test]
    fn composition_property() {
        let k = BdgGenerator::from_m_coeffs([0.3, -0.5, 1.4], -0.1);
        let (t1, t2) = (0.9, 1.7);
        let u12 = propagator(&k, t1 + t2).unwrap();
        let composed = propagator(&k, t2)
            .unwrap()
            .matrix()
            .dot(propagator(&k, t1).unwrap().matrix());
        assert!(linalg::frobenius(&(u12.matrix() - &composed)) <= 1e-10);
    }

    #[test]
    fn lorentz_property_random_generators() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        for _ in 0..300 {
            let m = [
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
                rng.gen_range(-2.0..2.0),
            ];
            let k = BdgGenerator::from_m_coeffs(m, rng.gen_range(-1.0..1.0));
            let growth = growth_rate(&k).unwrap();
            let t_cap = if growth > 0.0 { (20.0 / growth).min(10.0) } else { 10.0 };
            let t = rng.gen_range(0.0..t_cap);
            let u = propagator(&k, t).unwrap();
            assert!(u.lorentz_defect_relative() <= 1e-8);
        }
    }

    #[test]
    fn stationary_state_keeps_moduli() {
        let k = BdgGenerator::from_m_coeffs([0.5, 0.1, 1.2], 0.3);
        let eig = eigensolve(&k).unwrap();
        let one = eig.eigenvectors()[0].clone();
        let e1 = eig.eigenvalues()[0].re;
        let grid: Vec<f64> = (0..40).map(|i| i as f64 * 0.25).collect();
        let trace = evolve(&one, &k, &grid).unwrap();
        for (t, s) in trace.times.iter().zip(&trace.states) {
            // states equal |1> e^{-i E1 t}
            let expected = one.scaled(c(0.0, -e1 * t).exp());
            let diff: f64 = s
                .amplitudes()
                .iter()
                .zip(expected.amplitudes().iter())
                .map(|(a, b)| (a - b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff <= 1e-9);
        }
        assert!(trace.max_interval_drift() <= 1e-10);
    }

    #[test]
    fn light_like_superposition_stays_light_like() {
        let k = BdgGenerator::from_m_coeffs([0.5, 0.1, 1.2], 0.0);
        let eig = eigensolve(&k).unwrap();
        let sum = SpinorState::new(
            eig.eigenvectors()[0].amplitudes() + eig.eigenvectors()[1].amplitudes(),
            MinkowskiMetric::one_one(),
        )
        .unwrap();
        assert!(sum.interval().abs() <= 1e-12);
        let grid: Vec<f64> = (0..25).map(|i| i as f64 * 0.4).collect();
        let trace = evolve(&sum, &k, &grid).unwrap();
        for s in &trace.states {
            assert!(s.interval().abs() <= 1e-10);
        }
    }

    #[test]
    fn unstable_growth_rate_matches_exponent() {
        // Inside the cone the max amplitude grows as e^{sqrt(-cone) t}; fit
        // the log slope over a late window to dodge the transient.
        let k = BdgGenerator::from_m_coeffs([1.0, 0.3, 0.4], 0.0);
        let g = (-k.cone_distance().unwrap()).sqrt();
        let psi0 = state(&[c(1.0, 0.0), c(0.2, -0.1)]);
        let grid: Vec<f64> = (0..41).map(|i| i as f64 * 0.25).collect();
        let trace = evolve(&psi0, &k, &grid).unwrap();
        let a = trace.growth[20].ln(); // t = 5
        let b = trace.growth[40].ln(); // t = 10
        let rate = (b - a) / 5.0;
        assert!(
            (rate - g).abs() <= 0.01 * g,
            "rate {rate:.6} vs exponent {g:.6}"
        );
        // Interval is conserved even while amplitudes blow up.
        assert!(trace.max_interval_drift() <= 1e-8 * trace.growth[40].powi(2));
    }

    #[test]
    fn overflow_is_rejected_with_exponent() {
        let k = BdgGenerator::from_m_coeffs([10.0, 0.0, 0.0], 0.0);
        match propagator(&k, 100.0) {
            Err(Error::Overflow { exponent }) => assert!((exponent - 1000.0).abs() < 1e-9),
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn timedep_reduces_to_constant_case() {
        let k = BdgGenerator::from_m_coeffs([0.4, 0.2, 1.3], 0.1);
        let psi0 = state(&[c(0.8, 0.1), c(0.3, -0.2)]);
        let grid: Vec<f64> = (0..9).map(|i| i as f64 * 0.5).collect();
        let direct = evolve(&psi0, &k, &grid).unwrap();
        let k2 = k.clone();
        let stepped = evolve_timedep(
            &psi0,
            move |_| k2.clone(),
            (0.0, 4.0),
            9,
            StepControl::default(),
        )
        .unwrap();
        for (a, b) in direct.states.iter().zip(&stepped.states) {
            let diff: f64 = a
                .amplitudes()
                .iter()
                .zip(b.amplitudes().iter())
                .map(|(x, y)| (x - y).norm_sqr())
                .sum::<f64>()
                .sqrt();
            assert!(diff <= 1e-9);
        }
    }

    #[test]
    fn timedep_second_order_convergence() {
        // Self-convergence: halving the step divides the Richardson gap by
        // about four.
        let psi0 = state(&[c(1.0, 0.0), c(0.0, 0.0)]);
        let k_of_t = |t: f64| {
            BdgGenerator::from_m_coeffs([0.3 * (0.5 * t).sin(), 0.2 * (0.3 * t).cos(), 1.5], 0.0)
        };
        let span = (0.0, 6.0);
        let samples = 4;
        let times: Vec<f64> = (0..samples)
            .map(|i| span.0 + (span.1 - span.0) * i as f64 / (samples - 1) as f64)
            .collect();
        let finest = integrate_fixed(&psi0, &k_of_t, span, &times, 3072).unwrap();
        let err_of = |steps: usize| -> f64 {
            let approx = integrate_fixed(&psi0, &k_of_t, span, &times, steps).unwrap();
            approx
                .iter()
                .zip(finest.iter())
                .map(|(a, b)| {
                    a.amplitudes()
                        .iter()
                        .zip(b.amplitudes().iter())
                        .map(|(x, y)| (x - y).norm_sqr())
                        .sum::<f64>()
                        .sqrt()
                })
                .fold(0.0, f64::max)
        };
        let e1 = err_of(48);
        let e2 = err_of(96);
        let order = (e1 / e2).log2();
        assert!(order > 1.8, "observed order {order:.2}");
    }

    #[test]
    fn timedep_interval_drift_is_floating_point_only() {
        let psi0 = state(&[c(0.9, 0.0), c(0.1, 0.3)]);
        let k_of_t =
            |t: f64| BdgGenerator::from_m_coeffs([0.4 * (t).cos(), 0.4 * (t).sin(), 1.4], 0.0);
        let trace = evolve_timedep(&psi0, k_of_t, (0.0, 10.0), 21, StepControl::default()).unwrap();
        assert!(trace.max_interval_drift() <= 1e-11);
        assert!(trace.error_estimate.unwrap() <= 1e-8);
    }

    #[test]
    fn heisenberg_fixed_points() {
        let k = BdgGenerator::from_m_coeffs([0.5, 0.2, 1.4], 0.3);
        let o_k = heisenberg_evolve(k.matrix(), &k, 1.7).unwrap();
        assert!(linalg::frobenius(&(&o_k - k.matrix())) <= 1e-11);
        let eye = linalg::identity(2);
        let o_i = heisenberg_evolve(&eye, &k, 1.7).unwrap();
        assert!(linalg::frobenius(&(&o_i - &eye)) <= 1e-11);
    }

    #[test]
    fn heisenberg_similarity_preserves_spectrum() {
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let k = BdgGenerator::from_m_coeffs([0.6, -0.3, 1.5], 0.0);
        let o = CMatrix::from_shape_fn((2, 2), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let oh = heisenberg_evolve(&o, &k, 2.1).unwrap();
        let (before, _) = o.eig().unwrap();
        let (after, _) = oh.eig().unwrap();
        let mut b: Vec<Complex64> = before.to_vec();
        let mut a: Vec<Complex64> = after.to_vec();
        b.sort_by(|p, q| (p.re, p.im).partial_cmp(&(q.re, q.im)).unwrap());
        a.sort_by(|p, q| (p.re, p.im).partial_cmp(&(q.re, q.im)).unwrap());
        for (x, y) in b.iter().zip(a.iter()) {
            assert!((x - y).norm() <= 1e-9);
        }
    }

    #[test]
    fn heisenberg_equation_residual() {
        // Finite-difference check of i dO_h/dt = [O_h, K], the equation the
        // definition O_h = e^{iKt} O e^{-iKt} actually satisfies.
        let k = BdgGenerator::from_m_coeffs([0.4, 0.1, 1.2], 0.2);
        let o = ndarray::array![[c(0.3, 0.0), c(0.2, 0.5)], [c(0.2, -0.5), c(-0.7, 0.0)]];
        let t = 1.1;
        let dt = 1e-5;
        let plus = heisenberg_evolve(&o, &k, t + dt).unwrap();
        let minus = heisenberg_evolve(&o, &k, t - dt).unwrap();
        let derivative = (&plus - &minus).mapv(|z| z / c(2.0 * dt, 0.0));
        let oh = heisenberg_evolve(&o, &k, t).unwrap();
        let commutator = oh.dot(k.matrix()) - k.matrix().dot(&oh);
        let residual = linalg::frobenius(
            &(derivative.mapv(|z| z * c(0.0, 1.0)) - commutator),
        );
        let scale = linalg::frobenius(k.matrix()) * linalg::frobenius(&o);
        assert!(residual <= 1e-6 * scale, "residual {residual:.3e}");
    }

    #[test]
    fn schroedinger_heisenberg_consistency() {
        // <psi_h| sigma O_h |psi_h> = <psi(t)| sigma O |psi(t)> with
        // |psi_h> = e^{iKt} |psi(t)>.
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let metric = MinkowskiMetric::one_one();
        for _ in 0..50 {
            let k = BdgGenerator::from_m_coeffs(
                [rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), 1.5],
                rng.gen_range(-0.5..0.5),
            );
            let o = CMatrix::from_shape_fn((2, 2), |_| {
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
            });
            let psi0 = state(&[
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
                c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            ]);
            let t = rng.gen_range(0.0..4.0);
            let psi_t = propagator(&k, t).unwrap().apply(&psi0).unwrap();
            let psi_h = propagator(&k, -t).unwrap().apply(&psi_t).unwrap();
            let oh = heisenberg_evolve(&o, &k, t).unwrap();

            let lhs_state =
                SpinorState::new(oh.dot(psi_h.amplitudes()), metric).unwrap();
            let lhs = sigma_inner(&psi_h, &lhs_state).unwrap();
            let rhs_state = SpinorState::new(o.dot(psi_t.amplitudes()), metric).unwrap();
            let rhs = sigma_inner(&psi_t, &rhs_state).unwrap();
            assert!((lhs - rhs).norm() <= 1e-9);
        }
    }
}
