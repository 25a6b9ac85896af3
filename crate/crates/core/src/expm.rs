//! Dense complex matrix exponential by scaling and squaring.
//!
//! Pade approximants of orders 3/5/7/9/13 selected from the 1-norm of the
//! input, with the order-13 branch scaling by a power of two first. The
//! generator `sigma H` is non-normal, so eigendecomposition-based
//! exponentials are ill-conditioned near the degeneracy cone; this route is
//! backward stable regardless.

use crate::error::{Error, Result};
use crate::{linalg, CMatrix};
use ndarray_linalg::{Factorize, Solve};
use num_complex::Complex64;

const THETA_3: f64 = 1.495585217958292e-2;
const THETA_5: f64 = 2.539398330063230e-1;
const THETA_7: f64 = 9.504178996162932e-1;
const THETA_9: f64 = 2.097847961257068e0;
const THETA_13: f64 = 5.371920351148152e0;

const B3: [f64; 4] = [120.0, 60.0, 12.0, 1.0];
const B5: [f64; 6] = [30240.0, 15120.0, 3360.0, 420.0, 30.0, 1.0];
const B7: [f64; 8] = [
    17297280.0, 8648640.0, 1995840.0, 277200.0, 25200.0, 1512.0, 56.0, 1.0,
];
const B9: [f64; 10] = [
    17643225600.0,
    8821612800.0,
    2075673600.0,
    302702400.0,
    30270240.0,
    2162160.0,
    110880.0,
    3960.0,
    90.0,
    1.0,
];
const B13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Solves (V - U) X = (V + U), the final rational step of the approximant.
fn pade_solve(u: &CMatrix, v: &CMatrix) -> Result<CMatrix> {
    let lhs = v - u;
    let rhs = v + u;
    let lu = lhs
        .factorize()
        .map_err(|e| Error::Eigensolver(format!("expm LU factorization failed: {e}")))?;
    let d = rhs.nrows();
    let mut out = CMatrix::zeros((d, d));
    for j in 0..d {
        let col = rhs.column(j).to_owned();
        let x = lu
            .solve(&col)
            .map_err(|e| Error::Eigensolver(format!("expm solve failed: {e}")))?;
        out.column_mut(j).assign(&x);
    }
    Ok(out)
}

/// Evaluates the order-m approximant (m in {3,5,7,9}) from even powers.
fn pade_low(a: &CMatrix, coeffs: &[f64]) -> Result<CMatrix> {
    let d = a.nrows();
    let eye = linalg::identity(d);
    let a2 = a.dot(a);
    // Even powers a^0, a^2, a^4, ... as needed.
    let mut powers = vec![eye.clone()];
    let half = coeffs.len() / 2;
    for _ in 1..half {
        let last = powers.last().unwrap();
        powers.push(last.dot(&a2));
    }
    let mut u_inner = CMatrix::zeros((d, d));
    let mut v = CMatrix::zeros((d, d));
    for (k, p) in powers.iter().enumerate() {
        u_inner = u_inner + p.mapv(|z| z * re(coeffs[2 * k + 1]));
        v = v + p.mapv(|z| z * re(coeffs[2 * k]));
    }
    let u = a.dot(&u_inner);
    pade_solve(&u, &v)
}

fn pade_13(a: &CMatrix) -> Result<CMatrix> {
    let d = a.nrows();
    let eye = linalg::identity(d);
    let a2 = a.dot(a);
    let a4 = a2.dot(&a2);
    let a6 = a4.dot(&a2);
    let b = &B13;
    let u_high = a6.dot(
        &(a6.mapv(|z| z * re(b[13])) + a4.mapv(|z| z * re(b[11])) + a2.mapv(|z| z * re(b[9]))),
    );
    let u_low = a6.mapv(|z| z * re(b[7]))
        + a4.mapv(|z| z * re(b[5]))
        + a2.mapv(|z| z * re(b[3]))
        + eye.mapv(|z| z * re(b[1]));
    let u = a.dot(&(u_high + u_low));
    let v_high = a6.dot(
        &(a6.mapv(|z| z * re(b[12])) + a4.mapv(|z| z * re(b[10])) + a2.mapv(|z| z * re(b[8]))),
    );
    let v = v_high
        + a6.mapv(|z| z * re(b[6]))
        + a4.mapv(|z| z * re(b[4]))
        + a2.mapv(|z| z * re(b[2]))
        + eye.mapv(|z| z * re(b[0]));
    pade_solve(&u, &v)
}

/// Matrix exponential `exp(A)` for a square complex matrix.
pub fn expm(a: &CMatrix) -> Result<CMatrix> {
    if a.nrows() != a.ncols() {
        return Err(Error::DimensionMismatch {
            expected: a.nrows(),
            got: a.ncols(),
        });
    }
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidParameter("expm input is not finite".into()));
    }
    let norm = linalg::one_norm(a);
    if norm <= THETA_3 {
        return pade_low(a, &B3);
    }
    if norm <= THETA_5 {
        return pade_low(a, &B5);
    }
    if norm <= THETA_7 {
        return pade_low(a, &B7);
    }
    if norm <= THETA_9 {
        return pade_low(a, &B9);
    }
    let squarings = if norm <= THETA_13 {
        0
    } else {
        (norm / THETA_13).log2().ceil() as u32
    };
    let scaled = a.mapv(|z| z / re(2f64.powi(squarings as i32)));
    let mut result = pade_13(&scaled)?;
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    /// Plain Taylor series with term-size stopping; independent oracle. Also
    /// returns the largest intermediate term norm, which bounds the oracle's
    /// own cancellation error.
    fn expm_taylor(a: &CMatrix) -> (CMatrix, f64) {
        let d = a.nrows();
        let mut term = linalg::identity(d);
        let mut sum = term.clone();
        let mut max_term = 1.0_f64;
        for k in 1..400 {
            term = term.dot(a).mapv(|z| z / c(k as f64, 0.0));
            sum = sum + term.clone();
            max_term = max_term.max(linalg::frobenius(&term));
            if linalg::frobenius(&term) < 1e-18 * linalg::frobenius(&sum).max(1.0) {
                break;
            }
        }
        (sum, max_term)
    }

    #[test]
    fn exp_of_zero_is_identity() {
        let a = CMatrix::zeros((3, 3));
        let e = expm(&a).unwrap();
        assert!(linalg::frobenius(&(&e - &linalg::identity(3))) < 1e-15);
    }

    #[test]
    fn exp_of_diagonal() {
        let a = CMatrix::from_diag(&ndarray::array![c(0.3, -1.0), c(-2.0, 0.5)]);
        let e = expm(&a).unwrap();
        assert!((e[[0, 0]] - c(0.3, -1.0).exp()).norm() < 1e-14);
        assert!((e[[1, 1]] - c(-2.0, 0.5).exp()).norm() < 1e-13);
        assert!(e[[0, 1]].norm() < 1e-16);
    }

    #[test]
    fn exp_of_nilpotent() {
        let a = ndarray::array![[c(0.0, 0.0), c(1.0, 0.0)], [c(0.0, 0.0), c(0.0, 0.0)]];
        let e = expm(&a).unwrap();
        assert!((e[[0, 1]] - c(1.0, 0.0)).norm() < 1e-15);
        assert!((e[[0, 0]] - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn matches_taylor_oracle_across_norm_scales() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for &scale in &[0.01, 0.2, 0.8, 1.8, 5.0, 20.0] {
            for d in [2usize, 3, 5] {
                let a = CMatrix::from_shape_fn((d, d), |_| {
                    c(
                        scale * rng.gen_range(-1.0..1.0),
                        scale * rng.gen_range(-1.0..1.0),
                    )
                });
                let e = expm(&a).unwrap();
                let (t, max_term) = expm_taylor(&a);
                let result_norm = linalg::frobenius(&t);
                let rel = linalg::frobenius(&(&e - &t)) / result_norm;
                // The oracle cancels catastrophically at large norms; allow
                // for its own rounding floor.
                let tol = 1e-13 * (1.0 + max_term / result_norm);
                assert!(
                    rel < tol.max(1e-13),
                    "scale {scale} dim {d}: rel err {rel:.3e} vs tol {tol:.3e}"
                );
            }
        }
    }

    #[test]
    fn group_inverse_property() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let a = CMatrix::from_shape_fn((4, 4), |_| {
            c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
        });
        let e = expm(&a).unwrap();
        let e_neg = expm(&a.mapv(|z| -z)).unwrap();
        let prod = e.dot(&e_neg);
        assert!(linalg::frobenius(&(&prod - &linalg::identity(4))) < 1e-12);
    }

    #[test]
    fn rejects_non_square_and_non_finite() {
        let a = CMatrix::zeros((2, 3));
        assert!(expm(&a).is_err());
        let mut b = CMatrix::zeros((2, 2));
        b[[0, 0]] = c(f64::NAN, 0.0);
        assert!(expm(&b).is_err());
    }
}
