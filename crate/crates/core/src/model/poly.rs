//! Polynomial roots through companion-matrix eigenvalues.

use faer::Mat;
use num_complex::Complex64;

use crate::error::{Error, Result};

/// Evaluates a polynomial with coefficients ordered from the highest power.
pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().fold(0.0, |acc, &c| acc * x + c)
}

fn eval_with_derivative(coeffs: &[f64], x: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(0.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for &c in coeffs {
        dp = dp * x + p;
        p = p * x + c;
    }
    (p, dp)
}

/// All complex roots of `coeffs` (highest power first).
///
/// Leading zeros are stripped. Each eigenvalue of the companion matrix is
/// polished with a few Newton steps on the original polynomial.
pub fn roots(coeffs: &[f64]) -> Result<Vec<Complex64>> {
    let start = coeffs.iter().position(|c| *c != 0.0).unwrap_or(coeffs.len());
    let coeffs = &coeffs[start..];
    let degree = coeffs.len().saturating_sub(1);
    if degree == 0 {
        return Ok(Vec::new());
    }
    let lead = coeffs[0];
    let companion = Mat::<f64>::from_fn(degree, degree, |i, j| {
        if i == 0 {
            -coeffs[j + 1] / lead
        } else if i == j + 1 {
            1.0
        } else {
            0.0
        }
    });
    let eigs = companion.eigenvalues().map_err(|e| Error::EigenFailure(format!("companion matrix: {e:?}")))?;
    Ok(eigs
        .into_iter()
        .map(|z| {
            let mut z = Complex64::new(z.re, z.im);
            for _ in 0..4 {
                let (p, dp) = eval_with_derivative(coeffs, z);
                if dp.norm() == 0.0 {
                    break;
                }
                let step = p / dp;
                if !step.re.is_finite() || !step.im.is_finite() {
                    break;
                }
                let next = z - step;
                if eval_with_derivative(coeffs, next).0.norm() >= p.norm() {
                    break;
                }
                z = next;
            }
            z
        })
        .collect())
}

/// Real roots of `coeffs`: complex roots whose imaginary part is below
/// `imag_tol·(1 + |re|)` are projected onto the real axis and polished.
pub fn real_roots(coeffs: &[f64], imag_tol: f64) -> Result<Vec<f64>> {
    let mut out: Vec<f64> = roots(coeffs)?
        .into_iter()
        .filter(|z| z.im.abs() <= imag_tol * (1.0 + z.re.abs()))
        .map(|z| polish_real(coeffs, z.re))
        .collect();
    out.sort_by(f64::total_cmp);
    Ok(out)
}

fn polish_real(coeffs: &[f64], mut x: f64) -> f64 {
    for _ in 0..8 {
        let (p, dp) = eval_with_derivative(coeffs, Complex64::new(x, 0.0));
        if dp.re == 0.0 {
            break;
        }
        let next = x - p.re / dp.re;
        if !next.is_finite() || eval(coeffs, next).abs() >= p.re.abs() {
            break;
        }
        x = next;
    }
    x
}
