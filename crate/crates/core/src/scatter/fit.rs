use std::f64::consts::PI;

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Transmission samples to fit.
#[derive(Clone, Copy, Debug)]
pub enum Transmission<'a> {
    /// Complex amplitude t(ω).
    Complex(&'a [C64]),
    /// |t(ω)| only; the fit then runs on |t|².
    Magnitude(&'a [f64]),
}

impl Transmission<'_> {
    fn len(&self) -> usize {
        match self {
            Transmission::Complex(t) => t.len(),
            Transmission::Magnitude(t) => t.len(),
        }
    }

    fn magnitude(&self, i: usize) -> f64 {
        match self {
            Transmission::Complex(t) => t[i].norm(),
            Transmission::Magnitude(t) => t[i],
        }
    }
}

/// t(ω) ≃ t_bg + α/(ω − Ω + iΓ/2).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BreitWignerFit {
    /// Resonance frequency [1/ps].
    pub omega_qnm: f64,
    /// Full linewidth [1/ps].
    pub gamma_qnm: f64,
    pub t_bg: C64,
    pub alpha: C64,
    /// ‖model − data‖/‖data‖ on the fitted quantity (t or |t|²).
    pub residual: f64,
    /// One-sigma errors from the Gauss-Newton covariance, in parameter order
    /// (Ω, Γ, then background and residue components).
    pub std_errors: Vec<f64>,
    /// Correlation between the Ω and Γ estimates.
    pub omega_gamma_correlation: f64,
    /// Unwrapped phase change of the resonant term across Ω ± 5Γ.
    pub phase_slip: f64,
    pub phase_slip_ok: bool,
    pub iterations: usize,
    pub magnitude_only: bool,
}

impl BreitWignerFit {
    pub fn evaluate(&self, omega: f64) -> C64 {
        self.t_bg + self.alpha / C64::new(omega - self.omega_qnm, 0.5 * self.gamma_qnm)
    }
}

const MIN_SAMPLES: usize = 8;
const MAX_ITERATIONS: usize = 500;

fn model(p: &[f64], omega: f64, magnitude_only: bool) -> C64 {
    let (bg, alpha) = if magnitude_only {
        (C64::new(p[2], 0.0), C64::new(p[3], p[4]))
    } else {
        (C64::new(p[2], p[3]), C64::new(p[4], p[5]))
    };
    bg + alpha / C64::new(omega - p[0], 0.5 * p[1])
}

fn residuals(p: &[f64], omegas: &[f64], data: &Transmission) -> Vec<f64> {
    match data {
        Transmission::Complex(t) => omegas
            .iter()
            .zip(t.iter())
            .flat_map(|(&w, z)| {
                let d = model(p, w, false) - z;
                [d.re, d.im]
            })
            .collect(),
        Transmission::Magnitude(t) => {
            omegas.iter().zip(t.iter()).map(|(&w, m)| model(p, w, true).norm_sqr() - m * m).collect()
        }
    }
}

fn cost(r: &[f64]) -> f64 {
    0.5 * r.iter().map(|x| x * x).sum::<f64>()
}

fn jacobian(p: &[f64], omegas: &[f64], data: &Transmission, scales: &[f64]) -> Mat<f64> {
    let m = residuals(p, omegas, data).len();
    let mut j = Mat::<f64>::zeros(m, p.len());
    for c in 0..p.len() {
        let h = 1e-7 * scales[c];
        let mut up = p.to_vec();
        let mut dn = p.to_vec();
        up[c] += h;
        dn[c] -= h;
        let (ru, rd) = (residuals(&up, omegas, data), residuals(&dn, omegas, data));
        for r in 0..m {
            j[(r, c)] = (ru[r] - rd[r]) / (2.0 * h);
        }
    }
    j
}

/// Half-maximum width of |t|² above its smallest value, from the samples.
fn width_estimate(omegas: &[f64], power: &[f64], peak: usize) -> Option<f64> {
    let floor = power.iter().copied().fold(f64::INFINITY, f64::min);
    let half = 0.5 * (power[peak] + floor);
    let cross = |range: &mut dyn Iterator<Item = usize>| -> Option<f64> {
        let mut prev = peak;
        for i in range {
            if power[i] <= half {
                let f = (power[prev] - half) / (power[prev] - power[i]);
                return Some(omegas[prev] + f * (omegas[i] - omegas[prev]));
            }
            prev = i;
        }
        None
    };
    let left = cross(&mut (0..peak).rev());
    let right = cross(&mut (peak + 1..omegas.len()));
    match (left, right) {
        (Some(l), Some(r)) => Some(r - l),
        (Some(l), None) => Some(2.0 * (omegas[peak] - l)),
        (None, Some(r)) => Some(2.0 * (r - omegas[peak])),
        (None, None) => None,
    }
}

/// Index of the interior local maximum with the largest topographic
/// prominence, or the global maximum when the samples have no interior peak.
/// A maximum sitting on the end of a rising background is not a resonance.
pub fn prominent_peak(values: &[f64]) -> Option<usize> {
    let n = values.len();
    let prominence = |i: usize| {
        let base = |range: &mut dyn Iterator<Item = usize>| {
            let mut low = values[i];
            for j in range {
                if values[j] > values[i] {
                    break;
                }
                low = low.min(values[j]);
            }
            low
        };
        values[i] - base(&mut (0..i).rev()).max(base(&mut (i + 1..n)))
    };
    (1..n.saturating_sub(1))
        .filter(|&i| values[i] >= values[i - 1] && values[i] > values[i + 1])
        .max_by(|&a, &b| prominence(a).total_cmp(&prominence(b)))
        .or_else(|| (0..n).max_by(|&a, &b| values[a].total_cmp(&values[b])))
}

fn median_spacing(omegas: &[f64]) -> f64 {
    let mut d: Vec<f64> = omegas.windows(2).map(|w| w[1] - w[0]).collect();
    d.sort_by(f64::total_cmp);
    d[d.len() / 2]
}

/// Levenberg-Marquardt fit of a single Breit-Wigner resonance on a
/// background. Complex data fit (Ω, Γ, t_bg, α); magnitudes fit |t|² with a
/// real background, since a common phase drops out.
pub fn breit_wigner_fit(omegas: &[f64], data: Transmission) -> Result<BreitWignerFit> {
    let n = omegas.len();
    if n != data.len() {
        return Err(Error::InvalidInput(format!("{} frequencies but {} samples", n, data.len())));
    }
    if n < MIN_SAMPLES {
        return Err(Error::InvalidInput(format!("need at least {MIN_SAMPLES} samples, got {n}")));
    }
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("omegas", "must be strictly increasing"));
    }
    let magnitude_only = matches!(data, Transmission::Magnitude(_));
    let spacing = median_spacing(omegas);
    let power: Vec<f64> = (0..n).map(|i| data.magnitude(i).powi(2)).collect();
    let peak = prominent_peak(&power).unwrap();
    let gamma0 = width_estimate(omegas, &power, peak).unwrap_or(3.0 * spacing);
    if gamma0 < 2.0 * spacing {
        return Err(Error::PeakNotResolved { linewidth: gamma0, spacing });
    }
    let omega0 = omegas[peak];

    let mut p: Vec<f64> = match data {
        Transmission::Magnitude(t) => {
            let floor = t.iter().copied().fold(f64::INFINITY, f64::min);
            let a = C64::new(0.0, 0.5 * gamma0) * (t[peak] - floor);
            vec![omega0, gamma0, floor, a.re, a.im]
        }
        Transmission::Complex(t) => {
            let bg = 0.5 * (t[0] + t[n - 1]);
            let a = (t[peak] - bg) * C64::new(0.0, 0.5 * gamma0);
            vec![omega0, gamma0, bg.re, bg.im, a.re, a.im]
        }
    };
    let amp = (0..n).map(|i| data.magnitude(i)).fold(0.0, f64::max).max(1e-300);
    let scales: Vec<f64> =
        (0..p.len()).map(|c| if c < 2 { gamma0 } else if c < p.len() - 2 { amp } else { amp * gamma0 }).collect();

    let mut r = residuals(&p, omegas, &data);
    let mut c = cost(&r);
    let mut lambda = 1e-3;
    let mut iterations = 0;
    let mut converged = false;
    while iterations < MAX_ITERATIONS {
        iterations += 1;
        let j = jacobian(&p, omegas, &data, &scales);
        let jtj = j.transpose() * &j;
        let mut g = Mat::<f64>::zeros(p.len(), 1);
        for col in 0..p.len() {
            g[(col, 0)] = -(0..r.len()).map(|row| j[(row, col)] * r[row]).sum::<f64>();
        }
        let mut improved = false;
        while lambda < 1e14 {
            let mut a = jtj.clone();
            for d in 0..p.len() {
                a[(d, d)] += lambda * jtj[(d, d)].max(1e-30);
            }
            let step = a.partial_piv_lu().solve(&g);
            let trial: Vec<f64> = p.iter().enumerate().map(|(i, x)| x + step[(i, 0)]).collect();
            if trial.iter().all(|x| x.is_finite()) && trial[1] > 0.0 {
                let rt = residuals(&trial, omegas, &data);
                let ct = cost(&rt);
                if ct < c {
                    let small_step = (0..p.len()).all(|i| step[(i, 0)].abs() <= 1e-10 * scales[i]);
                    let small_gain = c - ct <= 1e-14 * c;
                    p = trial;
                    r = rt;
                    c = ct;
                    lambda = (lambda / 3.0).max(1e-12);
                    improved = true;
                    converged = small_step || small_gain;
                    break;
                }
            }
            lambda *= 4.0;
        }
        if !improved {
            // No downhill step at any damping: a stationary point.
            converged = true;
        }
        if converged {
            break;
        }
    }
    let (omega_qnm, gamma_qnm) = (p[0], p[1]);
    if !converged || !(gamma_qnm > 0.0) || !p.iter().all(|x| x.is_finite()) {
        return Err(Error::FitDiverged(format!("after {iterations} iterations: Ω = {omega_qnm:.4e}, Γ = {gamma_qnm:.4e}")));
    }
    if omega_qnm < omegas[0] || omega_qnm > omegas[n - 1] {
        return Err(Error::FitDiverged(format!("resonance at {omega_qnm:.4e} left the sampled band")));
    }
    if gamma_qnm < 2.0 * spacing {
        return Err(Error::PeakNotResolved { linewidth: gamma_qnm, spacing });
    }

    let target: f64 = match data {
        Transmission::Complex(t) => t.iter().map(|z| z.norm_sqr()).sum(),
        Transmission::Magnitude(t) => t.iter().map(|m| m.powi(4)).sum(),
    };
    let residual = (2.0 * c / target).sqrt();
    let j = jacobian(&p, omegas, &data, &scales);
    let dof = (r.len() as f64 - p.len() as f64).max(1.0);
    let cov = (j.transpose() * &j).partial_piv_lu().inverse() * (2.0 * c / dof);
    let std_errors: Vec<f64> = (0..p.len()).map(|i| cov[(i, i)].abs().sqrt()).collect();
    let omega_gamma_correlation = cov[(0, 1)] / (std_errors[0] * std_errors[1]).max(1e-300);

    let (t_bg, alpha) = if magnitude_only {
        (C64::new(p[2], 0.0), C64::new(p[3], p[4]))
    } else {
        (C64::new(p[2], p[3]), C64::new(p[4], p[5]))
    };
    let phase_slip = resonant_phase_change(omega_qnm, gamma_qnm);
    Ok(BreitWignerFit {
        omega_qnm,
        gamma_qnm,
        t_bg,
        alpha,
        residual,
        std_errors,
        omega_gamma_correlation,
        phase_slip,
        phase_slip_ok: (phase_slip.abs() - PI).abs() < 0.1 * PI,
        iterations,
        magnitude_only,
    })
}

/// Unwrapped change of arg 1/(ω − Ω + iΓ/2) from Ω − 5Γ to Ω + 5Γ.
fn resonant_phase_change(omega: f64, gamma: f64) -> f64 {
    let samples = 400;
    let mut total = 0.0;
    let mut prev = (1.0 / C64::new(-5.0 * gamma, 0.5 * gamma)).arg();
    for i in 1..=samples {
        let w = omega - 5.0 * gamma + 10.0 * gamma * i as f64 / samples as f64;
        let a = (1.0 / C64::new(w - omega, 0.5 * gamma)).arg();
        let mut d = a - prev;
        d -= 2.0 * PI * (d / (2.0 * PI)).round();
        total += d;
        prev = a;
    }
    total
}
