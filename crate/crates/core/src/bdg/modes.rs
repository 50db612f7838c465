use serde::{Deserialize, Serialize};

use crate::bdg::operator::BdgOperator;
use crate::error::{Error, Result};
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NormClass {
    Positive,
    Negative,
    Zero,
}

impl NormClass {
    pub fn as_str(self) -> &'static str {
        match self {
            NormClass::Positive => "positive",
            NormClass::Negative => "negative",
            NormClass::Zero => "zero",
        }
    }
}

/// One eigenpair, normalised to ∫(|u|² + |v|²)dx = 1.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BdgMode {
    /// Eigenfrequency without the factored loss [1/ps].
    pub omega: C64,
    pub u: Vec<C64>,
    pub v: Vec<C64>,
    /// ∫(|u|² − |v|²)dx, on the unit-weight normalisation.
    pub norm: f64,
    /// Participation-ratio length (∫ρ)²/∫ρ² of ρ = |u|² + |v|² [μm].
    pub localization: f64,
    /// Peak of the 25-point moving average of ρ [μm].
    pub center: f64,
    pub classification: NormClass,
    /// Index of the (ω, −ω*) particle-hole partner in the sorted list.
    pub partner: Option<usize>,
}

const SMOOTHING_POINTS: usize = 25;

impl BdgMode {
    fn from_vector(omega: C64, column: &[C64], n: usize, dx: f64, x0: f64, zero_tol: f64) -> Self {
        let weight: f64 = column.iter().map(|z| z.norm_sqr()).sum::<f64>() * dx;
        let scale = 1.0 / weight.sqrt();
        let u: Vec<C64> = column[..n].iter().map(|z| z * scale).collect();
        let v: Vec<C64> = column[n..].iter().map(|z| z * scale).collect();
        let density: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a.norm_sqr() + b.norm_sqr()).collect();
        let norm = u.iter().zip(&v).map(|(a, b)| a.norm_sqr() - b.norm_sqr()).sum::<f64>() * dx;
        let localization = 1.0 / (density.iter().map(|r| r * r).sum::<f64>() * dx);
        let classification = if norm.abs() < zero_tol {
            NormClass::Zero
        } else if norm > 0.0 {
            NormClass::Positive
        } else {
            NormClass::Negative
        };
        let center = x0 + smoothed_peak(&density) as f64 * dx;
        BdgMode { omega, u, v, norm, localization, center, classification, partner: None }
    }

    /// Total linewidth once the factored loss γ is restored: γ − 2 Im ω.
    pub fn linewidth(&self, gamma: f64) -> f64 {
        gamma - 2.0 * self.omega.im
    }
}

/// Index of the maximum of a periodic moving average.
fn smoothed_peak(density: &[f64]) -> usize {
    let n = density.len();
    let half = (SMOOTHING_POINTS / 2) as isize;
    let mut window: f64 = (-half..=half).map(|o| density[o.rem_euclid(n as isize) as usize]).sum();
    let (mut best, mut best_i) = (window, 0);
    for i in 1..n {
        window += density[(i as isize + half).rem_euclid(n as isize) as usize];
        window -= density[(i as isize - half - 1).rem_euclid(n as isize) as usize];
        if window > best {
            best = window;
            best_i = i;
        }
    }
    best_i
}

/// Full dense eigendecomposition, O((2N)³).
///
/// Modes are sorted by Re ω, classified by the sign of their Bogoliubov norm
/// (zero when |norm| < `zero_tol` on the unit-weight normalisation) and
/// matched with their (ω, −ω*) partners.
pub fn diagonalize(op: &BdgOperator, zero_tol: f64) -> Result<Vec<BdgMode>> {
    let eigen = op.matrix.eigen().map_err(|e| Error::EigenFailure(format!("{e:?}")))?;
    let values = eigen.S();
    let vectors = eigen.U();
    let dim = op.dim();
    let mut modes: Vec<BdgMode> = (0..dim)
        .map(|c| {
            let column: Vec<C64> = (0..dim).map(|r| vectors[(r, c)]).collect();
            let w = values[c];
            BdgMode::from_vector(C64::new(w.re, w.im), &column, op.n_points, op.dx, op.x0, zero_tol)
        })
        .collect();
    drop(eigen);
    modes.sort_by(|a, b| a.omega.re.total_cmp(&b.omega.re).then(a.omega.im.total_cmp(&b.omega.im)));
    match_partners(&mut modes);
    Ok(modes)
}

/// Greedy nearest-neighbour matching of ω with −ω*. A purely imaginary
/// eigenvalue is its own partner.
fn match_partners(modes: &mut [BdgMode]) {
    let targets: Vec<C64> = modes.iter().map(|m| -m.omega.conj()).collect();
    let mut taken = vec![false; modes.len()];
    for i in 0..modes.len() {
        if taken[i] {
            continue;
        }
        let best = (0..modes.len())
            .filter(|&j| !taken[j])
            .min_by(|&a, &b| (modes[a].omega - targets[i]).norm().total_cmp(&(modes[b].omega - targets[i]).norm()));
        if let Some(j) = best {
            let scale = modes[i].omega.norm().max(1e-6);
            if (modes[j].omega - targets[i]).norm() <= 1e-6 * scale {
                modes[i].partner = Some(j);
                modes[j].partner = Some(i);
                taken[i] = true;
                taken[j] = true;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bdg::operator::BdgOperator;
    use crate::model::params::reference_params;
    use crate::model::{dispersion_lab_frame, local_hydro};

    #[test]
    fn homogeneous_spectrum_reproduces_lda_dispersion() {
        let p = reference_params();
        let n = 128;
        let length = 100.0;
        let dx = length / n as f64;
        let v = 1.0;
        let dens = 1.2 * p.delta_eff(v) / p.g();
        let op = BdgOperator::from_profiles(&vec![dens; n], &vec![v; n], &vec![0.0; n], &p, dx, 0.0);
        let modes = diagonalize(&op, 1e-3).unwrap();
        assert_eq!(modes.len(), 2 * n);
        let hydro = local_hydro(dens, v, &p).unwrap();
        // Plane waves: the discrete operator acts on e^{ikx} through the
        // stencil symbols, so compare against Eq. (5) with the modified
        // wavenumbers; the stencils agree with k itself for small k.
        for j in -(n as i64) / 8..=(n as i64) / 8 {
            let k = 2.0 * std::f64::consts::PI * j as f64 / length;
            let (plus, minus) = dispersion_lab_frame(k, &hydro);
            for target in [plus, minus] {
                let nearest = modes.iter().map(|m| (m.omega - target).norm()).fold(f64::INFINITY, f64::min);
                let kh = k * dx;
                // Leading stencil truncation error is O((k dx)⁴).
                assert!(nearest <= 1e-6 * target.abs().max(1e-3) + 0.2 * kh.powi(4) * target.abs(), "k {k} target {target} off {nearest}");
            }
        }
    }

    #[test]
    fn partners_carry_opposite_norm() {
        // Inhomogeneous 128-point toy background with a well.
        let p = reference_params();
        let n = 128;
        let dx = 0.8;
        let xs: Vec<f64> = (0..n).map(|i| i as f64 * dx).collect();
        let base = 1.1 * p.delta_eff(1.0) / p.g();
        let dens: Vec<f64> = xs.iter().map(|x| base * (1.0 - 0.3 * (-(x - 50.0f64).powi(2) / 20.0).exp())).collect();
        let flux = base * 1.0;
        let vel: Vec<f64> = dens.iter().map(|d| flux / d).collect();
        let pot: Vec<f64> = xs.iter().map(|x| -0.2 * (-(x - 50.0f64).powi(2) / 4.0).exp()).collect();
        let op = BdgOperator::from_profiles(&dens, &vel, &pot, &p, dx, 0.0);
        let modes = diagonalize(&op, 1e-3).unwrap();
        let mut paired = 0;
        for (i, m) in modes.iter().enumerate() {
            if let Some(j) = m.partner {
                paired += 1;
                assert_eq!(modes[j].partner, Some(i));
                assert!((m.norm + modes[j].norm).abs() < 1e-8, "{} {}", m.norm, modes[j].norm);
            }
        }
        assert_eq!(paired, 2 * n);
    }

    #[test]
    fn smoothing_peak_wraps() {
        let mut d = vec![0.0; 64];
        d[1] = 1.0;
        d[63] = 1.0;
        let p = smoothed_peak(&d);
        assert!(p == 0 || p == 63 || p == 1);
    }
}
