use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::params::PolaritonParams;
use crate::units::gap_mass_kg;

/// Local-density description of a point of the flow.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LocalHydro {
    /// Density [1/μm].
    pub n0: f64,
    /// Flow velocity [μm/ps].
    pub v0: f64,
    /// Effective detuning δ_eff(v0) [1/ps].
    pub delta_eff: f64,
    /// Bogoliubov sound speed [μm/ps].
    pub c_b: f64,
    /// Signed squared rest gap (g n − δ)(3 g n − δ) [1/ps²]. Negative on
    /// backgrounds whose k = 0 mode is unstable in isolation.
    pub gap_sq: f64,
    /// Rest mass ħ√gap_sq / c_B² [kg], absent when `gap_sq < 0` or the fluid
    /// is at rest in sound speed.
    pub m_det: Option<f64>,
    /// ħ/m* [μm²/ps], carried for the quantum-pressure term.
    pub hbar_over_m: f64,
}

/// Local hydrodynamic quantities at density `n0` and velocity `v0`.
///
/// Fails with [`Error::GappedRegion`] when 2 g n − δ_eff < 0, where no real
/// sound speed exists.
pub fn local_hydro(n0: f64, v0: f64, params: &PolaritonParams) -> Result<LocalHydro> {
    let g = params.g();
    let hm = params.hbar_over_m();
    let delta_eff = params.delta_eff(v0);
    let stiffness = 2.0 * g * n0 - delta_eff;
    if stiffness < 0.0 {
        return Err(Error::GappedRegion { what: "sound speed", value: stiffness });
    }
    let c_b = (hm * stiffness).sqrt();
    let gap_sq = (g * n0 - delta_eff) * (3.0 * g * n0 - delta_eff);
    let m_det = (gap_sq >= 0.0 && c_b > 0.0).then(|| gap_mass_kg(gap_sq.sqrt(), c_b));
    Ok(LocalHydro { n0, v0, delta_eff, c_b, gap_sq, m_det, hbar_over_m: hm })
}

impl LocalHydro {
    /// Rest gap ω(k = 0) in the fluid frame [1/ps]; zero when `gap_sq < 0`.
    pub fn gap(&self) -> f64 {
        self.gap_sq.max(0.0).sqrt()
    }

    /// Fluid-frame Bogoliubov energy squared, (ħk²/2m)² + c²k² + M² [1/ps²].
    pub fn comoving_sq(&self, k: f64) -> f64 {
        let kinetic = 0.5 * self.hbar_over_m * k * k;
        kinetic * kinetic + self.c_b * self.c_b * k * k + self.gap_sq
    }

    /// Mach number |v0|/c_B.
    pub fn mach(&self) -> f64 {
        self.v0.abs() / self.c_b
    }
}

/// Laboratory-frame Bogoliubov branches (ω₊, ω₋) at wavevector `k` [1/ps].
///
/// The rest-gap term is M² = c_B⁴ m_det²/ħ² = (g n − δ)(3 g n − δ). Where the
/// fluid-frame radicand is negative the branches merge at the Doppler line.
pub fn dispersion_lab_frame(k: f64, hydro: &LocalHydro) -> (f64, f64) {
    let s = hydro.comoving_sq(k).max(0.0).sqrt();
    let doppler = hydro.v0 * k;
    (doppler + s, doppler - s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::params::reference_params;
    use crate::units::{mev_to_rate, rate_to_mev, HBAR_SI};
    use proptest::prelude::*;

    #[test]
    fn gapless_point_has_zero_mass() {
        let p = reference_params();
        let v = 1.0;
        let n = p.delta_eff(v) / p.g();
        let h = local_hydro(n, v, &p).unwrap();
        assert!(h.gap_sq.abs() < 1e-12);
        assert_eq!(h.m_det, Some(0.0));
    }

    #[test]
    fn negative_stiffness_is_rejected() {
        let p = reference_params();
        assert!(matches!(local_hydro(1.0, 0.0, &p), Err(Error::GappedRegion { .. })));
    }

    #[test]
    fn rest_gap_matches_homogeneous_bogoliubov_matrix() {
        // At k = 0 the comoving Bogoliubov matrix is [[a, b], [−b, −a]] with
        // a = 2gn − δ, b = gn; its eigenvalues are ±√(a² − b²).
        let p = reference_params();
        let v = p.velocity_of(0.27);
        let n = 1.2 * p.delta_eff(v) / p.g();
        let h = local_hydro(n, v, &p).unwrap();
        let a = 2.0 * p.g() * n - h.delta_eff;
        let b = p.g() * n;
        let matrix_gap = (a * a - b * b).sqrt();
        let (plus, minus) = dispersion_lab_frame(0.0, &h);
        assert!((plus - matrix_gap).abs() < 1e-12 * matrix_gap);
        assert!((minus + matrix_gap).abs() < 1e-12 * matrix_gap);
        // Mass parameter reproduces the gap through M = c²m/ħ.
        let m = h.m_det.unwrap();
        assert!((h.c_b * h.c_b * m / HBAR_SI - matrix_gap).abs() < 1e-9 * matrix_gap);
    }

    #[test]
    fn downstream_plateau_sound_speed() {
        // Density of the supported downstream plateau from the converged flow.
        let p = reference_params();
        let v = 2.08;
        let n = 386.0;
        let h = local_hydro(n, v, &p).unwrap();
        assert!((h.c_b - 0.81).abs() < 0.05 * 0.81, "c_B = {}", h.c_b);
        assert!(h.mach() > 1.0);
    }

    #[test]
    fn energy_conversion_sanity() {
        assert!((rate_to_mev(mev_to_rate(0.1)) - 0.1).abs() < 1e-15);
    }

    proptest! {
        #[test]
        fn particle_hole_symmetry_at_rest(k in -10.0f64..10.0, ratio in 0.6f64..3.0) {
            let p = reference_params();
            let n = ratio * p.delta_eff(0.0) / p.g();
            let h = local_hydro(n, 0.0, &p).unwrap();
            let (plus, _) = dispersion_lab_frame(k, &h);
            let (_, minus) = dispersion_lab_frame(-k, &h);
            prop_assert!((plus + minus).abs() <= 1e-12 * plus.abs().max(1.0));
        }

        #[test]
        fn branches_are_ordered(k in -10.0f64..10.0, ratio in 0.6f64..3.0, v in -3.0f64..3.0) {
            let p = reference_params();
            let delta = p.delta_eff(v);
            prop_assume!(delta > 0.0);
            let n = ratio * delta / p.g();
            let h = local_hydro(n, v, &p).unwrap();
            let (plus, minus) = dispersion_lab_frame(k, &h);
            prop_assert!(plus - minus >= 2.0 * h.gap() * (1.0 - 1e-12));
        }
    }
}
