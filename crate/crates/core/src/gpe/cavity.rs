use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpe::grid::{absorbing_mask, SimGrid};
use crate::model::{equation_of_state_roots, DefectPotential, PolaritonParams, PumpProfile};
use crate::C64;

/// Absorbing layers at both box edges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Absorber {
    /// Width of each layer [μm].
    pub margin: f64,
    /// Peak extra loss at the edge [1/ps].
    pub strength: f64,
}

/// Everything that defines the pumped wire: grid, material, pump, defect and
/// boundary layers.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cavity {
    pub grid: SimGrid,
    pub params: PolaritonParams,
    pub pump: PumpProfile,
    pub defect: Option<DefectPotential>,
    pub absorber: Absorber,
}

impl Cavity {
    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        self.pump.validate()?;
        if let Some(d) = &self.defect {
            d.validate()?;
        }
        self.grid.check_stability(self.params.hbar_over_m())?;
        absorbing_mask(&self.grid, self.absorber.margin, self.absorber.strength)?;
        Ok(())
    }

    /// External potential V(x)/ħ [1/ps].
    pub fn potential(&self) -> Vec<f64> {
        let xs = self.grid.xs();
        match &self.defect {
            Some(d) => xs.iter().map(|&x| d.rate_at(x)).collect(),
            None => vec![0.0; xs.len()],
        }
    }

    pub fn pump_field(&self) -> Vec<C64> {
        self.grid.xs().iter().map(|&x| self.pump.at(x)).collect()
    }

    pub fn mask(&self) -> Vec<f64> {
        absorbing_mask(&self.grid, self.absorber.margin, self.absorber.strength)
            .expect("absorber validated with the cavity")
    }

    /// Field the absorbing layers relax toward: the homogeneous upstream
    /// solution in the inflow layer and zero in the outflow layer. Relaxing the
    /// inflow edge to zero would launch a switching front into the upper-branch
    /// plateau.
    pub fn relax_target(&self) -> Vec<C64> {
        let inflow = self.upstream_solution();
        let mid = self.grid.x0 + 0.5 * self.grid.length;
        self.grid
            .xs()
            .iter()
            .map(|&x| if x < mid { inflow * C64::from_polar(1.0, self.pump.k_up * x) } else { C64::new(0.0, 0.0) })
            .collect()
    }

    /// Upper-branch density of a homogeneous pump of amplitude `f` and
    /// wavevector `k`, if any drive is applied.
    pub fn upper_branch_density(&self, f: f64, k: f64) -> f64 {
        let v = self.params.velocity_of(k);
        *equation_of_state_roots(f, v, &self.params).last().unwrap_or(&0.0)
    }

    /// Complex amplitude A of the homogeneous solution A e^{ikx} on the upper
    /// branch for pump amplitude `f`: A = −F / (g n − δ_eff − iγ/2).
    pub fn homogeneous_amplitude(&self, f: f64, k: f64) -> C64 {
        if f == 0.0 {
            return C64::new(0.0, 0.0);
        }
        let n = self.upper_branch_density(f, k);
        let delta = self.params.delta_eff(self.params.velocity_of(k));
        -f / C64::new(self.params.g() * n - delta, -0.5 * self.params.gamma())
    }

    pub fn upstream_solution(&self) -> C64 {
        self.homogeneous_amplitude(self.pump.f_up, self.pump.k_up)
    }

    /// Seed field: each pump region on its own upper-branch solution, blended
    /// with the pump's crossover profile.
    pub fn initial_field(&self) -> Vec<C64> {
        let up = self.upstream_solution();
        let down = self.homogeneous_amplitude(self.pump.f_down, self.pump.k_down);
        let p = &self.pump;
        self.grid
            .xs()
            .iter()
            .map(|&x| {
                let s = p.upstream_weight(x);
                let down_phase = p.k_down * (x - p.x_switch) + p.k_up * p.x_switch;
                up * C64::from_polar(s, p.k_up * x) + down * C64::from_polar(1.0 - s, down_phase)
            })
            .collect()
    }

    /// Characteristic density [1/μm] used for blow-up detection and noise
    /// scaling: the larger of the two plateau densities.
    pub fn density_scale(&self) -> f64 {
        let up = self.upper_branch_density(self.pump.f_up, self.pump.k_up);
        let down = if self.pump.f_down > 0.0 { self.upper_branch_density(self.pump.f_down, self.pump.k_down) } else { 0.0 };
        // Unpumped cavities fall back to the density where g n equals the detuning.
        let natural = (self.params.detuning() / self.params.g()).abs();
        if up.max(down) > 0.0 { up.max(down) } else { natural }
    }

    /// Positions between the absorbing layers [μm].
    pub fn interior(&self) -> (f64, f64) {
        let g = &self.grid;
        (g.x0 + self.absorber.margin, g.x0 + g.length - self.absorber.margin)
    }

    /// Same cavity with the defect removed.
    pub fn without_defect(&self) -> Self {
        Cavity { defect: None, ..self.clone() }
    }

    pub(crate) fn require_pumped(&self) -> Result<()> {
        if self.pump.f_up <= 0.0 {
            return Err(Error::validation("pump.f_up", "upstream pump must be switched on"));
        }
        Ok(())
    }
}

#[cfg(test)]
pub(crate) mod fixtures {
    use super::*;
    use crate::model::params::reference_params;

    /// Reference wire on a reduced grid, cheap enough for unit tests.
    pub fn small_cavity(n_points: usize, supported: bool) -> Cavity {
        let params = reference_params();
        let length = 800.0;
        let dx = length / n_points as f64;
        let dt = 0.8 * crate::gpe::grid::stability_bound(dx, params.hbar_over_m());
        let pump =
            PumpProfile::calibrated(&params, 0.27, 0.539, 393.0, 1.0, 8e-4, supported.then_some(8e-4)).unwrap();
        Cavity {
            grid: SimGrid::new(n_points, length, 0.0, dt).unwrap(),
            params,
            pump,
            defect: Some(DefectPotential { depth: -0.85, width: 0.75, center: 400.0 }),
            absorber: Absorber { margin: 40.0, strength: 1.0 },
        }
    }
}
