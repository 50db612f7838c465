use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::eos::{bistability_turning_points, drive_intensity};
use crate::units::{hbar_over_mass, mev_to_rate};

/// Material constants of the microcavity and the pump energy.
///
/// This is the only place where energies are entered; every rate used by the
/// solvers is derived from it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolaritonParams {
    /// Effective polariton mass [kg].
    pub m_star: f64,
    /// Bare lower-polariton energy at k = 0 [meV].
    pub hbar_omega0: f64,
    /// Loss rate as an energy [μeV].
    pub hbar_gamma: f64,
    /// Contact interaction strength [meV·μm].
    pub hbar_g: f64,
    /// Pump photon energy [meV].
    pub hbar_omega_p: f64,
}

impl PolaritonParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("params.m_star", self.m_star),
            ("params.hbar_omega0", self.hbar_omega0),
            ("params.hbar_gamma", self.hbar_gamma),
            ("params.hbar_g", self.hbar_g),
            ("params.hbar_omega_p", self.hbar_omega_p),
        ];
        for (name, value) in fields {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::validation(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if self.hbar_gamma * 1e-3 >= self.hbar_omega_p {
            return Err(Error::validation("params.hbar_gamma", "loss energy must stay below the pump energy"));
        }
        Ok(())
    }

    /// ħ/m* [μm²/ps].
    pub fn hbar_over_m(&self) -> f64 {
        hbar_over_mass(self.m_star)
    }

    /// Loss rate γ [1/ps].
    pub fn gamma(&self) -> f64 {
        mev_to_rate(self.hbar_gamma * 1e-3)
    }

    /// Interaction rate per density g [μm/ps].
    pub fn g(&self) -> f64 {
        mev_to_rate(self.hbar_g)
    }

    /// Pump detuning from the bare polariton, ω_p − ω₀ [1/ps].
    pub fn detuning(&self) -> f64 {
        mev_to_rate(self.hbar_omega_p - self.hbar_omega0)
    }

    /// Pump angular frequency ω_p [1/ps].
    pub fn omega_p(&self) -> f64 {
        mev_to_rate(self.hbar_omega_p)
    }

    /// Detuning seen by a fluid moving at `v` [μm/ps]: ω_p − ω₀ − m v²/(2ħ).
    pub fn delta_eff(&self, v: f64) -> f64 {
        self.detuning() - v * v / (2.0 * self.hbar_over_m())
    }

    /// Flow velocity imprinted by a pump wavevector [μm/ps].
    pub fn velocity_of(&self, k: f64) -> f64 {
        self.hbar_over_m() * k
    }
}

/// Spatially structured coherent pump.
///
/// Upstream of `x_switch` the pump has wavevector `k_up`, downstream `k_down`.
/// The downstream phase is continued from the upstream one at `x_switch`. The
/// amplitudes are rates [μm^-1/2 ps^-1], so the homogeneous equation of state
/// reads n[(g n − δ)² + γ²/4] = |F|².
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PumpProfile {
    pub k_up: f64,
    pub k_down: f64,
    pub x_switch: f64,
    pub f_up: f64,
    pub f_down: f64,
    pub omega_p: f64,
    /// Width of the tanh crossover between the two pump regions [μm].
    pub switch_width: f64,
}

impl PumpProfile {
    /// Builds a pump whose amplitudes sit a relative `offset` above the
    /// upper-branch turning point of each region.
    ///
    /// `down_offset = None` leaves the downstream region unpumped.
    pub fn calibrated(
        params: &PolaritonParams,
        k_up: f64,
        k_down: f64,
        x_switch: f64,
        switch_width: f64,
        up_offset: f64,
        down_offset: Option<f64>,
    ) -> Result<Self> {
        let f_up = turning_amplitude(params, k_up)? * (1.0 + up_offset);
        let f_down = match down_offset {
            Some(off) => turning_amplitude(params, k_down)? * (1.0 + off),
            None => 0.0,
        };
        let pump = PumpProfile { k_up, k_down, x_switch, f_up, f_down, omega_p: params.omega_p(), switch_width };
        pump.validate()?;
        Ok(pump)
    }

    pub fn validate(&self) -> Result<()> {
        if self.k_down <= self.k_up {
            return Err(Error::validation("pump.k_down", "must exceed pump.k_up for a transcritical flow"));
        }
        if self.f_up < 0.0 || self.f_down < 0.0 {
            return Err(Error::validation("pump", "amplitudes must be non-negative"));
        }
        if self.switch_width <= 0.0 {
            return Err(Error::validation("pump.switch_width", "must be > 0"));
        }
        Ok(())
    }

    /// Weight of the upstream pump at `x`, 1 far upstream and 0 far downstream.
    pub fn upstream_weight(&self, x: f64) -> f64 {
        0.5 * (1.0 - ((x - self.x_switch) / self.switch_width).tanh())
    }

    /// Complex pump amplitude at `x` in the frame rotating at ω_p.
    pub fn at(&self, x: f64) -> num_complex::Complex64 {
        use num_complex::Complex64 as C;
        let s = self.upstream_weight(x);
        let up = C::from_polar(self.f_up * s, self.k_up * x);
        let down_phase = self.k_down * (x - self.x_switch) + self.k_up * self.x_switch;
        up + C::from_polar(self.f_down * (1.0 - s), down_phase)
    }

    pub fn has_downstream_support(&self) -> bool {
        self.f_down > 0.0
    }
}

/// |F| at the upper-branch end of the S-curve for a pump of wavevector `k`.
fn turning_amplitude(params: &PolaritonParams, k: f64) -> Result<f64> {
    let v = params.velocity_of(k);
    let [_, upper] = bistability_turning_points(v, params).ok_or_else(|| {
        Error::validation("pump", format!("no bistability at k = {k} 1/μm, cannot place the pump above the turning point"))
    })?;
    Ok(drive_intensity(upper.n0, params.delta_eff(v), params).sqrt())
}

/// Gaussian potential well or barrier.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DefectPotential {
    /// Peak energy [meV]; negative is attractive.
    pub depth: f64,
    /// Gaussian standard deviation [μm].
    pub width: f64,
    /// Centre position [μm].
    pub center: f64,
}

impl DefectPotential {
    pub fn validate(&self) -> Result<()> {
        if !(self.width > 0.0 && self.width.is_finite()) {
            return Err(Error::validation("defect.width", format!("must be > 0, got {}", self.width)));
        }
        if !self.depth.is_finite() || !self.center.is_finite() {
            return Err(Error::validation("defect", "depth and center must be finite"));
        }
        Ok(())
    }

    /// Potential at `x` as a rate [1/ps].
    pub fn rate_at(&self, x: f64) -> f64 {
        let d = (x - self.center) / self.width;
        mev_to_rate(self.depth) * (-0.5 * d * d).exp()
    }
}

#[cfg(test)]
pub(crate) fn reference_params() -> PolaritonParams {
    PolaritonParams {
        m_star: 3e-5 * crate::units::ELECTRON_MASS_KG,
        hbar_omega0: 1473.36,
        hbar_gamma: 47.0,
        hbar_g: 3e-4,
        hbar_omega_p: 1473.85,
    }
}
