use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpe::grid::SimGrid;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum DriveKind {
    Probe,
    WhiteNoise,
}

/// Additional source on top of the pump.
///
/// A probe adds −i·a·r(t)·e(x)·e^{i(kx − ωt)} to ∂ₜφ, where `a` is the
/// amplitude, e the envelope and r a raised-cosine turn-on over `ramp_time`.
/// In the lab frame it oscillates at ω_p + ω. White noise adds an independent
/// complex Gaussian kick of rms `amplitude` to every grid point at every step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DriveTerm {
    pub kind: DriveKind,
    pub envelope: Vec<f64>,
    /// Lab-frame wavevector [1/μm].
    pub k: f64,
    /// Angular frequency in the pump-rotating frame [1/ps].
    pub omega: f64,
    /// Probe: rate amplitude [μm^-1/2 ps^-1]. Noise: field kick per step
    /// [μm^-1/2].
    pub amplitude: f64,
    pub seed: u64,
    /// Turn-on duration [ps]; zero switches on abruptly.
    pub ramp_time: f64,
}

impl DriveTerm {
    /// Gaussian probe of standard deviation `width` centred at `center`.
    pub fn gaussian_probe(
        grid: &SimGrid,
        center: f64,
        width: f64,
        k: f64,
        omega: f64,
        amplitude: f64,
        ramp_time: f64,
    ) -> Result<Self> {
        if !(width > 0.0) {
            return Err(Error::validation("probe.width", "must be > 0"));
        }
        let envelope = grid.xs().iter().map(|x| (-0.5 * ((x - center) / width).powi(2)).exp()).collect();
        Ok(DriveTerm { kind: DriveKind::Probe, envelope, k, omega, amplitude, seed: 0, ramp_time })
    }

    pub fn white_noise(grid: &SimGrid, amplitude: f64, seed: u64) -> Self {
        DriveTerm {
            kind: DriveKind::WhiteNoise,
            envelope: vec![1.0; grid.n_points],
            k: 0.0,
            omega: 0.0,
            amplitude,
            seed,
            ramp_time: 0.0,
        }
    }

    /// Turn-on factor at time `t` since the drive started.
    pub fn ramp(&self, t: f64) -> f64 {
        if self.ramp_time <= 0.0 || t >= self.ramp_time {
            1.0
        } else if t <= 0.0 {
            0.0
        } else {
            0.5 * (1.0 - (std::f64::consts::PI * t / self.ramp_time).cos())
        }
    }

    /// Time-independent spatial profile −i·a·e(x)·e^{ikx} of a probe.
    pub(crate) fn spatial_profile(&self, grid: &SimGrid) -> Vec<C64> {
        let minus_i = C64::new(0.0, -1.0);
        grid.xs()
            .iter()
            .zip(&self.envelope)
            .map(|(&x, &e)| minus_i * C64::from_polar(self.amplitude * e, self.k * x))
            .collect()
    }
}
