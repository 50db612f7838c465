use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpe::cavity::Cavity;
use crate::gpe::stepper::{FieldState, Stepper};
use crate::model::{local_hydro, LocalHydro, Side};
use crate::C64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SteadyOptions {
    /// Residual threshold [1/ps].
    pub tol: f64,
    /// Give up after this much simulated time [ps].
    pub t_max: f64,
    /// Comparison interval Δ [ps]; `None` means 10/γ.
    pub check_interval: Option<f64>,
    /// Fail with `NotTranscritical` when no sonic point is found.
    pub require_horizon: bool,
}

impl Default for SteadyOptions {
    fn default() -> Self {
        SteadyOptions { tol: 1e-7, t_max: 4000.0, check_interval: None, require_horizon: true }
    }
}

/// Converged stationary flow and its local hydrodynamics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundState {
    /// Field in the pump-rotating frame [μm^-1/2].
    pub psi0: Vec<C64>,
    /// Density |ψ₀|² [1/μm].
    pub n0: Vec<f64>,
    /// Flow velocity (ħ/m)·∂ₓ arg ψ₀ [μm/ps].
    pub v0: Vec<f64>,
    /// Sound speed [μm/ps], zero where 2gn − δ_eff < 0.
    pub c_b: Vec<f64>,
    /// Rest mass [kg] where the gap is real.
    pub m_det: Vec<Option<f64>>,
    /// First subsonic-to-supersonic crossing between the absorbers [μm].
    pub horizon_x: Option<f64>,
    /// Every sign change of |v₀| − c_B between the absorbers [μm].
    pub sonic_crossings: Vec<f64>,
    /// Final ‖ψ(t+Δ) − ψ(t)‖/(‖ψ‖Δ) [1/ps].
    pub residual: f64,
    /// Simulated time at convergence [ps].
    pub t: f64,
}

impl BackgroundState {
    /// Derives profiles and the sonic structure from a stationary field.
    pub fn from_field(cavity: &Cavity, psi0: Vec<C64>, residual: f64, t: f64) -> Self {
        let p = &cavity.params;
        let hm = p.hbar_over_m();
        let g = p.g();
        let grad = cavity.grid.derivative(&psi0);
        let n0: Vec<f64> = psi0.iter().map(|z| z.norm_sqr()).collect();
        let v0: Vec<f64> = psi0
            .iter()
            .zip(&grad)
            .zip(&n0)
            .map(|((z, d), n)| if *n > 0.0 { hm * (z.conj() * d).im / n } else { 0.0 })
            .collect();
        let c_b: Vec<f64> =
            n0.iter().zip(&v0).map(|(n, v)| (hm * (2.0 * g * n - p.delta_eff(*v))).max(0.0).sqrt()).collect();
        let m_det = n0.iter().zip(&v0).map(|(n, v)| local_hydro(*n, *v, p).ok().and_then(|h| h.m_det)).collect();

        let (lo, hi) = cavity.interior();
        let xs = cavity.grid.xs();
        let mut sonic_crossings = Vec::new();
        let mut horizon_x = None;
        let excess = |i: usize| v0[i].abs() - c_b[i];
        let inside: Vec<usize> = (0..xs.len()).filter(|&i| xs[i] >= lo && xs[i] <= hi).collect();
        for w in inside.windows(2) {
            let (a, b) = (w[0], w[1]);
            let (ea, eb) = (excess(a), excess(b));
            if ea == 0.0 || ea * eb < 0.0 {
                let x = xs[a] + (xs[b] - xs[a]) * ea / (ea - eb);
                sonic_crossings.push(x);
                if horizon_x.is_none() && ea < 0.0 {
                    horizon_x = Some(x);
                }
            }
        }
        BackgroundState { psi0, n0, v0, c_b, m_det, horizon_x, sonic_crossings, residual, t }
    }

    /// e^{−iθ₀(x)}, which removes the background phase from a perturbation.
    pub fn phase_factor(&self) -> Vec<C64> {
        self.psi0.iter().map(|z| if z.norm() > 0.0 { z.conj() / z.norm() } else { C64::new(1.0, 0.0) }).collect()
    }

    /// Positions [μm] over which a side's plateau is averaged: the middle
    /// half of the stretch between the absorber and the pump switch.
    pub fn plateau_span(cavity: &Cavity, side: Side) -> (f64, f64) {
        let (lo, hi) = cavity.interior();
        let xs = cavity.pump.x_switch;
        let (a, b) = match side {
            Side::Upstream => (lo, xs - 20.0),
            Side::Downstream => (xs + 40.0, hi),
        };
        (a + 0.25 * (b - a), b - 0.25 * (b - a))
    }

    /// Local hydrodynamics of the mean density and velocity over a side's
    /// default plateau.
    pub fn plateau_hydro(&self, cavity: &Cavity, side: Side) -> Result<LocalHydro> {
        self.hydro_over(cavity, Self::plateau_span(cavity, side))
    }

    /// Local hydrodynamics of the mean density and velocity over `[a, b)`.
    pub fn hydro_over(&self, cavity: &Cavity, (a, b): (f64, f64)) -> Result<LocalHydro> {
        let idx = cavity.grid.indices_between(a, b);
        if idx.is_empty() {
            return Err(Error::RegionTooNarrow { points: 0, min: 1 });
        }
        let count = idx.len() as f64;
        let n = idx.clone().map(|i| self.n0[i]).sum::<f64>() / count;
        let v = idx.map(|i| self.v0[i]).sum::<f64>() / count;
        local_hydro(n, v, &cavity.params)
    }
}

/// Relaxes the seeded field under a fixed pump until the rotating-frame field
/// stops changing.
pub fn find_steady_state(cavity: &Cavity, options: &SteadyOptions) -> Result<BackgroundState> {
    cavity.validate()?;
    cavity.require_pumped()?;
    let interval = options.check_interval.unwrap_or(10.0 / cavity.params.gamma());
    let steps = ((interval / cavity.grid.dt).round() as usize).max(1);
    let interval = steps as f64 * cavity.grid.dt;

    let mut stepper = Stepper::new(cavity);
    let mut state = FieldState { psi: cavity.initial_field(), t: 0.0 };
    let mut previous = state.psi.clone();
    let residual = loop {
        stepper.advance(&mut state, steps)?;
        let diff: f64 = state.psi.iter().zip(&previous).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
        let norm: f64 = state.psi.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        let residual = diff / (norm * interval);
        if residual < options.tol {
            break residual;
        }
        if state.t >= options.t_max {
            return Err(Error::NoConvergence { t_max: options.t_max, residual });
        }
        previous.clone_from(&state.psi);
    };

    let background = BackgroundState::from_field(cavity, state.psi, residual, state.t);
    if options.require_horizon && background.horizon_x.is_none() {
        return Err(Error::NotTranscritical("no sonic point between the absorbing layers".into()));
    }
    Ok(background)
}
