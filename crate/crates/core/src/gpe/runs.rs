use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpe::cavity::Cavity;
use crate::gpe::drive::{DriveKind, DriveTerm};
use crate::gpe::history::FieldHistory;
use crate::gpe::steady::BackgroundState;
use crate::gpe::stepper::{FieldState, LinearStepper, Stepper};
use crate::model::Side;
use crate::C64;

/// How the probe response is integrated.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum ResponseModel {
    /// Full nonlinear equation; the recorded δψ is ψ − ψ₀.
    Nonlinear,
    /// Bogoliubov equation linearised around the frozen background, with the
    /// homogeneous loss replaced by `loss_rate` [1/ps].
    Linearized { loss_rate: f64 },
}

/// Time step and recording schedule that put a probe frequency exactly on a
/// bin of the recorded time series.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeTiming {
    pub dt: f64,
    pub relax_time: f64,
    pub record_time: f64,
    /// Integration steps between frames.
    pub stride: usize,
}

impl ProbeTiming {
    /// Chooses dt ≤ `dt_max` so that one probe period holds an integer number
    /// of frames (`samples_per_period`) and steps, then records an integer
    /// number of periods covering at least `min_record` [ps] and two periods.
    pub fn commensurate(omega: f64, dt_max: f64, samples_per_period: usize, min_record: f64, relax_time: f64) -> Self {
        let period = 2.0 * PI / omega;
        let q = samples_per_period.max(4);
        let stride = ((period / q as f64) / dt_max).ceil().max(1.0) as usize;
        let dt = period / (q * stride) as f64;
        let periods = (min_record / period).ceil().max(2.0);
        ProbeTiming { dt, relax_time, record_time: periods * period, stride }
    }

    pub fn frames(&self) -> usize {
        (self.record_time / (self.stride as f64 * self.dt)).round() as usize
    }
}

fn record<F>(history: &mut FieldHistory, state: &mut FieldState, frames: usize, stride: usize, mut advance: F, delta: impl Fn(&[C64]) -> Vec<C64>) -> Result<()>
where
    F: FnMut(&mut FieldState, usize) -> Result<()>,
{
    for j in 0..frames {
        if j > 0 {
            advance(state, stride)?;
        }
        history.push(delta(&state.psi));
    }
    Ok(())
}

/// Evolves the background under white noise and records ψ − ψ₀ every
/// `record_stride` steps for `duration` [ps].
pub fn run_with_noise(
    cavity: &Cavity,
    background: &BackgroundState,
    noise: &DriveTerm,
    duration: f64,
    record_stride: usize,
) -> Result<FieldHistory> {
    if noise.kind != DriveKind::WhiteNoise {
        return Err(Error::InvalidInput("run_with_noise expects a white-noise drive".into()));
    }
    let stride = record_stride.max(1);
    let frames = (duration / (stride as f64 * cavity.grid.dt)).round() as usize;
    let mut stepper = Stepper::new(cavity);
    stepper.add_drives(cavity, std::slice::from_ref(noise), 0.0);
    let mut state = FieldState { psi: background.psi0.clone(), t: 0.0 };
    let mut history = FieldHistory::new(cavity.grid.clone(), stride as f64 * cavity.grid.dt, stride as f64 * cavity.grid.dt, cavity.params.omega_p());
    stepper.advance(&mut state, stride)?;
    let psi0 = &background.psi0;
    record(&mut history, &mut state, frames, stride, |s, n| stepper.advance(s, n), |psi| {
        psi.iter().zip(psi0).map(|(a, b)| a - b).collect()
    })?;
    Ok(history)
}

/// Switches the probe on at t = 0, lets the response settle for `relax_time`,
/// then records δψ every `record_stride` steps for `record_time` [ps].
///
/// The probe drive oscillates at ω_p + ω in the lab frame, so in the rotating
/// frame its clock is e^{−iωt} with t measured from switch-on.
pub fn run_with_probe(
    cavity: &Cavity,
    background: &BackgroundState,
    probe: &DriveTerm,
    relax_time: f64,
    record_time: f64,
    record_stride: usize,
    model: ResponseModel,
) -> Result<FieldHistory> {
    if probe.kind != DriveKind::Probe {
        return Err(Error::InvalidInput("run_with_probe expects a probe drive".into()));
    }
    if let Ok(up) = background.plateau_hydro(cavity, Side::Upstream) {
        if probe.omega < up.gap() {
            return Err(Error::ProbeInGap { omega: probe.omega, omega_min: up.gap() });
        }
    }
    cavity.grid.check_stability(cavity.params.hbar_over_m())?;
    let dt = cavity.grid.dt;
    let stride = record_stride.max(1);
    let relax_steps = (relax_time / dt).round() as usize;
    let frames = (record_time / (stride as f64 * dt)).round() as usize;
    let t_start = relax_steps as f64 * dt;
    let mut history = FieldHistory::new(cavity.grid.clone(), stride as f64 * dt, t_start, cavity.params.omega_p());

    match model {
        ResponseModel::Nonlinear => {
            let mut stepper = Stepper::new(cavity);
            stepper.add_drives(cavity, std::slice::from_ref(probe), 0.0);
            let mut state = FieldState { psi: background.psi0.clone(), t: 0.0 };
            stepper.advance(&mut state, relax_steps)?;
            let psi0 = &background.psi0;
            record(&mut history, &mut state, frames, stride, |s, n| stepper.advance(s, n), |psi| {
                psi.iter().zip(psi0).map(|(a, b)| a - b).collect()
            })?;
        }
        ResponseModel::Linearized { loss_rate } => {
            let mut stepper = LinearStepper::new(cavity, &background.psi0, loss_rate);
            stepper.add_probe(cavity, probe, 0.0);
            let mut state = FieldState { psi: vec![C64::new(0.0, 0.0); cavity.grid.n_points], t: 0.0 };
            stepper.advance(&mut state, relax_steps)?;
            record(&mut history, &mut state, frames, stride, |s, n| stepper.advance(s, n), |psi| psi.to_vec())?;
        }
    }
    Ok(history)
}
