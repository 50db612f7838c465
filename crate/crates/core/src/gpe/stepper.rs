use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpe::cavity::Cavity;
use crate::gpe::drive::{DriveKind, DriveTerm};
use crate::C64;

/// Field snapshot in the pump-rotating frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    /// φ(x) [μm^-1/2].
    pub psi: Vec<C64>,
    /// Time [ps].
    pub t: f64,
}

/// (e^z − 1)/z, accurate for small |z|.
#[inline]
fn phi1(z: C64) -> C64 {
    if z.norm_sqr() < 1e-8 {
        C64::new(1.0, 0.0) + z * (0.5 + z * (1.0 / 6.0 + z / 24.0))
    } else {
        (z.exp() - 1.0) / z
    }
}

/// Spectral kinetic propagator shared by both steppers.
struct Kinetic {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    half: Vec<C64>,
    full: Vec<C64>,
    scratch: Vec<C64>,
}

impl Kinetic {
    fn new(cavity: &Cavity) -> Self {
        let n = cavity.grid.n_points;
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let hm = cavity.params.hbar_over_m();
        let dt = cavity.grid.dt;
        let norm = 1.0 / n as f64;
        let phase = |k: f64, tau: f64| C64::from_polar(norm, -0.5 * hm * k * k * tau);
        let ks = cavity.grid.wavenumbers();
        let scratch_len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Kinetic {
            half: ks.iter().map(|&k| phase(k, 0.5 * dt)).collect(),
            full: ks.iter().map(|&k| phase(k, dt)).collect(),
            forward,
            inverse,
            scratch: vec![C64::new(0.0, 0.0); scratch_len],
        }
    }

    fn apply(&mut self, psi: &mut [C64], half: bool) {
        self.forward.process_with_scratch(psi, &mut self.scratch);
        let mult = if half { &self.half } else { &self.full };
        for (p, m) in psi.iter_mut().zip(mult) {
            *p *= m;
        }
        self.inverse.process_with_scratch(psi, &mut self.scratch);
    }
}

/// Oscillating source restricted to where its envelope is non-negligible.
struct Oscillator {
    profile: Vec<C64>,
    omega: f64,
    start: usize,
    drive: DriveTerm,
}

impl Oscillator {
    fn new(drive: &DriveTerm, cavity: &Cavity) -> Self {
        let full = drive.spatial_profile(&cavity.grid);
        let peak = drive.envelope.iter().fold(0.0f64, |m, e| m.max(e.abs()));
        let live: Vec<usize> =
            (0..full.len()).filter(|&i| drive.envelope[i].abs() > 1e-14 * peak).collect();
        let (start, end) = match (live.first(), live.last()) {
            (Some(&a), Some(&b)) => (a, b + 1),
            _ => (0, 0),
        };
        Oscillator { profile: full[start..end].to_vec(), omega: drive.omega, start, drive: drive.clone() }
    }
}

struct Noise {
    rng: ChaCha8Rng,
    rms: f64,
}

impl Noise {
    fn new(drive: &DriveTerm) -> Self {
        Noise { rng: ChaCha8Rng::seed_from_u64(drive.seed), rms: drive.amplitude }
    }

    fn kick(&mut self, psi: &mut [C64]) {
        let scale = self.rms * std::f64::consts::FRAC_1_SQRT_2;
        for p in psi.iter_mut() {
            let re: f64 = StandardNormal.sample(&mut self.rng);
            let im: f64 = StandardNormal.sample(&mut self.rng);
            *p += C64::new(re, im) * scale;
        }
    }
}

/// Symmetric split-step integrator for the full nonlinear equation.
pub struct Stepper {
    dt: f64,
    g: f64,
    detuning: f64,
    potential: Vec<f64>,
    damping: Vec<f64>,
    forcing: Vec<C64>,
    kinetic: Kinetic,
    oscillators: Vec<Oscillator>,
    noise: Option<Noise>,
    /// Time at which the extra drives were switched on [ps].
    drive_origin: f64,
    blowup_density: f64,
}

impl Stepper {
    pub fn new(cavity: &Cavity) -> Self {
        let p = &cavity.params;
        let half_loss = 0.5 * p.gamma();
        let mask = cavity.mask();
        let target = cavity.relax_target();
        let minus_i = C64::new(0.0, -1.0);
        let forcing = cavity.pump_field().iter().zip(&mask).zip(&target).map(|((f, m), t)| minus_i * f + t * *m).collect();
        Stepper {
            dt: cavity.grid.dt,
            g: p.g(),
            detuning: p.detuning(),
            potential: cavity.potential(),
            damping: mask.iter().map(|m| half_loss + m).collect(),
            forcing,
            kinetic: Kinetic::new(cavity),
            oscillators: Vec::new(),
            noise: None,
            drive_origin: 0.0,
            blowup_density: 1e3 * cavity.density_scale(),
        }
    }

    /// Replaces the homogeneous loss rate γ [1/ps]; absorbing layers stay.
    pub fn set_loss_rate(&mut self, cavity: &Cavity, gamma: f64) {
        self.damping = cavity.mask().iter().map(|m| 0.5 * gamma + m).collect();
    }

    /// Removes the pump and the boundary relaxation source.
    pub fn disable_pump(&mut self) {
        self.forcing.iter_mut().for_each(|f| *f = C64::new(0.0, 0.0));
    }

    pub fn set_blowup_density(&mut self, density: f64) {
        self.blowup_density = density;
    }

    /// Adds probe or noise drives whose clocks start at `origin` [ps].
    pub fn add_drives(&mut self, cavity: &Cavity, drives: &[DriveTerm], origin: f64) {
        self.drive_origin = origin;
        for d in drives {
            match d.kind {
                DriveKind::Probe => self.oscillators.push(Oscillator::new(d, cavity)),
                DriveKind::WhiteNoise => self.noise = Some(Noise::new(d)),
            }
        }
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Advances by `steps` symmetric split steps. Consecutive half kinetic
    /// steps are fused, which is exact.
    pub fn advance(&mut self, state: &mut FieldState, steps: usize) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        self.kinetic.apply(&mut state.psi, true);
        for s in 0..steps {
            self.pointwise(&mut state.psi, state.t);
            if let Some(noise) = &mut self.noise {
                noise.kick(&mut state.psi);
            }
            state.t += self.dt;
            self.kinetic.apply(&mut state.psi, s + 1 == steps);
        }
        self.check(state)
    }

    /// Pointwise substep with the linear terms integrated exactly for a fixed
    /// density. The density is the trapezoidal mean of a predictor pass and
    /// the start value, which makes the substep second order.
    fn pointwise(&mut self, psi: &mut [C64], t: f64) {
        let dt = self.dt;
        let local = t - self.drive_origin;
        // Per-oscillator (clock, frequency shift) for the exact integral of
        // e^{a(dt−s)} e^{−iω(t+s)} over the step.
        let active: Vec<(&Oscillator, C64, C64)> = self
            .oscillators
            .iter()
            .filter_map(|osc| {
                let ramp = osc.drive.ramp(local + 0.5 * dt);
                (ramp != 0.0).then(|| {
                    (osc, C64::from_polar(ramp * dt, -osc.omega * (local + dt)), C64::new(0.0, osc.omega * dt))
                })
            })
            .collect();
        for (i, p) in psi.iter_mut().enumerate() {
            let base = self.potential[i] - self.detuning;
            let damping = self.damping[i];
            let forcing = self.forcing[i];
            let start = *p;
            let update = |density: f64| {
                let z = C64::new(-damping, -(base + self.g * density)) * dt;
                let mut out = z.exp() * start + forcing * dt * phi1(z);
                for (osc, clock, shift) in &active {
                    if let Some(src) = i.checked_sub(osc.start).and_then(|j| osc.profile.get(j)) {
                        out += src * clock * phi1(z + shift);
                    }
                }
                out
            };
            let n_start = start.norm_sqr();
            let predicted = update(n_start);
            *p = update(0.5 * (n_start + predicted.norm_sqr()));
        }
    }

    fn check(&self, state: &FieldState) -> Result<()> {
        let mut peak = 0.0f64;
        for p in &state.psi {
            let d = p.norm_sqr();
            if !d.is_finite() {
                return Err(Error::NumericalBlowup { t: state.t, peak: f64::INFINITY });
            }
            peak = peak.max(d);
        }
        if peak > self.blowup_density {
            return Err(Error::NumericalBlowup { t: state.t, peak });
        }
        Ok(())
    }
}

/// Split-step integrator for the Bogoliubov equation linearised around a
/// frozen background φ₀:
///
/// i∂ₜδ = [K + V − Δ + 2g|φ₀|² − iΓ(x)]δ + g φ₀² δ* + i·sources
///
/// with Γ = γ_lin/2 + mask. Setting γ_lin = 0 gives the conservative response
/// of the horizon used for flux-balance checks.
pub struct LinearStepper {
    dt: f64,
    diagonal: Vec<f64>,
    coupling: Vec<C64>,
    damping: Vec<f64>,
    kinetic: Kinetic,
    oscillators: Vec<Oscillator>,
    drive_origin: f64,
    blowup_amplitude: f64,
}

impl LinearStepper {
    pub fn new(cavity: &Cavity, background: &[C64], loss_rate: f64) -> Self {
        let g = cavity.params.g();
        let detuning = cavity.params.detuning();
        let diagonal =
            cavity.potential().iter().zip(background).map(|(v, b)| v - detuning + 2.0 * g * b.norm_sqr()).collect();
        LinearStepper {
            dt: cavity.grid.dt,
            diagonal,
            coupling: background.iter().map(|b| b * b * g).collect(),
            damping: cavity.mask().iter().map(|m| 0.5 * loss_rate + m).collect(),
            kinetic: Kinetic::new(cavity),
            oscillators: Vec::new(),
            drive_origin: 0.0,
            blowup_amplitude: 1e3 * cavity.density_scale().sqrt(),
        }
    }

    pub fn add_probe(&mut self, cavity: &Cavity, probe: &DriveTerm, origin: f64) {
        self.drive_origin = origin;
        self.oscillators.push(Oscillator::new(probe, cavity));
    }

    fn source(&self, osc: &Oscillator, t: f64) -> C64 {
        C64::from_polar(osc.drive.ramp(t - self.drive_origin), -osc.omega * (t - self.drive_origin))
    }

    pub fn advance(&mut self, state: &mut FieldState, steps: usize) -> Result<()> {
        if steps == 0 {
            return Ok(());
        }
        self.kinetic.apply(&mut state.psi, true);
        for s in 0..steps {
            self.pointwise(&mut state.psi, state.t);
            state.t += self.dt;
            self.kinetic.apply(&mut state.psi, s + 1 == steps);
        }
        let peak = state.psi.iter().fold(0.0f64, |m, p| m.max(p.norm()));
        if !peak.is_finite() || peak > self.blowup_amplitude {
            return Err(Error::NumericalBlowup { t: state.t, peak: peak * peak });
        }
        Ok(())
    }

    fn pointwise(&self, delta: &mut [C64], t: f64) {
        let dt = self.dt;
        let half = 0.5 * dt;
        // Trapezoidal source injection around the exact homogeneous update.
        for osc in &self.oscillators {
            let c = self.source(osc, t) * half;
            for (j, src) in osc.profile.iter().enumerate() {
                delta[osc.start + j] += src * c;
            }
        }
        let minus_i = C64::new(0.0, -1.0);
        for (i, d) in delta.iter_mut().enumerate() {
            // d/dt (δ, δ*) = (N − Γ)(δ, δ*) with N² = (|B|² − A²)·1.
            let a = self.diagonal[i];
            let b = self.coupling[i];
            let q = b.norm_sqr() - a * a;
            let (c, sh) = if q > 1e-300 {
                let r = q.sqrt();
                ((r * dt).cosh(), (r * dt).sinh() / r)
            } else if q < -1e-300 {
                let r = (-q).sqrt();
                ((r * dt).cos(), (r * dt).sin() / r)
            } else {
                (1.0, dt)
            };
            let n_delta = minus_i * (*d * a + b * d.conj());
            *d = (*d * c + n_delta * sh) * (-self.damping[i] * dt).exp();
        }
        for osc in &self.oscillators {
            let c = self.source(osc, t + dt) * half;
            for (j, src) in osc.profile.iter().enumerate() {
                delta[osc.start + j] += src * c;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gpe::cavity::fixtures::small_cavity;
    use crate::gpe::cavity::{Absorber, Cavity};
    use crate::gpe::grid::SimGrid;
    use crate::model::params::reference_params;
    use crate::model::{equation_of_state_roots, PumpProfile};

    fn zero_state(n: usize) -> FieldState {
        FieldState { psi: vec![C64::new(0.0, 0.0); n], t: 0.0 }
    }

    /// Homogeneous box pumped at k = 0, no defect, no absorber.
    fn homogeneous_cavity(n: usize, f_up: f64) -> Cavity {
        let params = reference_params();
        let dx = 100.0 / n as f64;
        let dt = 0.8 * crate::gpe::grid::stability_bound(dx, params.hbar_over_m());
        Cavity {
            grid: SimGrid::new(n, 100.0, 0.0, dt).unwrap(),
            pump: PumpProfile { k_up: 0.0, k_down: 1.0, x_switch: 1e9, f_up, f_down: 0.0, omega_p: params.omega_p(), switch_width: 1.0 },
            params,
            defect: None,
            absorber: Absorber { margin: 0.0, strength: 0.0 },
        }
    }

    #[test]
    fn zero_field_without_drive_stays_zero() {
        let mut c = small_cavity(256, false);
        c.pump.f_up = 0.0;
        c.absorber.margin = 0.0;
        let mut s = Stepper::new(&c);
        let mut state = zero_state(256);
        s.advance(&mut state, 100).unwrap();
        assert!(state.psi.iter().all(|p| *p == C64::new(0.0, 0.0)));
    }

    #[test]
    fn homogeneous_pump_settles_on_eos_root() {
        let p = reference_params();
        let [_, upper] = crate::model::bistability_turning_points(0.0, &p).unwrap();
        let f = (upper.drive_sq * 1.05).sqrt();
        let c = homogeneous_cavity(64, f);
        let n_expected = *equation_of_state_roots(f, 0.0, &p).last().unwrap();
        let mut state = FieldState { psi: c.initial_field(), t: 0.0 };
        // Perturb the seed so the relaxation is exercised.
        state.psi.iter_mut().for_each(|z| *z *= 1.01);
        let mut s = Stepper::new(&c);
        let steps = (300.0 / c.grid.dt) as usize;
        s.advance(&mut state, steps).unwrap();
        for z in &state.psi {
            assert!((z.norm_sqr() - n_expected).abs() < 1e-6 * n_expected, "{} vs {n_expected}", z.norm_sqr());
        }
    }

    #[test]
    fn free_decay_follows_half_loss_rate() {
        let c = homogeneous_cavity(64, 0.0);
        let mut s = Stepper::new(&c);
        let gamma = c.params.gamma();
        // Low density keeps the nonlinear phase irrelevant to the norm.
        let mut state = FieldState { psi: vec![C64::new(1e-3, 0.0); 64], t: 0.0 };
        let norm0: f64 = state.psi.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt();
        let steps = (5.0 / gamma / c.grid.dt).round() as usize;
        s.advance(&mut state, steps).unwrap();
        let norm1: f64 = state.psi.iter().map(|p| p.norm_sqr()).sum::<f64>().sqrt();
        let expected = norm0 * (-0.5 * gamma * state.t).exp();
        assert!((norm1 - expected).abs() < 1e-4 * expected);
    }

    #[test]
    fn blowup_is_detected() {
        let c = small_cavity(256, false);
        let mut s = Stepper::new(&c);
        s.set_blowup_density(1e-6);
        let mut state = FieldState { psi: c.initial_field(), t: 0.0 };
        assert!(matches!(s.advance(&mut state, 1), Err(Error::NumericalBlowup { .. })));
    }

    #[test]
    fn identical_seeds_give_identical_noise_runs() {
        let c = small_cavity(256, true);
        let run = |seed| {
            let mut s = Stepper::new(&c);
            s.add_drives(&c, &[DriveTerm::white_noise(&c.grid, 1e-3, seed)], 0.0);
            let mut st = FieldState { psi: c.initial_field(), t: 0.0 };
            s.advance(&mut st, 50).unwrap();
            st.psi
        };
        assert_eq!(run(7), run(7));
        assert_ne!(run(7), run(8));
    }

    #[test]
    fn linear_stepper_matches_nonlinear_response_for_weak_probe() {
        // On a converged homogeneous background, a weak probe must produce the
        // same δφ in the full and in the linearised integrator.
        let p = reference_params();
        let [_, upper] = crate::model::bistability_turning_points(0.0, &p).unwrap();
        let c = homogeneous_cavity(128, (upper.drive_sq * 1.2).sqrt());
        let mut base = FieldState { psi: c.initial_field(), t: 0.0 };
        let mut s = Stepper::new(&c);
        s.advance(&mut base, (400.0 / c.grid.dt) as usize).unwrap();

        let probe = DriveTerm::gaussian_probe(&c.grid, 50.0, 8.0, 0.2, 0.3, 1e-4, 10.0).unwrap();
        let steps = (60.0 / c.grid.dt) as usize;

        let mut full = Stepper::new(&c);
        full.add_drives(&c, std::slice::from_ref(&probe), base.t);
        let mut fs = base.clone();
        full.advance(&mut fs, steps).unwrap();
        let full_delta: Vec<C64> = fs.psi.iter().zip(&base.psi).map(|(a, b)| a - b).collect();

        let mut lin = LinearStepper::new(&c, &base.psi, c.params.gamma());
        lin.add_probe(&c, &probe, base.t);
        let mut ls = FieldState { psi: vec![C64::new(0.0, 0.0); 128], t: base.t };
        lin.advance(&mut ls, steps).unwrap();

        let scale = full_delta.iter().fold(0.0f64, |m, d| m.max(d.norm()));
        let err = full_delta.iter().zip(&ls.psi).fold(0.0f64, |m, (a, b)| m.max((a - b).norm()));
        assert!(scale > 0.0);
        assert!(err < 2e-4 * scale, "err {err:.3e} scale {scale:.3e}");
    }
}
