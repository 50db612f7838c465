use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpe::{run_with_probe, BackgroundState, Cavity, DriveTerm, ProbeTiming, ResponseModel};
use crate::model::{channel_map, ChannelLabel, LocalHydro, Side};
use crate::scatter::extract::{extract_channel_amplitudes, ChannelAmplitudes};
use crate::scatter::spectrum::{windowed_spectrum, AnalysisRegion, SpectrumMap};

/// Probe geometry, timing and analysis windows shared by every frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    /// Probe centre [μm].
    pub probe_center: f64,
    /// Gaussian standard deviation [μm].
    pub probe_width: f64,
    /// Probe amplitude as a fraction of the upstream pump amplitude.
    pub probe_fraction: f64,
    /// Raised-cosine turn-on [ps].
    pub ramp_time: f64,
    /// Time between switch-on and the first recorded frame [ps].
    pub relax_time: f64,
    /// Shortest record [ps]; rounded up to whole probe periods.
    pub min_record: f64,
    /// Frames per probe period never drop below this.
    pub min_samples: usize,
    /// Recorded Nyquist frequency over ω_max.
    pub nyquist_factor: f64,
    pub upstream_region: (f64, f64),
    pub downstream_region: (f64, f64),
    /// Zero-padding factor of the spatial transform.
    pub k_padding: usize,
    pub model: ResponseModel,
}

impl Default for SweepConfig {
    fn default() -> Self {
        SweepConfig {
            probe_center: 300.0,
            probe_width: 12.0,
            probe_fraction: 1e-3,
            ramp_time: 50.0,
            relax_time: 250.0,
            min_record: 400.0,
            min_samples: 8,
            nyquist_factor: 3.0,
            upstream_region: (336.0, 388.0),
            downstream_region: (410.0, 510.0),
            k_padding: 8,
            model: ResponseModel::Nonlinear,
        }
    }
}

/// Plateau hydrodynamics the channels are solved on.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepHydro {
    pub upstream: LocalHydro,
    pub downstream: LocalHydro,
    /// Upper edge of the Hawking window [1/ps], for the recording rate.
    pub omega_max: f64,
}

/// Rows of the two maps at ±ω_pr, cropped to |k| ≤ [`SLICE_K_MAX`], for
/// collating the sweep into frequency-wavenumber pictures.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumSlices {
    pub k_up: Vec<f64>,
    /// |A(k, ω_pr)| upstream.
    pub up: Vec<f64>,
    /// |A(k, −ω_pr)| upstream.
    pub up_conj: Vec<f64>,
    pub k_down: Vec<f64>,
    pub down: Vec<f64>,
    pub down_conj: Vec<f64>,
}

/// Largest |k| kept in [`SpectrumSlices`] [1/μm].
pub const SLICE_K_MAX: f64 = 3.0;

fn slice_rows(map: &SpectrumMap, omega: f64) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let keep: Vec<usize> = (0..map.k_axis.len()).filter(|&q| map.k_axis[q].abs() <= SLICE_K_MAX).collect();
    let row = |w: f64| match SpectrumMap::nearest(&map.omega_axis, w) {
        Some(i) => keep.iter().map(|&q| map.value(i, q).norm()).collect(),
        None => vec![0.0; keep.len()],
    };
    (keep.iter().map(|&q| map.k_axis[q]).collect(), row(omega), row(-omega))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SweepOutcome {
    Measured { amplitudes: ChannelAmplitudes, slices: SpectrumSlices },
    /// The run failed; the frequency is kept as an explicit hole.
    Gap { reason: String },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub omega: f64,
    pub outcome: SweepOutcome,
}

impl SweepEntry {
    pub fn slices(&self) -> Option<&SpectrumSlices> {
        match &self.outcome {
            SweepOutcome::Measured { slices, .. } => Some(slices),
            SweepOutcome::Gap { .. } => None,
        }
    }

    pub fn amplitudes(&self) -> Option<&ChannelAmplitudes> {
        match &self.outcome {
            SweepOutcome::Measured { amplitudes, .. } => Some(amplitudes),
            SweepOutcome::Gap { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScatterSweepResult {
    pub entries: Vec<SweepEntry>,
}

impl ScatterSweepResult {
    pub fn omegas(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.omega).collect()
    }

    /// |direct| of `label` per frequency; `None` for gaps and closed channels.
    pub fn spectrum(&self, label: ChannelLabel) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.amplitudes().and_then(|a| a.magnitude(label))).collect()
    }

    /// |conjugate| of `label` per frequency.
    pub fn conjugate_spectrum(&self, label: ChannelLabel) -> Vec<Option<f64>> {
        self.entries.iter().map(|e| e.amplitudes().and_then(|a| a.conjugate_magnitude(label))).collect()
    }

    pub fn t_down(&self) -> Vec<Option<f64>> {
        self.spectrum(ChannelLabel::Down)
    }

    pub fn r_hr(&self) -> Vec<Option<f64>> {
        self.spectrum(ChannelLabel::Hr)
    }

    pub fn t_dn(&self) -> Vec<Option<f64>> {
        self.spectrum(ChannelLabel::Dn)
    }

    pub fn gaps(&self) -> usize {
        self.entries.iter().filter(|e| e.amplitudes().is_none()).count()
    }
}

/// Probe frequencies: `points` evenly spaced from just above `omega_min` to
/// 1.5·`omega_qnm`, with `densify` times finer spacing within
/// ±`halfspan` of `omega_qnm`.
pub fn probe_frequencies(omega_min: f64, omega_qnm: f64, halfspan: f64, points: usize, densify: usize) -> Vec<f64> {
    let hi = 1.5 * omega_qnm;
    let step = (hi - omega_min) / points as f64;
    let mut grid: Vec<f64> = (0..points).map(|i| omega_min + (i as f64 + 0.5) * step).collect();
    let fine = step / densify.max(1) as f64;
    for i in 0..points {
        let base = grid[i];
        if (base - omega_qnm).abs() <= halfspan {
            grid.extend((1..densify).map(|j| base + j as f64 * fine).filter(|w| *w < hi));
        }
    }
    grid.sort_by(f64::total_cmp);
    grid.dedup_by(|a, b| (*a - *b).abs() < 1e-12 * b.abs());
    grid
}

/// One probe run and its channel readout.
pub fn probe_response(
    cavity: &Cavity,
    background: &BackgroundState,
    hydro: &SweepHydro,
    omega: f64,
    config: &SweepConfig,
) -> Result<ChannelAmplitudes> {
    probe_response_with_slices(cavity, background, hydro, omega, config).map(|(a, _)| a)
}

/// [`probe_response`] that also keeps the map rows at ±ω.
pub fn probe_response_with_slices(
    cavity: &Cavity,
    background: &BackgroundState,
    hydro: &SweepHydro,
    omega: f64,
    config: &SweepConfig,
) -> Result<(ChannelAmplitudes, SpectrumSlices)> {
    let channels = channel_map(omega, &hydro.upstream, &hydro.downstream)?;
    let incident = channels.require(ChannelLabel::In)?;
    let phase_k = hydro.upstream.v0 / hydro.upstream.hbar_over_m;
    let q = (2.0 * config.nyquist_factor * hydro.omega_max / omega).ceil() as usize;
    let q = q.max(config.min_samples);
    let timing = ProbeTiming::commensurate(omega, cavity.grid.dt, q, config.min_record, config.relax_time);
    let cavity = Cavity { grid: cavity.grid.with_dt(timing.dt), ..cavity.clone() };
    let amplitude = config.probe_fraction * cavity.pump.f_up.abs();
    let probe = DriveTerm::gaussian_probe(
        &cavity.grid,
        config.probe_center,
        config.probe_width,
        incident.k + phase_k,
        omega,
        amplitude,
        config.ramp_time,
    )?;
    let history = run_with_probe(&cavity, background, &probe, timing.relax_time, timing.record_time, timing.stride, config.model)?
        .to_comoving(&background.phase_factor());
    let (ua, ub) = config.upstream_region;
    let (da, db) = config.downstream_region;
    let up = windowed_spectrum(&history, AnalysisRegion::new(Side::Upstream, ua, ub), config.k_padding, amplitude)?;
    let down = windowed_spectrum(&history, AnalysisRegion::new(Side::Downstream, da, db), config.k_padding, amplitude)?;
    let amplitudes = extract_channel_amplitudes(&up, &down, &channels)?;
    let (k_up, up_row, up_conj) = slice_rows(&up, omega);
    let (k_down, down_row, down_conj) = slice_rows(&down, omega);
    let slices = SpectrumSlices { k_up, up: up_row, up_conj, k_down, down: down_row, down_conj };
    Ok((amplitudes, slices))
}

/// Runs every probe frequency on up to `workers` threads. Failed runs become
/// gaps; only an invalid frequency grid aborts.
pub fn run_sweep(
    cavity: &Cavity,
    background: &BackgroundState,
    hydro: &SweepHydro,
    omegas: &[f64],
    config: &SweepConfig,
    workers: usize,
) -> Result<ScatterSweepResult> {
    if omegas.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::validation("sweep.omegas", "must be strictly increasing"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::InvalidInput(format!("worker pool: {e}")))?;
    let entries = pool.install(|| {
        omegas
            .par_iter()
            .map(|&omega| {
                let outcome = match probe_response_with_slices(cavity, background, hydro, omega, config) {
                    Ok((amplitudes, slices)) => SweepOutcome::Measured { amplitudes, slices },
                    Err(e) => SweepOutcome::Gap { reason: e.to_string() },
                };
                SweepEntry { omega, outcome }
            })
            .collect()
    });
    Ok(ScatterSweepResult { entries })
}
