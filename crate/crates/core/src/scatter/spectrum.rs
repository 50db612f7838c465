use std::f64::consts::PI;

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gpe::FieldHistory;
use crate::model::Side;
use crate::C64;

/// Fewest grid points a spatial window may hold.
pub const MIN_REGION_POINTS: usize = 64;

/// A stretch of the cavity analysed on its own.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AnalysisRegion {
    pub side: Side,
    /// Left edge [μm].
    pub x_lo: f64,
    /// Right edge [μm].
    pub x_hi: f64,
}

impl AnalysisRegion {
    pub fn new(side: Side, x_lo: f64, x_hi: f64) -> Self {
        AnalysisRegion { side, x_lo, x_hi }
    }

    pub fn center(&self) -> f64 {
        0.5 * (self.x_lo + self.x_hi)
    }
}

/// Hann-windowed space-time Fourier amplitudes of one region.
///
/// A plane wave a·e^{i(kx − ωt)} that sits on a bin of both axes reads back
/// as `a` at (k, ω), phase included, with x and t measured from the cavity
/// origin and the drive switch-on.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMap {
    pub region: AnalysisRegion,
    /// Ascending wavenumbers [1/μm].
    pub k_axis: Vec<f64>,
    /// Ascending angular frequencies [1/ps].
    pub omega_axis: Vec<f64>,
    /// Row-major, one row per frequency.
    pub values: Vec<C64>,
    /// Every value has been divided by this amplitude.
    pub normalization: f64,
    /// Grid points inside the spatial window.
    pub points: usize,
    /// Recorded frames inside the time window.
    pub frames: usize,
    /// Sums of the spatial and temporal windows.
    pub gain: (f64, f64),
    /// Unpadded bin widths 2π/L and 2π/T.
    pub resolution: (f64, f64),
}

impl SpectrumMap {
    pub fn value(&self, i_omega: usize, i_k: usize) -> C64 {
        self.values[i_omega * self.k_axis.len() + i_k]
    }

    /// |A(k, ω)| in the same layout as `values`.
    pub fn magnitude(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm()).collect()
    }

    /// Index of the axis point nearest to `x`, if `x` lies within the axis.
    pub(crate) fn nearest(axis: &[f64], x: f64) -> Option<usize> {
        let step = axis.get(1).map(|b| b - axis[0]).unwrap_or(0.0);
        let (lo, hi) = (axis[0] - 0.5 * step, axis[axis.len() - 1] + 0.5 * step);
        if !(x >= lo && x <= hi) {
            return None;
        }
        let i = ((x - axis[0]) / step).round().clamp(0.0, (axis.len() - 1) as f64);
        Some(i as usize)
    }
}

fn hann(n: usize) -> Vec<f64> {
    (0..n).map(|j| 0.5 * (1.0 - (2.0 * PI * j as f64 / n as f64).cos())).collect()
}

/// Signed FFT frequency index of unshifted slot `m`.
fn signed_index(m: usize, n: usize) -> i64 {
    if m < n.div_ceil(2) {
        m as i64
    } else {
        m as i64 - n as i64
    }
}

/// Windowed 2D transform of a recorded history over one region.
///
/// Both windows are periodic Hann. Space is zero-padded to the next power of
/// two at least `k_padding` times the window, which interpolates between
/// wavenumber bins; time is not padded, so a commensurate record keeps the
/// drive frequency on a bin. Values are divided by the window gains and by
/// `normalization`.
pub fn windowed_spectrum(
    history: &FieldHistory,
    region: AnalysisRegion,
    k_padding: usize,
    normalization: f64,
) -> Result<SpectrumMap> {
    let grid = &history.grid;
    let cols = grid.indices_between(region.x_lo, region.x_hi);
    let nx = cols.len();
    if nx < MIN_REGION_POINTS {
        return Err(Error::RegionTooNarrow { points: nx, min: MIN_REGION_POINTS });
    }
    let nt = history.n_frames();
    if nt < 4 {
        return Err(Error::InvalidInput(format!("history holds {nt} frames, need at least 4")));
    }
    if !(normalization > 0.0) {
        return Err(Error::validation("normalization", "must be > 0"));
    }
    let nk = (nx * k_padding.max(1)).next_power_of_two();
    let wx = hann(nx);
    let wt = hann(nt);
    let gain = (wx.iter().sum::<f64>(), wt.iter().sum::<f64>());

    let mut planner = FftPlanner::new();
    let fft_x = planner.plan_fft_forward(nk);
    let fft_t = planner.plan_fft_inverse(nt);

    // Spatial transform of each frame, rows = time.
    let mut rows = vec![C64::new(0.0, 0.0); nt * nk];
    for (j, row) in rows.chunks_mut(nk).enumerate() {
        let frame = history.frame(j);
        for (slot, (i, w)) in row.iter_mut().zip(cols.clone().zip(&wx)) {
            *slot = frame[i] * (w * wt[j]);
        }
        fft_x.process(row);
    }

    let x_lo = grid.x(cols.start);
    let t0 = history.time(0);
    let k_axis: Vec<f64> = (0..nk).map(|p| 2.0 * PI * (p as i64 - (nk / 2) as i64) as f64 / (nk as f64 * grid.dx)).collect();
    let omega_axis: Vec<f64> =
        (0..nt).map(|p| 2.0 * PI * (p as i64 - (nt / 2) as i64) as f64 / (nt as f64 * history.dt_record)).collect();
    let scale = 1.0 / (gain.0 * gain.1 * normalization);

    let mut values = vec![C64::new(0.0, 0.0); nt * nk];
    let mut column = vec![C64::new(0.0, 0.0); nt];
    for m in 0..nk {
        for (j, c) in column.iter_mut().enumerate() {
            *c = rows[j * nk + m];
        }
        fft_t.process(&mut column);
        let pk = (signed_index(m, nk) + (nk / 2) as i64) as usize;
        let k = k_axis[pk];
        let shift_x = C64::from_polar(scale, -k * x_lo);
        for (q, c) in column.iter().enumerate() {
            let pw = (signed_index(q, nt) + (nt / 2) as i64) as usize;
            let shift_t = C64::from_polar(1.0, omega_axis[pw] * t0);
            values[pw * nk + pk] = c * shift_x * shift_t;
        }
    }
    Ok(SpectrumMap {
        region,
        k_axis,
        omega_axis,
        values,
        normalization,
        points: nx,
        frames: nt,
        gain,
        resolution: (2.0 * PI / (nx as f64 * grid.dx), 2.0 * PI / (nt as f64 * history.dt_record)),
    })
}
