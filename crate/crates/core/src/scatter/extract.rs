use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ChannelLabel, ChannelSet, Regime, Side};
use crate::scatter::spectrum::{AnalysisRegion, SpectrumMap};
use crate::C64;

/// Half-width of the extraction box in unpadded window-resolution bins, so
/// the box spans three bins.
pub const BOX_HALF_WIDTH: f64 = 1.5;

/// Readings on one side closer than this many window-resolution bins in k
/// sit inside each other's Hann main lobe and are not separable.
pub const MIN_SEPARATION_BINS: f64 = 2.0;

/// Channels read from the maps: the incident wave and the three outgoing ones.
pub const MEASURED: [ChannelLabel; 4] = [ChannelLabel::In, ChannelLabel::Hr, ChannelLabel::Down, ChannelLabel::Dn];

/// Both Fourier traces of one channel, relative to the incident amplitude.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelReading {
    pub label: ChannelLabel,
    /// Comoving wavevector [1/μm].
    pub k: f64,
    pub group_velocity: f64,
    pub norm_sign: i8,
    /// Trace at (k, ω), the u component.
    pub direct: C64,
    /// Trace at (−k, −ω), the v* component; `down*` and `dn*` for the
    /// downstream channels.
    pub conjugate: C64,
}

impl ChannelReading {
    /// Bogoliubov norm flux v_g(|u|² − |v|²), in units of the incident |u|².
    pub fn norm_flux(&self) -> f64 {
        self.group_velocity * (self.direct.norm_sqr() - self.conjugate.norm_sqr())
    }
}

/// Outgoing amplitudes at one probe frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelAmplitudes {
    pub omega_pr: f64,
    pub regime: Regime,
    /// |A_in| before normalisation, in units of the maps' normalisation.
    pub incident: f64,
    pub readings: Vec<ChannelReading>,
    /// Outgoing channels that do not propagate at this frequency.
    pub absent: Vec<ChannelLabel>,
    pub upstream: AnalysisRegion,
    pub downstream: AnalysisRegion,
    /// Box widths used, (Δk [1/μm], Δω [1/ps]) per side.
    pub box_widths: [(f64, f64); 2],
}

impl ChannelAmplitudes {
    pub fn get(&self, label: ChannelLabel) -> Option<&ChannelReading> {
        self.readings.iter().find(|r| r.label == label)
    }

    /// Whether a reading shares its peak with another channel on the same
    /// side; both then pick up the same spectral weight.
    pub fn is_unresolved(&self, label: ChannelLabel) -> bool {
        let Some(r) = self.get(label) else { return false };
        let side = |l: ChannelLabel| matches!(l, ChannelLabel::In | ChannelLabel::Hr);
        let bin = self.box_widths[usize::from(!side(label))].0 / (2.0 * BOX_HALF_WIDTH);
        self.readings
            .iter()
            .any(|o| o.label != label && side(o.label) == side(label) && (o.k - r.k).abs() < MIN_SEPARATION_BINS * bin)
    }

    pub fn unresolved(&self) -> Vec<ChannelLabel> {
        self.readings.iter().map(|r| r.label).filter(|&l| self.is_unresolved(l)).collect()
    }

    /// |direct| of a channel, `None` when absent or unresolved.
    pub fn magnitude(&self, label: ChannelLabel) -> Option<f64> {
        self.get(label).filter(|_| !self.is_unresolved(label)).map(|r| r.direct.norm())
    }

    /// |conjugate| of a channel, `None` when absent or unresolved.
    pub fn conjugate_magnitude(&self, label: ChannelLabel) -> Option<f64> {
        self.get(label).filter(|_| !self.is_unresolved(label)).map(|r| r.conjugate.norm())
    }
}

/// Value of the spectral peak belonging to a channel at (k, ω).
///
/// Inside the box, the frequency row is the one with the largest magnitude
/// at the channel's wavenumber; along that row the local maximum closest to
/// k is taken, so a neighbouring channel's lobe leaking into the box is not
/// mistaken for this one. Without a local maximum the box maximum is used.
fn peak_in_box(map: &SpectrumMap, label: &str, k: f64, omega: f64) -> Result<C64> {
    let off = || Error::ChannelOffGrid { label: label.to_string(), k };
    let ik = SpectrumMap::nearest(&map.k_axis, k).ok_or_else(off)?;
    let iw = SpectrumMap::nearest(&map.omega_axis, omega).ok_or_else(off)?;
    let span = |axis: &[f64], i: usize, half: f64| {
        let lo = (0..=i).rev().take_while(|&j| (axis[i] - axis[j]) <= half + 1e-12).last().unwrap_or(i);
        let hi = (i..axis.len()).take_while(|&j| (axis[j] - axis[i]) <= half + 1e-12).last().unwrap_or(i);
        (lo, hi)
    };
    let (w_lo, w_hi) = span(&map.omega_axis, iw, BOX_HALF_WIDTH * map.resolution.1);
    let (k_lo, k_hi) = span(&map.k_axis, ik, BOX_HALF_WIDTH * map.resolution.0);
    let row = (w_lo..=w_hi).max_by(|&a, &b| map.value(a, ik).norm().total_cmp(&map.value(b, ik).norm())).unwrap_or(iw);
    let mag = |q: usize| map.value(row, q).norm();
    let last = map.k_axis.len() - 1;
    let is_local_max = |q: usize| (q == 0 || mag(q) >= mag(q - 1)) && (q == last || mag(q) >= mag(q + 1));
    let pick = (k_lo..=k_hi)
        .filter(|&q| is_local_max(q))
        .min_by(|&a, &b| (map.k_axis[a] - k).abs().total_cmp(&(map.k_axis[b] - k).abs()))
        .or_else(|| (k_lo..=k_hi).max_by(|&a, &b| mag(a).total_cmp(&mag(b))))
        .unwrap_or(ik);
    Ok(map.value(row, pick))
}

/// Reads every measured channel from the map of its side. Values are
/// normalised by the incident trace |A_in(k_in, ω)|, so `in` reads 1.
pub fn extract_channel_amplitudes(
    upstream: &SpectrumMap,
    downstream: &SpectrumMap,
    channels: &ChannelSet,
) -> Result<ChannelAmplitudes> {
    let omega = channels.omega;
    let incident_channel = channels.require(ChannelLabel::In)?;
    let mut readings = Vec::new();
    let mut absent = Vec::new();
    for label in MEASURED {
        let Some(ch) = channels.find(label) else {
            absent.push(label);
            continue;
        };
        let map = match ch.side {
            Side::Upstream => upstream,
            Side::Downstream => downstream,
        };
        let direct = peak_in_box(map, label.as_str(), ch.k, omega)?;
        let conjugate = peak_in_box(map, &format!("{label}*"), -ch.k, -omega)?;
        readings.push(ChannelReading {
            label,
            k: ch.k,
            group_velocity: ch.group_velocity,
            norm_sign: ch.norm_sign,
            direct,
            conjugate,
        });
    }
    let incident = readings[0].direct.norm();
    debug_assert_eq!(readings[0].k, incident_channel.k);
    if !(incident > 0.0) {
        return Err(Error::InvalidInput(format!("no incident signal at ω = {omega:.4} 1/ps")));
    }
    for r in &mut readings {
        r.direct /= incident;
        r.conjugate /= incident;
    }
    let widths = |m: &SpectrumMap| (2.0 * BOX_HALF_WIDTH * m.resolution.0, 2.0 * BOX_HALF_WIDTH * m.resolution.1);
    Ok(ChannelAmplitudes {
        omega_pr: omega,
        regime: channels.regime,
        incident,
        readings,
        absent,
        upstream: upstream.region,
        downstream: downstream.region,
        box_widths: [widths(upstream), widths(downstream)],
    })
}
