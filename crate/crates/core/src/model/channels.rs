use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::hydro::{dispersion_lab_frame, LocalHydro};
use crate::model::poly;

/// Roots whose lab-frame group velocity is below this magnitude [μm/ps] sit at
/// a turning point of the dispersion and carry no flux direction.
pub const BAND_EDGE_VELOCITY: f64 = 1e-4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Side {
    Upstream,
    Downstream,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Incoming,
    Outgoing,
}

/// Asymptotic scattering channels. Upstream: `In` (incident) and `Hr`
/// (reflected, the Hawking partner of the upstream side). Downstream: `P` and
/// `Down` on the positive-norm branch, `D` and `Dn` on the negative-norm
/// branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChannelLabel {
    In,
    Hr,
    P,
    D,
    Down,
    Dn,
}

impl ChannelLabel {
    pub const ALL: [ChannelLabel; 6] =
        [ChannelLabel::In, ChannelLabel::P, ChannelLabel::D, ChannelLabel::Hr, ChannelLabel::Down, ChannelLabel::Dn];

    pub fn as_str(self) -> &'static str {
        match self {
            ChannelLabel::In => "in",
            ChannelLabel::Hr => "HR",
            ChannelLabel::P => "p",
            ChannelLabel::D => "d",
            ChannelLabel::Down => "down",
            ChannelLabel::Dn => "dn",
        }
    }

    fn classify(side: Side, norm_sign: i8, direction: Direction) -> Option<Self> {
        use ChannelLabel::*;
        match (side, norm_sign > 0, direction) {
            (Side::Upstream, true, Direction::Incoming) => Some(In),
            (Side::Upstream, true, Direction::Outgoing) => Some(Hr),
            (Side::Downstream, true, Direction::Incoming) => Some(P),
            (Side::Downstream, true, Direction::Outgoing) => Some(Down),
            (Side::Downstream, false, Direction::Incoming) => Some(D),
            (Side::Downstream, false, Direction::Outgoing) => Some(Dn),
            (Side::Upstream, false, _) => None,
        }
    }
}

impl fmt::Display for ChannelLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Channel {
    pub label: ChannelLabel,
    /// Wavevector in the frame comoving with the background phase [1/μm].
    pub k: f64,
    /// +1 on the ω₊ branch, −1 on the ω₋ branch.
    pub norm_sign: i8,
    /// Lab-frame group velocity dω/dk [μm/ps].
    pub group_velocity: f64,
    pub side: Side,
    pub direction: Direction,
}

/// A real root that is not part of the scattering basis: either a zero group
/// velocity turning point, or a negative-norm upstream root that has no name
/// in the subsonic region.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BandEdge {
    pub side: Side,
    pub k: f64,
    pub norm_sign: i8,
    pub group_velocity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// ω below the upstream gap: no incident channel exists.
    BelowWindow,
    /// ω_min < ω < ω_max: three incoming and three outgoing channels.
    HawkingWindow,
    /// ω above ω_max: positive-norm two-port scattering.
    AboveWindow,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChannelSet {
    /// Probe angular frequency [1/ps].
    pub omega: f64,
    pub regime: Regime,
    pub channels: Vec<Channel>,
    pub band_edges: Vec<BandEdge>,
}

impl ChannelSet {
    pub fn find(&self, label: ChannelLabel) -> Option<&Channel> {
        self.channels.iter().find(|c| c.label == label)
    }

    /// The channel named `label`, or [`Error::NoPropagatingChannel`].
    pub fn require(&self, label: ChannelLabel) -> Result<&Channel> {
        self.find(label).ok_or(Error::NoPropagatingChannel { label, omega: self.omega })
    }

    pub fn count(&self, direction: Direction) -> usize {
        self.channels.iter().filter(|c| c.direction == direction).count()
    }
}

/// Edges of the frequency band where the horizon mixes norms.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyWindow {
    /// Upstream rest gap [1/ps].
    pub omega_min: f64,
    /// Maximum of the downstream ω₋ branch [1/ps].
    pub omega_max: f64,
    /// Wavevector where ω₋ peaks downstream [1/μm].
    pub k_at_max: f64,
}

/// Locates ω_min (upstream gap) and ω_max (top of the Doppler-lifted
/// negative-norm branch downstream).
pub fn frequency_window(upstream: &LocalHydro, downstream: &LocalHydro) -> Result<FrequencyWindow> {
    let lower = |k: f64| dispersion_lab_frame(k, downstream).1;
    let span = 4.0 * (downstream.v0.abs() + downstream.c_b) / downstream.hbar_over_m + 1.0;
    let samples = 4000;
    let step = 2.0 * span / samples as f64;
    let (mut best_k, mut best) = (0.0, f64::NEG_INFINITY);
    for i in 0..=samples {
        let k = -span + i as f64 * step;
        let w = lower(k);
        if w > best {
            best = w;
            best_k = k;
        }
    }
    let k_at_max = golden_max(&lower, best_k - step, best_k + step);
    let omega_max = lower(k_at_max);
    if omega_max <= 0.0 {
        return Err(Error::NotTranscritical(format!(
            "downstream ω₋ never reaches positive frequencies (max {omega_max:.3e} 1/ps, v = {:.3}, c_B = {:.3})",
            downstream.v0, downstream.c_b
        )));
    }
    Ok(FrequencyWindow { omega_min: upstream.gap(), omega_max, k_at_max })
}

fn golden_max(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let r = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..120 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Real solutions of ω = ω±(k) on one side, with their branch sign and group
/// velocity.
fn side_roots(omega: f64, hydro: &LocalHydro) -> Result<Vec<(f64, i8, f64)>> {
    // Squaring (ω − v k)² = (ħk²/2m)² + c²k² + M² gives a quartic in k.
    let a = 0.5 * hydro.hbar_over_m;
    let (v, c) = (hydro.v0, hydro.c_b);
    let coeffs = [a * a, 0.0, c * c - v * v, 2.0 * omega * v, hydro.gap_sq - omega * omega];
    let scale = omega.abs().max(1.0);
    let mut out: Vec<(f64, i8, f64)> = Vec::new();
    for k in poly::real_roots(&coeffs, 1e-7)? {
        let s = hydro.comoving_sq(k).max(0.0).sqrt();
        let sign: i8 = if omega - v * k >= 0.0 { 1 } else { -1 };
        let branch = v * k + f64::from(sign) * s;
        if (branch - omega).abs() > 1e-9 * scale {
            continue;
        }
        if out.iter().any(|(k0, s0, _)| *s0 == sign && (k0 - k).abs() <= 1e-9 * (1.0 + k.abs())) {
            continue;
        }
        let slope = if s > 0.0 { (2.0 * a * a * k.powi(3) + c * c * k) / s } else { 0.0 };
        out.push((k, sign, v + f64::from(sign) * slope));
    }
    Ok(out)
}

/// Real wavevectors solving ω = ω±(k) on a homogeneous plateau, as
/// (k [1/μm], branch sign, lab-frame group velocity [μm/ps]).
pub fn dispersion_roots(omega: f64, hydro: &LocalHydro) -> Result<Vec<(f64, i8, f64)>> {
    side_roots(omega, hydro)
}

/// Propagating Bogoliubov channels at frequency `omega` [1/ps].
///
/// The flow runs along +x with the horizon between the two sides, so
/// upstream waves with positive group velocity and downstream waves with
/// negative group velocity move toward it.
pub fn channel_map(omega: f64, upstream: &LocalHydro, downstream: &LocalHydro) -> Result<ChannelSet> {
    if !(omega > 0.0 && omega.is_finite()) {
        return Err(Error::InvalidInput(format!("channel_map needs ω > 0, got {omega}")));
    }
    let window = frequency_window(upstream, downstream).ok();
    let omega_min = upstream.gap();
    let regime = if omega < omega_min {
        Regime::BelowWindow
    } else if window.is_some_and(|w| omega < w.omega_max) {
        Regime::HawkingWindow
    } else {
        Regime::AboveWindow
    };

    let mut channels = Vec::new();
    let mut band_edges = Vec::new();
    for (side, hydro) in [(Side::Upstream, upstream), (Side::Downstream, downstream)] {
        for (k, norm_sign, group_velocity) in side_roots(omega, hydro)? {
            let edge = BandEdge { side, k, norm_sign, group_velocity };
            if group_velocity.abs() < BAND_EDGE_VELOCITY {
                band_edges.push(edge);
                continue;
            }
            let toward_horizon = match side {
                Side::Upstream => group_velocity > 0.0,
                Side::Downstream => group_velocity < 0.0,
            };
            let direction = if toward_horizon { Direction::Incoming } else { Direction::Outgoing };
            match ChannelLabel::classify(side, norm_sign, direction) {
                Some(label) => channels.push(Channel { label, k, norm_sign, group_velocity, side, direction }),
                None => band_edges.push(edge),
            }
        }
    }
    channels.sort_by_key(|c| ChannelLabel::ALL.iter().position(|l| *l == c.label));
    Ok(ChannelSet { omega, regime, channels, band_edges })
}
