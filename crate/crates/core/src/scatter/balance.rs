use serde::{Deserialize, Serialize};

use crate::model::ChannelLabel;
use crate::scatter::extract::ChannelAmplitudes;

/// Norm-flux bookkeeping at one probe frequency.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnergyBalance {
    pub omega: f64,
    /// v_g(|u|² − |v|²) of the incident wave, incident |u|² = 1.
    pub influx: f64,
    /// Signed sum over the outgoing channels; negative-norm channels count
    /// negatively.
    pub outflux: f64,
    /// |outflux − influx|/influx.
    pub imbalance: f64,
    /// Flux lost to the homogeneous damping between the horizon and the
    /// analysis regions, summed over outgoing channels.
    pub loss_budget: f64,
    pub fluxes: Vec<(ChannelLabel, f64)>,
}

impl EnergyBalance {
    pub fn within(&self, tolerance: f64) -> bool {
        self.imbalance < tolerance
    }
}

/// Compares the incident norm flux with the outgoing one. Pseudo-unitarity
/// makes them equal when nothing is lost, so the imbalance should vanish for
/// `gamma` = 0 and stay of order `loss_budget` otherwise. `None` when some
/// channels could not be told apart.
pub fn energy_balance_check(amplitudes: &ChannelAmplitudes, horizon_x: f64, gamma: f64) -> Option<EnergyBalance> {
    if !amplitudes.unresolved().is_empty() {
        return None;
    }
    let mut fluxes = Vec::new();
    let mut influx = 0.0;
    let mut outflux = 0.0;
    let mut loss_budget = 0.0;
    for r in &amplitudes.readings {
        // Flux away from the horizon (toward it for the incident wave).
        let f = r.norm_flux() * r.group_velocity.signum();
        fluxes.push((r.label, f));
        if r.label == ChannelLabel::In {
            influx = f;
            continue;
        }
        outflux += f;
        let region = if r.label == ChannelLabel::Hr { amplitudes.upstream } else { amplitudes.downstream };
        let distance = (region.center() - horizon_x).abs();
        if r.group_velocity != 0.0 {
            loss_budget += f.abs() * ((gamma * distance / r.group_velocity.abs()).exp() - 1.0);
        }
    }
    let imbalance = if influx != 0.0 { ((outflux - influx) / influx).abs() } else { 0.0 };
    Some(EnergyBalance { omega: amplitudes.omega_pr, influx, outflux, imbalance, loss_budget, fluxes })
}
