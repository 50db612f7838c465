use serde::{Deserialize, Serialize};

use crate::model::hydro::LocalHydro;

/// Painlevé-Gullstrand acoustic line element
/// ds² = (c² − v²)dt² + 2(−v)dt dx + (−1)dx².
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricCoefficients {
    /// c_B² − v₀² [μm²/ps²].
    pub g_tt: f64,
    /// −v₀ [μm/ps].
    pub g_tx: f64,
    /// Always −1.
    pub g_xx: f64,
}

pub fn metric_at(hydro: &LocalHydro) -> MetricCoefficients {
    MetricCoefficients { g_tt: hydro.c_b * hydro.c_b - hydro.v0 * hydro.v0, g_tx: -hydro.v0, g_xx: -1.0 }
}

impl MetricCoefficients {
    /// True where the flow is supersonic.
    pub fn inside_horizon(&self) -> bool {
        self.g_tt < 0.0
    }
}
