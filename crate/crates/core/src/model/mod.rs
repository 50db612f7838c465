//! Analytic mean-field and linear-response formulas: no time evolution and no
//! spatial discretisation live here.

mod channels;
mod eos;
mod hydro;
mod metric;
pub(crate) mod params;
pub mod poly;

pub use channels::{
    channel_map, dispersion_roots, frequency_window, BandEdge, Channel, ChannelLabel, ChannelSet, Direction, FrequencyWindow,
    Regime, Side, BAND_EDGE_VELOCITY,
};
pub use eos::{bistability_turning_points, drive_intensity, equation_of_state_roots, TurningPoint};
pub use hydro::{dispersion_lab_frame, local_hydro, LocalHydro};
pub use metric::{metric_at, MetricCoefficients};
pub use params::{DefectPotential, PolaritonParams, PumpProfile};
