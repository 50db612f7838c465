//! Probe spectroscopy: windowed Fourier maps, channel readout, frequency
//! sweeps, resonance fits and norm-flux bookkeeping.

mod balance;
mod extract;
mod fit;
mod ridges;
mod spectrum;
mod sweep;

pub use balance::{energy_balance_check, EnergyBalance};
pub use extract::{extract_channel_amplitudes, ChannelAmplitudes, ChannelReading, BOX_HALF_WIDTH, MEASURED};
pub use fit::{breit_wigner_fit, prominent_peak, BreitWignerFit, Transmission};
pub use ridges::{lda_ridge_offsets, RidgePoint, RIDGE_SEARCH_BINS};
pub use spectrum::{windowed_spectrum, AnalysisRegion, SpectrumMap, MIN_REGION_POINTS};
pub use sweep::{
    probe_frequencies, probe_response, probe_response_with_slices, run_sweep, ScatterSweepResult, SpectrumSlices,
    SweepConfig, SweepEntry, SweepHydro, SweepOutcome, SLICE_K_MAX,
};
