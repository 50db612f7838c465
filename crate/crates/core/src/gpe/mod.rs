//! Time integration of the driven-dissipative Gross-Pitaevskii equation.
//!
//! The field is carried in the frame rotating at the pump frequency,
//! ψ(x, t) = φ(x, t) e^{−iω_p t}, so a steady state is time independent:
//!
//! i∂ₜφ = [−(ħ/2m)∂ₓ² + V/ħ − (ω_p − ω₀) + g|φ|² − iγ/2 − iκ(x)]φ + F(x) + drives
//!
//! where κ is the absorbing mask.

mod cavity;
mod drive;
mod grid;
mod history;
mod runs;
mod steady;
mod stepper;

pub use cavity::{Absorber, Cavity};
pub use drive::{DriveKind, DriveTerm};
pub use grid::{absorbing_mask, stability_bound, SimGrid};
pub use history::FieldHistory;
pub use runs::{run_with_noise, run_with_probe, ProbeTiming, ResponseModel};
pub use steady::{find_steady_state, BackgroundState, SteadyOptions};
pub use stepper::{FieldState, LinearStepper, Stepper};
