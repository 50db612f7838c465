//! Simulator for a one-dimensional driven-dissipative polariton fluid that
//! flows across an acoustic horizon.
//!
//! The crate is layered bottom-up:
//!
//! * [`model`] holds the analytic mean-field and linear-response formulas
//!   (equation of state, local hydrodynamics, Bogoliubov dispersion, channel
//!   kinematics) and carries no time evolution.
//! * [`gpe`] integrates the driven-dissipative Gross-Pitaevskii equation with a
//!   split-step Fourier scheme and produces steady backgrounds and response
//!   histories.
//! * [`bdg`] assembles and diagonalises the Bogoliubov operator on a converged
//!   background and picks out the horizon quasinormal mode.
//! * [`scatter`] turns probe histories into space-time spectra, channel
//!   amplitudes, transmission spectra and a Breit-Wigner fit.
//! * [`io`] owns configuration, checkpoints, CSV/SVG artifacts and the stage
//!   pipeline used by the command-line driver.
//!
//! Internal units are μm, ps and meV, with ħ = [`units::HBAR_MEV_PS`].
//! Angular frequencies are carried in 1/ps and converted to meV only at the
//! edges.

pub mod bdg;
pub mod error;
pub mod gpe;
pub mod io;
pub mod model;
pub mod scatter;
pub mod units;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;
