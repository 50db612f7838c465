use serde::{Deserialize, Serialize};

use crate::gpe::grid::SimGrid;
use crate::C64;

/// Space-time record of a field perturbation, one row per recorded time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FieldHistory {
    pub grid: SimGrid,
    /// Spacing between recorded frames [ps].
    pub dt_record: f64,
    /// Time of the first frame relative to the drive switch-on [ps].
    pub t_start: f64,
    /// Pump frequency of the rotating frame [1/ps].
    pub omega_p: f64,
    /// Whether the background phase has been divided out.
    pub comoving: bool,
    /// Row-major frames of length `grid.n_points`.
    pub data: Vec<C64>,
}

impl FieldHistory {
    pub fn new(grid: SimGrid, dt_record: f64, t_start: f64, omega_p: f64) -> Self {
        FieldHistory { grid, dt_record, t_start, omega_p, comoving: false, data: Vec::new() }
    }

    pub fn push(&mut self, frame: impl IntoIterator<Item = C64>) {
        let before = self.data.len();
        self.data.extend(frame);
        debug_assert_eq!(self.data.len() - before, self.grid.n_points);
    }

    pub fn n_frames(&self) -> usize {
        self.data.len() / self.grid.n_points
    }

    pub fn frame(&self, i: usize) -> &[C64] {
        let n = self.grid.n_points;
        &self.data[i * n..(i + 1) * n]
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t_start + i as f64 * self.dt_record
    }

    /// Total recorded span, frames × spacing [ps].
    pub fn duration(&self) -> f64 {
        self.n_frames() as f64 * self.dt_record
    }

    /// Multiplies every frame by a fixed spatial factor, typically
    /// e^{−iθ₀(x)} to move into the frame comoving with the background.
    pub fn to_comoving(&self, phase_factor: &[C64]) -> Self {
        let n = self.grid.n_points;
        let data = self.data.iter().enumerate().map(|(i, z)| z * phase_factor[i % n]).collect();
        FieldHistory { data, comoving: true, ..self.clone() }
    }

    /// Largest |δψ| over the record.
    pub fn peak(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, z| m.max(z.norm()))
    }
}
