use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::C64;

/// Uniform periodic grid and time step.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimGrid {
    pub n_points: usize,
    /// Box length [μm].
    pub length: f64,
    /// Spacing, `length / n_points` [μm].
    pub dx: f64,
    /// Integration step [ps].
    pub dt: f64,
    /// Left edge [μm].
    pub x0: f64,
}

impl SimGrid {
    pub fn new(n_points: usize, length: f64, x0: f64, dt: f64) -> Result<Self> {
        if n_points < 16 || !n_points.is_power_of_two() {
            return Err(Error::validation("grid.n_points", format!("must be a power of two ≥ 16, got {n_points}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::validation("grid.length", "must be > 0"));
        }
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::validation("grid.dt", "must be > 0"));
        }
        Ok(SimGrid { n_points, length, dx: length / n_points as f64, dt, x0 })
    }

    /// Largest step that keeps the kinetic phase resolved: dx²·m/(πħ) [ps].
    pub fn stability_bound(&self, hbar_over_m: f64) -> f64 {
        stability_bound(self.dx, hbar_over_m)
    }

    pub fn check_stability(&self, hbar_over_m: f64) -> Result<()> {
        let bound = self.stability_bound(hbar_over_m);
        if self.dt > bound * (1.0 + 1e-12) {
            return Err(Error::validation("grid.dt", format!("{} ps exceeds the split-step bound {bound:.4e} ps", self.dt)));
        }
        Ok(())
    }

    pub fn x(&self, i: usize) -> f64 {
        self.x0 + i as f64 * self.dx
    }

    pub fn xs(&self) -> Vec<f64> {
        (0..self.n_points).map(|i| self.x(i)).collect()
    }

    /// Nearest grid index to `x`, clamped to the grid.
    pub fn index_of(&self, x: f64) -> usize {
        (((x - self.x0) / self.dx).round().max(0.0) as usize).min(self.n_points - 1)
    }

    /// Indices whose position lies in `[a, b)`.
    pub fn indices_between(&self, a: f64, b: f64) -> std::ops::Range<usize> {
        let lo = ((a - self.x0) / self.dx).ceil().max(0.0) as usize;
        let hi = (((b - self.x0) / self.dx).ceil().max(0.0) as usize).min(self.n_points);
        lo.min(hi)..hi
    }

    /// Angular wavenumbers in FFT order [1/μm].
    pub fn wavenumbers(&self) -> Vec<f64> {
        let n = self.n_points as i64;
        let dk = 2.0 * PI / self.length;
        (0..n).map(|j| if j < n / 2 { j as f64 * dk } else { (j - n) as f64 * dk }).collect()
    }

    /// Same grid with another time step.
    pub fn with_dt(&self, dt: f64) -> Self {
        SimGrid { dt, ..self.clone() }
    }

    /// Fourth-order periodic first derivative.
    pub fn derivative(&self, f: &[C64]) -> Vec<C64> {
        let n = f.len();
        let h = 12.0 * self.dx;
        (0..n)
            .map(|i| {
                let at = |o: isize| f[(i as isize + o).rem_euclid(n as isize) as usize];
                (at(-2) - at(-1) * 8.0 + at(1) * 8.0 - at(2)) / h
            })
            .collect()
    }
}

/// Largest split-step time step dx²/(πħ/m) [ps] that keeps the kinetic phase
/// per step at the grid Nyquist wavenumber within π/2.
pub fn stability_bound(dx: f64, hbar_over_m: f64) -> f64 {
    dx * dx / (PI * hbar_over_m)
}

/// Raised-cosine extra loss [1/ps] that rises from zero at `margin` inside
/// each edge to `strength` at the edge. Interior points get exactly zero.
pub fn absorbing_mask(grid: &SimGrid, margin: f64, strength: f64) -> Result<Vec<f64>> {
    if margin < 0.0 || margin >= grid.length / 4.0 {
        return Err(Error::validation("boundary.margin", format!("must lie in [0, length/4), got {margin}")));
    }
    if margin == 0.0 {
        return Ok(vec![0.0; grid.n_points]);
    }
    Ok((0..grid.n_points)
        .map(|i| {
            let from_left = i as f64 * grid.dx;
            let from_right = grid.length - from_left;
            let depth = from_left.min(from_right);
            if depth < margin {
                strength * 0.5 * (1.0 + (PI * depth / margin).cos())
            } else {
                0.0
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> SimGrid {
        SimGrid::new(2048, 800.0, 0.0, 0.01).unwrap()
    }

    #[test]
    fn rejects_non_power_of_two() {
        assert!(SimGrid::new(1000, 800.0, 0.0, 0.01).is_err());
    }

    #[test]
    fn mask_is_zero_inside_and_vanishes_without_margin() {
        let g = grid();
        let m = absorbing_mask(&g, 40.0, 1.0).unwrap();
        for i in g.indices_between(40.0 + 1e-9, 760.0) {
            assert_eq!(m[i], 0.0);
        }
        assert!((m[0] - 1.0).abs() < 1e-12);
        assert!(absorbing_mask(&g, 0.0, 1.0).unwrap().iter().all(|v| *v == 0.0));
        assert!(absorbing_mask(&g, 250.0, 1.0).is_err());
    }

    #[test]
    fn derivative_is_fourth_order() {
        let errors: Vec<f64> = [256usize, 512]
            .iter()
            .map(|&n| {
                let g = SimGrid::new(n, 100.0, 0.0, 0.01).unwrap();
                let k = 2.0 * PI * 3.0 / 100.0;
                let f: Vec<C64> = g.xs().iter().map(|x| C64::from_polar(1.0, k * x)).collect();
                let d = g.derivative(&f);
                d.iter().zip(&f).map(|(d, f)| (d - f * C64::new(0.0, k)).norm()).fold(0.0, f64::max)
            })
            .collect();
        assert!(errors[0] / errors[1] > 15.0, "{errors:?}");
    }

    #[test]
    fn wavenumbers_in_fft_order() {
        let g = SimGrid::new(16, 2.0 * PI, 0.0, 0.01).unwrap();
        let k = g.wavenumbers();
        assert_eq!(k[1], 1.0);
        assert_eq!(k[15], -1.0);
        assert_eq!(k[8], -8.0);
    }
}
