use faer::Mat;
use serde::{Deserialize, Serialize};

use crate::gpe::{BackgroundState, Cavity};
use crate::model::PolaritonParams;
use crate::C64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Boundary {
    Periodic,
}

/// Dense 2N×2N Bogoliubov matrix acting on (u, v).
pub struct BdgOperator {
    pub matrix: Mat<C64>,
    pub n_points: usize,
    /// Grid spacing [μm].
    pub dx: f64,
    /// Left edge [μm].
    pub x0: f64,
    pub boundary: Boundary,
}

// Fourth-order central stencils at offsets −2..=2, before dividing by h or h².
const FIRST: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];
const SECOND: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

/// Assembles the operator on the background's density and velocity
/// profiles, including the external potential.
pub fn assemble_bdg(background: &BackgroundState, cavity: &Cavity) -> BdgOperator {
    BdgOperator::from_profiles(
        &background.n0,
        &background.v0,
        &cavity.potential(),
        &cavity.params,
        cavity.grid.dx,
        cavity.grid.x0,
    )
}

impl BdgOperator {
    /// Builds L = [[A, B], [−B, −A*]] with B = g n and
    ///
    /// A = V − δ_eff(v) + 2 g n − (ħ/2m)∂ₓ² − (i/2)(v∂ₓ + ∂ₓv).
    ///
    /// The symmetrised drift equals −iv∂ₓ − (i/2)(∂ₓv) and keeps the discrete
    /// operator exactly pseudo-Hermitian, so complex eigenvalues carry zero
    /// norm to round-off.
    pub fn from_profiles(
        density: &[f64],
        velocity: &[f64],
        potential: &[f64],
        params: &PolaritonParams,
        dx: f64,
        x0: f64,
    ) -> Self {
        let n = density.len();
        let hm = params.hbar_over_m();
        let g = params.g();
        let mut a = Mat::<C64>::zeros(n, n);
        for i in 0..n {
            for (s, (d1, d2)) in FIRST.iter().zip(SECOND).enumerate() {
                let j = (i as isize + s as isize - 2).rem_euclid(n as isize) as usize;
                let kinetic = -0.5 * hm * d2 / (dx * dx);
                let drift = -0.5 * (velocity[i] + velocity[j]) * d1 / dx;
                a[(i, j)] += C64::new(kinetic, drift);
            }
            let local = potential[i] - params.delta_eff(velocity[i]) + 2.0 * g * density[i];
            a[(i, i)] += C64::new(local, 0.0);
        }
        let matrix = Mat::<C64>::from_fn(2 * n, 2 * n, |r, c| match (r < n, c < n) {
            (true, true) => a[(r, c)],
            (false, false) => -a[(r - n, c - n)].conj(),
            (true, false) if r == c - n => C64::new(g * density[r], 0.0),
            (false, true) if r - n == c => C64::new(-g * density[c], 0.0),
            _ => C64::new(0.0, 0.0),
        });
        BdgOperator { matrix, n_points: n, dx, x0, boundary: Boundary::Periodic }
    }

    pub fn dim(&self) -> usize {
        2 * self.n_points
    }
}
