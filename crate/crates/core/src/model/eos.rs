use serde::{Deserialize, Serialize};

use crate::model::params::PolaritonParams;

/// Drive intensity |F|² [1/(μm·ps²)] that sustains density `n0` at detuning
/// `delta` [1/ps]: n[(g n − δ)² + γ²/4].
pub fn drive_intensity(n0: f64, delta: f64, params: &PolaritonParams) -> f64 {
    let detuned = params.g() * n0 - delta;
    let half_loss = 0.5 * params.gamma();
    n0 * (detuned * detuned + half_loss * half_loss)
}

/// One extremum of the S-curve |F|²(n).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TurningPoint {
    /// Density at the extremum [1/μm].
    pub n0: f64,
    /// Drive intensity |F|² there [1/(μm·ps²)].
    pub drive_sq: f64,
}

/// Extrema of the S-curve for a fluid moving at `v0`, ordered by density.
///
/// The first entry is the local maximum of |F|² (where the lower branch ends),
/// the second the local minimum (where the upper branch ends). At the critical
/// detuning δ/γ = √3/2 both coincide. Below it the response is single-valued
/// and `None` is returned.
pub fn bistability_turning_points(v0: f64, params: &PolaritonParams) -> Option<[TurningPoint; 2]> {
    let delta = params.delta_eff(v0);
    let g = params.g();
    let gamma = params.gamma();
    let disc = delta * delta - 0.75 * gamma * gamma;
    // Tolerate round-off right at the critical ratio.
    if delta <= 0.0 || disc < -1e-10 * delta * delta {
        return None;
    }
    let root = disc.max(0.0).sqrt();
    let point = |n0: f64| TurningPoint { n0, drive_sq: drive_intensity(n0, delta, params) };
    Some([point((2.0 * delta - root) / (3.0 * g)), point((2.0 * delta + root) / (3.0 * g))])
}

/// All non-negative densities compatible with a homogeneous pump of amplitude
/// `f_p` on a fluid moving at `v0`, ascending.
///
/// Each monotone stretch of the cubic between its turning points is bracketed
/// and bisected to machine precision, so nearly coincident roots next to a
/// turning point are still separated.
pub fn equation_of_state_roots(f_p: f64, v0: f64, params: &PolaritonParams) -> Vec<f64> {
    let target = f_p * f_p;
    if target == 0.0 {
        return vec![0.0];
    }
    let delta = params.delta_eff(v0);
    let residual = |n: f64| drive_intensity(n, delta, params) - target;

    let mut knots = vec![0.0];
    if let Some([low, high]) = bistability_turning_points(v0, params) {
        knots.push(low.n0);
        if high.n0 > low.n0 {
            knots.push(high.n0);
        }
    }
    let mut upper = knots.last().copied().unwrap_or(0.0).max(1e-12);
    while residual(upper) < 0.0 {
        upper *= 2.0;
    }
    knots.push(upper);

    let mut roots: Vec<f64> = Vec::with_capacity(3);
    for pair in knots.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        let (fa, fb) = (residual(a), residual(b));
        if fa == 0.0 {
            roots.push(a);
        } else if fa * fb < 0.0 {
            roots.push(bisect(&residual, a, b, fa));
        }
    }
    if residual(upper) == 0.0 {
        roots.push(upper);
    }
    roots.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * b.abs().max(1.0));
    roots
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if (fm < 0.0) == (fa < 0.0) {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}
