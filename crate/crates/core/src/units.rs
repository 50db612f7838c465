//! Physical constants and unit conversions.
//!
//! Lengths are μm, times ps, energies meV. An energy `E` [meV] corresponds to
//! the angular frequency `E / ħ` [1/ps].

/// Reduced Planck constant in meV·ps.
pub const HBAR_MEV_PS: f64 = 0.658_211_956_9;

/// Reduced Planck constant in J·s.
pub const HBAR_SI: f64 = 1.054_571_817e-34;

/// Electron rest mass in kg.
pub const ELECTRON_MASS_KG: f64 = 9.109_383_701_5e-31;

/// Converts an energy in meV to an angular frequency in 1/ps.
#[inline]
pub fn mev_to_rate(energy_mev: f64) -> f64 {
    energy_mev / HBAR_MEV_PS
}

/// Converts an angular frequency in 1/ps to an energy in meV.
#[inline]
pub fn rate_to_mev(rate: f64) -> f64 {
    rate * HBAR_MEV_PS
}

/// ħ/m for a mass in kg, expressed in μm²/ps.
///
/// The SI value in m²/s is numerically identical, since 1 m²/s = 10¹² μm² per
/// 10¹² ps.
#[inline]
pub fn hbar_over_mass(mass_kg: f64) -> f64 {
    HBAR_SI / mass_kg
}

/// Converts a rest-gap frequency M [1/ps] and a sound speed c [μm/ps] into the
/// mass parameter m = ħM/c² [kg].
#[inline]
pub fn gap_mass_kg(gap_rate: f64, sound_speed: f64) -> f64 {
    // ħ[J s]·M[10¹²/s] / (c[10⁶ m/s])²: the powers of ten cancel.
    HBAR_SI * gap_rate / (sound_speed * sound_speed)
}
