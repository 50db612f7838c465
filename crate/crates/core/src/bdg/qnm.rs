use serde::{Deserialize, Serialize};

use crate::bdg::modes::{BdgMode, NormClass};
use crate::error::{Error, Result};

/// Selection window for the horizon resonance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnmSearch {
    /// Upper edge of the Hawking window [1/ps].
    pub omega_max: f64,
    /// Highest Re ω considered [1/ps].
    pub omega_cutoff: f64,
    pub horizon_x: f64,
    /// Largest admissible distance of the mode centre from the horizon [μm].
    pub max_distance: f64,
    /// Participation length above which a mode counts as extended [μm].
    pub max_localization: f64,
    /// Factored loss rate γ [1/ps].
    pub gamma: f64,
}

impl QnmSearch {
    pub fn new(omega_max: f64, omega_cutoff: f64, horizon_x: f64, gamma: f64) -> Self {
        QnmSearch { omega_max, omega_cutoff, horizon_x, max_distance: 20.0, max_localization: 100.0, gamma }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QnmEstimate {
    /// Re ω [1/ps].
    pub omega_qnm: f64,
    /// Total linewidth γ − 2 Im ω [1/ps].
    pub gamma_qnm: f64,
    /// Linewidth without the factored loss, −2 Im ω [1/ps].
    pub gamma_radiative: f64,
    pub q: f64,
    pub mode: BdgMode,
}

impl QnmEstimate {
    fn from_mode(mode: &BdgMode, gamma: f64) -> Self {
        let gamma_qnm = mode.linewidth(gamma);
        QnmEstimate {
            omega_qnm: mode.omega.re,
            gamma_qnm,
            gamma_radiative: -2.0 * mode.omega.im,
            q: mode.omega.re / gamma_qnm,
            mode: mode.clone(),
        }
    }
}

/// Picks the unique zero-norm mode above the Hawking window whose centre
/// lies near the horizon.
///
/// Complex eigenvalues of the pseudo-Hermitian operator come in conjugate
/// pairs; the pair is counted once and represented by its decaying member.
pub fn find_qnm(modes: &[BdgMode], search: &QnmSearch) -> Result<QnmEstimate> {
    let mut hits: Vec<&BdgMode> = modes
        .iter()
        .filter(|m| m.classification == NormClass::Zero)
        .filter(|m| m.omega.re > search.omega_max && m.omega.re < search.omega_cutoff)
        .filter(|m| (m.center - search.horizon_x).abs() <= search.max_distance)
        .filter(|m| m.localization <= search.max_localization)
        .collect();
    hits.sort_by(|a, b| a.omega.re.total_cmp(&b.omega.re));

    let mut clusters: Vec<&BdgMode> = Vec::new();
    for m in hits {
        match clusters.last_mut() {
            Some(last) if same_pair(last, m) => {
                if m.omega.im < last.omega.im {
                    *last = m;
                }
            }
            _ => clusters.push(m),
        }
    }
    match clusters.as_slice() {
        [] => Err(Error::NoQnmFound),
        [only] => Ok(QnmEstimate::from_mode(only, search.gamma)),
        many => Err(Error::MultipleQnmCandidates(
            many.iter().map(|m| QnmEstimate::from_mode(m, search.gamma)).collect(),
        )),
    }
}

fn same_pair(a: &BdgMode, b: &BdgMode) -> bool {
    let scale = a.omega.norm().max(b.omega.norm()).max(1e-9);
    (a.omega.re - b.omega.re).abs() <= 1e-7 * scale && (a.omega.im + b.omega.im).abs() <= 1e-7 * scale
}
