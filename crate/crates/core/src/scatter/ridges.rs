use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{dispersion_roots, LocalHydro};
use crate::scatter::spectrum::SpectrumMap;

/// Search half-width around each predicted wavevector, in unpadded bins.
pub const RIDGE_SEARCH_BINS: f64 = 3.0;

/// Measured ridge position next to one predicted dispersion root.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RidgePoint {
    /// [1/ps]
    pub omega: f64,
    pub branch: i8,
    /// Predicted wavevector [1/μm].
    pub k_lda: f64,
    /// Peak of the spectral power nearest the prediction [1/μm].
    pub k_ridge: f64,
    /// (k_ridge − k_lda) over the unpadded k resolution.
    pub offset_bins: f64,
    /// |k_ridge − k_lda|/|k_lda|.
    pub relative: f64,
}

/// Locates the noise-spectrum ridge next to every real dispersion root at
/// each frequency in `omegas`.
///
/// Power is averaged over ±`smoothing` frequency rows to tame the
/// single-realisation speckle of a noise record. Roots outside the k axis or
/// closer than the search box to the axis ends are skipped.
pub fn lda_ridge_offsets(map: &SpectrumMap, hydro: &LocalHydro, omegas: &[f64], smoothing: usize) -> Result<Vec<RidgePoint>> {
    let nk = map.k_axis.len();
    let nw = map.omega_axis.len();
    let res = map.resolution.0;
    let step = map.k_axis[1] - map.k_axis[0];
    let reach = (RIDGE_SEARCH_BINS * res / step).ceil() as usize;
    let mut out = Vec::new();
    for &omega in omegas {
        let Some(iw) = SpectrumMap::nearest(&map.omega_axis, omega) else { continue };
        let rows = iw.saturating_sub(smoothing)..=(iw + smoothing).min(nw - 1);
        let power: Vec<f64> = (0..nk).map(|q| rows.clone().map(|r| map.value(r, q).norm_sqr()).sum()).collect();
        for (k, branch, _) in dispersion_roots(map.omega_axis[iw], hydro)? {
            let Some(ik) = SpectrumMap::nearest(&map.k_axis, k) else { continue };
            if ik < reach || ik + reach >= nk {
                continue;
            }
            let best = (ik - reach..=ik + reach).max_by(|&a, &b| power[a].total_cmp(&power[b])).unwrap();
            let k_ridge = map.k_axis[best];
            out.push(RidgePoint {
                omega: map.omega_axis[iw],
                branch,
                k_lda: k,
                k_ridge,
                offset_bins: (k_ridge - k) / res,
                relative: (k_ridge - k).abs() / k.abs().max(1e-300),
            });
        }
    }
    Ok(out)
}
