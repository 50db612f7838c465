use std::path::PathBuf;

use thiserror::Error;

use crate::bdg::QnmEstimate;
use crate::model::ChannelLabel;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("local-density formulas do not apply: {what} radicand is {value:.6e}")]
    GappedRegion { what: &'static str, value: f64 },

    #[error("no propagating {label} channel at ω = {omega:.6e} 1/ps")]
    NoPropagatingChannel { label: ChannelLabel, omega: f64 },

    #[error("flow is not transcritical: {0}")]
    NotTranscritical(String),

    #[error("numerical blow-up at t = {t:.3} ps (max |ψ|² = {peak:.3e})")]
    NumericalBlowup { t: f64, peak: f64 },

    #[error("no steady state within {t_max} ps (last residual {residual:.3e} 1/ps)")]
    NoConvergence { t_max: f64, residual: f64 },

    #[error("probe frequency {omega:.6e} 1/ps lies in the upstream gap (ω_min = {omega_min:.6e})")]
    ProbeInGap { omega: f64, omega_min: f64 },

    #[error("eigensolver failed: {0}")]
    EigenFailure(String),

    #[error("no quasinormal-mode candidate in the search window")]
    NoQnmFound,

    #[error("{} quasinormal-mode candidates, expected one", .0.len())]
    MultipleQnmCandidates(Vec<QnmEstimate>),

    #[error("analysis region holds {points} grid points, need at least {min}")]
    RegionTooNarrow { points: usize, min: usize },

    #[error("channel {label} at k = {k:.4} 1/μm lies outside the spectrum axes")]
    ChannelOffGrid { label: String, k: f64 },

    #[error("fit diverged: {0}")]
    FitDiverged(String),

    #[error("resonance not resolved: linewidth {linewidth:.3e} below two sample spacings ({spacing:.3e})")]
    PeakNotResolved { linewidth: f64, spacing: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid value for `{field}`: {constraint}")]
    Validation { field: String, constraint: String },

    #[error("stage `{stage}` needs `{}` from stage `{upstream}`", path.display())]
    MissingUpstreamArtifact { stage: String, upstream: String, path: PathBuf },

    #[error("{0}")]
    InvalidInput(String),

    #[error("i/o error on {}: {source}", path.display())]
    Io { path: PathBuf, source: std::io::Error },

    #[error("serialisation error: {0}")]
    Serde(String),
}

impl Error {
    pub(crate) fn validation(field: impl Into<String>, constraint: impl Into<String>) -> Self {
        Error::Validation { field: field.into(), constraint: constraint.into() }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
