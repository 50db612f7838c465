mod config;
mod files;
mod pipeline;
mod report;
mod stages;
pub mod svg;

pub use config::{
    AnalysisSection, DefectSection, GridSection, LoadedConfig, ModelChoice, OutputSection, ParamsSection, ProbeSection,
    PumpSection, RunConfig, SweepSection,
};
pub use files::{format_number, read_history, read_json, write_atomic, write_history, write_json, CsvTable, HistoryHeader};
pub use pipeline::{Checkpoint, Stage, StageStatus, Workspace};
pub use report::write_report;
pub use stages::{
    fit_transmission, lda_curves, run_stage, BdgResult, BistabilityResult, CroppedMap, DispersionResult, DispersionSide,
    FitResult, ModeRow, RunOptions, StageReport, SteadyResult, SweepStageResult,
};
