use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::config::RunConfig;
use crate::io::files::{read_json, write_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Stage {
    Steady,
    Bistability,
    DispersionMap,
    Bdg,
    Sweep,
    Fit,
    Report,
}

impl Stage {
    /// Execution order of a full run.
    pub const ALL: [Stage; 7] =
        [Stage::Steady, Stage::Bistability, Stage::DispersionMap, Stage::Bdg, Stage::Sweep, Stage::Fit, Stage::Report];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Steady => "steady",
            Stage::Bistability => "bistability",
            Stage::DispersionMap => "dispersion-map",
            Stage::Bdg => "bdg",
            Stage::Sweep => "sweep",
            Stage::Fit => "fit",
            Stage::Report => "report",
        }
    }

    /// Stages whose checkpoints this one reads. A sweep over explicit
    /// energies does not need the QNM estimate.
    pub fn dependencies(self, config: &RunConfig) -> Vec<Stage> {
        match self {
            Stage::Steady | Stage::Bistability | Stage::Report => vec![],
            Stage::DispersionMap | Stage::Bdg => vec![Stage::Steady],
            Stage::Sweep if config.sweep.energies.is_some() => vec![Stage::Steady],
            Stage::Sweep => vec![Stage::Steady, Stage::Bdg],
            Stage::Fit => vec![Stage::Sweep, Stage::Bdg],
        }
    }

    pub fn checkpoint_name(self) -> String {
        format!("{}.checkpoint.json", self.name())
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Stage {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Stage::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::InvalidInput(format!("unknown stage '{s}'")))
    }
}

/// Stage output plus the configuration it was produced under.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Checkpoint<T> {
    pub stage: Stage,
    pub config_hash: String,
    pub payload: T,
}

#[derive(Deserialize)]
struct CheckpointHeader {
    stage: Stage,
    config_hash: String,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StageStatus {
    Valid,
    /// No checkpoint file.
    Missing,
    /// A checkpoint exists but was produced under another configuration.
    Stale,
    /// The stage's own checkpoint is fine but an upstream one is not.
    UpstreamInvalid(Stage),
}

/// Output directory of one configuration.
#[derive(Clone, Debug)]
pub struct Workspace {
    pub config: RunConfig,
    pub hash: String,
    pub out: PathBuf,
}

impl Workspace {
    pub fn new(config: RunConfig, out: impl Into<PathBuf>) -> Self {
        let hash = config.hash();
        Workspace { config, hash, out: out.into() }
    }

    pub fn path(&self, file: &str) -> PathBuf {
        self.out.join(file)
    }

    pub fn checkpoint_path(&self, stage: Stage) -> PathBuf {
        self.path(&stage.checkpoint_name())
    }

    fn own_status(&self, stage: Stage) -> StageStatus {
        let path = self.checkpoint_path(stage);
        if !path.exists() {
            return StageStatus::Missing;
        }
        match read_json::<CheckpointHeader>(&path) {
            Ok(h) if h.stage == stage && h.config_hash == self.hash => StageStatus::Valid,
            _ => StageStatus::Stale,
        }
    }

    /// Valid only when the stage's checkpoint and every upstream one are.
    pub fn status(&self, stage: Stage) -> StageStatus {
        match self.own_status(stage) {
            StageStatus::Valid => {}
            other => return other,
        }
        for dep in stage.dependencies(&self.config) {
            if self.status(dep) != StageStatus::Valid {
                return StageStatus::UpstreamInvalid(dep);
            }
        }
        StageStatus::Valid
    }

    pub fn save<T: Serialize>(&self, stage: Stage, payload: &T) -> Result<PathBuf> {
        let path = self.checkpoint_path(stage);
        write_json(&path, &Checkpoint { stage, config_hash: self.hash.clone(), payload })?;
        Ok(path)
    }

    /// Reads an upstream checkpoint on behalf of `stage`.
    pub fn load<T: DeserializeOwned>(&self, stage: Stage, upstream: Stage) -> Result<T> {
        let path = self.checkpoint_path(upstream);
        if self.status(upstream) != StageStatus::Valid {
            return Err(Error::MissingUpstreamArtifact {
                stage: stage.name().into(),
                upstream: upstream.name().into(),
                path,
            });
        }
        Ok(read_json::<Checkpoint<T>>(&path)?.payload)
    }

    /// Reads a checkpoint if it is valid, for optional consumers such as the
    /// report.
    pub fn load_optional<T: DeserializeOwned>(&self, stage: Stage) -> Option<T> {
        if self.status(stage) != StageStatus::Valid {
            return None;
        }
        read_json::<Checkpoint<T>>(&self.checkpoint_path(stage)).ok().map(|c| c.payload)
    }

    /// Stages to execute, dependencies first, to produce `target`; the whole
    /// pipeline when `None`. Probe stages are left out of a full run when the
    /// config has no probe section.
    pub fn plan(&self, target: Option<Stage>) -> Vec<Stage> {
        fn visit(config: &RunConfig, s: Stage, order: &mut Vec<Stage>) {
            for d in s.dependencies(config) {
                visit(config, d, order);
            }
            if !order.contains(&s) {
                order.push(s);
            }
        }
        let mut order = Vec::new();
        match target {
            Some(s) => visit(&self.config, s, &mut order),
            None => Stage::ALL
                .into_iter()
                .filter(|s| self.config.probe.is_some() || !matches!(s, Stage::Sweep | Stage::Fit))
                .for_each(|s| visit(&self.config, s, &mut order)),
        }
        order
    }
}
