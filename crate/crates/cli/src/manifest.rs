//! Run manifests: a JSON record of what a run produced and under which
//! configuration, so results can be traced back to exact parameters.
//! Timing fields vary between otherwise identical runs; everything else
//! in a run's output is bit-deterministic.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::{Deserialize, Serialize};

use crate::config::PipelineConfig;

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct ImageRecord {
    pub id: String,
    pub input: PathBuf,
    /// Wall-clock of this image's pipeline, in milliseconds.
    pub wall_ms: u64,
    /// Every file the pipeline wrote for this image.
    pub artifacts: Vec<PathBuf>,
}

#[derive(Clone, PartialEq, Debug, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: PipelineConfig,
    pub images: Vec<ImageRecord>,
    /// Aggregate outputs (reports) not tied to a single image.
    pub reports: Vec<PathBuf>,
}

impl RunManifest {
    pub fn new(command: &str, config: &PipelineConfig) -> Self {
        Self {
            tool: "vesselkit".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: command.into(),
            config: config.clone(),
            images: Vec::new(),
            reports: Vec::new(),
        }
    }

    /// Loads an existing manifest to append to, or starts a fresh one;
    /// single-stage invocations use this to accumulate a record across
    /// a manually composed pipeline.
    pub fn load_or_new(path: &Path, command: &str, config: &PipelineConfig) -> Result<Self> {
        if path.exists() {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("reading manifest {}", path.display()))?;
            let mut m: RunManifest = serde_json::from_str(&text)
                .with_context(|| format!("parsing manifest {}", path.display()))?;
            m.command = format!("{} + {}", m.command, command);
            Ok(m)
        } else {
            Ok(Self::new(command, config))
        }
    }

    pub fn record_image(&mut self, record: ImageRecord) {
        self.images.push(record);
    }

    pub fn record_report(&mut self, path: PathBuf) {
        self.reports.push(path);
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self).context("serializing manifest")?;
        std::fs::write(path, json)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(())
    }
}
