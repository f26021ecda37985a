use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::DescriptorConfig;
use crate::error::Result;
use crate::synthesis::{StopReason, SynthesisConfig};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub wav: PathBuf,
    pub log: PathBuf,
    pub error_csv: PathBuf,
    pub before_png: PathBuf,
    pub after_png: PathBuf,
}

/// Everything needed to re-run a synthesis and reproduce its WAV bit for bit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: u32,
    pub tool_version: String,
    pub inputs: Vec<PathBuf>,
    pub descriptor_config: DescriptorConfig,
    pub digest: String,
    pub synthesis: SynthesisConfig,
    pub seed: u64,
    pub sample_rate: u32,
    pub outputs: OutputPaths,
    pub iterations: usize,
    pub achieved_error: f64,
    pub stop_reason: StopReason,
}

impl RunManifest {
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }
}
