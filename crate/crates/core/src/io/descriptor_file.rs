//! Versioned JSON descriptor documents.
//!
//! ```json
//! {
//!   "version": 1,
//!   "config": { "signal_length": 16384, "q1": 4, ... },
//!   "digest": "9f2c...",
//!   "counts": { "order1": 45, "order2": 264, ... },
//!   "metadata": { "mean": 0.0, "variance": 0.1, "sample_rate": 20000, ... },
//!   "indices": [ { "kind": "Order1", "lambda1": 4.0 }, ... ],
//!   "values": [ 1.2345678901234567e-3, ... ]
//! }
//! ```
//! Values are written with 17 significant digits.

use std::path::Path;

use serde::ser::Error as _;
use serde::{Deserialize, Serialize, Serializer};
use serde_json::value::RawValue;

use crate::config::DescriptorConfig;
use crate::error::{Error, Result};
use crate::scattering::{BlockCounts, ScatteringIndex, ScatteringVector, SignalStats};

pub const DESCRIPTOR_DOCUMENT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorMetadata {
    pub mean: f64,
    pub variance: f64,
    #[serde(default)]
    pub sample_rate: Option<u32>,
    #[serde(default)]
    pub source: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorDocument {
    pub version: u32,
    pub config: DescriptorConfig,
    pub digest: String,
    pub counts: BlockCounts,
    pub metadata: DescriptorMetadata,
    pub indices: Vec<ScatteringIndex>,
    #[serde(serialize_with = "serialize_17_digits")]
    pub values: Vec<f64>,
}

fn serialize_17_digits<S: Serializer>(values: &[f64], ser: S) -> std::result::Result<S::Ok, S::Error> {
    let raw = values
        .iter()
        .map(|v| {
            if !v.is_finite() {
                return Err(S::Error::custom("descriptor values must be finite"));
            }
            RawValue::from_string(format!("{v:.16e}")).map_err(S::Error::custom)
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    raw.serialize(ser)
}

impl DescriptorDocument {
    pub fn new(
        vector: &ScatteringVector,
        config: &DescriptorConfig,
        sample_rate: Option<u32>,
        source: Option<String>,
    ) -> Result<Self> {
        if vector.config_digest != config.digest() {
            return Err(Error::DigestMismatch { left: vector.config_digest.clone(), right: config.digest() });
        }
        let stats = vector.source.unwrap_or(SignalStats { mean: 0.0, variance: 0.0 });
        Ok(DescriptorDocument {
            version: DESCRIPTOR_DOCUMENT_VERSION,
            config: config.clone(),
            digest: vector.config_digest.clone(),
            counts: vector.counts(),
            metadata: DescriptorMetadata { mean: stats.mean, variance: stats.variance, sample_rate, source },
            indices: vector.indices.clone(),
            values: vector.values.clone(),
        })
    }

    /// Checks internal consistency and converts back to a vector.
    pub fn to_vector(&self) -> Result<ScatteringVector> {
        if self.version != DESCRIPTOR_DOCUMENT_VERSION {
            return Err(Error::UnsupportedFormat(format!("descriptor version {}", self.version)));
        }
        if self.config.digest() != self.digest {
            return Err(Error::DigestMismatch { left: self.config.digest(), right: self.digest.clone() });
        }
        if self.indices.len() != self.values.len() {
            return Err(Error::LengthMismatch { expected: self.indices.len(), actual: self.values.len() });
        }
        let vector = ScatteringVector {
            indices: self.indices.clone(),
            values: self.values.clone(),
            config_digest: self.digest.clone(),
            source: Some(SignalStats { mean: self.metadata.mean, variance: self.metadata.variance }),
        };
        if vector.counts() != self.counts {
            return Err(Error::UnsupportedFormat("block counts do not match indices".into()));
        }
        Ok(vector)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, serde_json::to_string_pretty(self)?)?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}
