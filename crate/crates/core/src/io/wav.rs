use std::path::Path;

use hound::{SampleFormat as HoundFormat, WavReader, WavSpec, WavWriter};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Mono audio at a nominal `[-1, 1]` scale.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
    /// Channel count of the source file; samples are always mono.
    pub channels: u16,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WavFormat {
    Pcm16,
    Float32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LengthPolicy {
    #[default]
    Truncate,
    ZeroPad,
}

/// Reads 16-bit PCM or 32-bit float WAV; multichannel frames are averaged.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioBuffer> {
    let mut reader = WavReader::open(path)?;
    let spec = reader.spec();
    let channels = spec.channels.max(1);
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (HoundFormat::Int, 16) => {
            reader.samples::<i16>().map(|s| s.map(|v| v as f64 / 32768.0)).collect::<std::result::Result<_, _>>()?
        }
        (HoundFormat::Float, 32) => {
            reader.samples::<f32>().map(|s| s.map(|v| v as f64)).collect::<std::result::Result<_, _>>()?
        }
        (fmt, bits) => {
            return Err(Error::UnsupportedFormat(format!("{bits}-bit {fmt:?} WAV")));
        }
    };
    let c = channels as usize;
    let samples: Vec<f64> = interleaved.chunks_exact(c).map(|frame| frame.iter().sum::<f64>() / c as f64).collect();
    if samples.iter().any(|v| !v.is_finite()) {
        return Err(Error::UnsupportedFormat("non-finite samples".into()));
    }
    Ok(AudioBuffer { samples, sample_rate: spec.sample_rate, channels })
}

pub fn save_wav(path: impl AsRef<Path>, samples: &[f64], sample_rate: u32, format: WavFormat) -> Result<()> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: match format {
            WavFormat::Pcm16 => 16,
            WavFormat::Float32 => 32,
        },
        sample_format: match format {
            WavFormat::Pcm16 => HoundFormat::Int,
            WavFormat::Float32 => HoundFormat::Float,
        },
    };
    let mut writer = WavWriter::create(path, spec)?;
    for &v in samples {
        match format {
            WavFormat::Pcm16 => writer.write_sample((v * 32768.0).round().clamp(-32768.0, 32767.0) as i16)?,
            WavFormat::Float32 => writer.write_sample(v as f32)?,
        }
    }
    writer.finalize()?;
    Ok(())
}

/// Fits `samples` to `target` samples, or to a power of two when `target` is
/// `None` (the largest one not above the length when truncating, the
/// smallest one not below it when padding).
pub fn coerce_length(mut samples: Vec<f64>, target: Option<usize>, policy: LengthPolicy) -> Vec<f64> {
    let len = samples.len();
    let n = target.unwrap_or_else(|| match policy {
        LengthPolicy::Truncate if len > 0 => 1 << (usize::BITS - 1 - len.leading_zeros()),
        LengthPolicy::Truncate => 0,
        LengthPolicy::ZeroPad => len.next_power_of_two(),
    });
    if n <= len {
        samples.truncate(n);
    } else {
        match policy {
            LengthPolicy::ZeroPad => samples.resize(n, 0.0),
            // A fixed target longer than the file is always padded.
            LengthPolicy::Truncate => samples.resize(n, 0.0),
        }
    }
    samples
}
