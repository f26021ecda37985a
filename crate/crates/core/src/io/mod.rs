//! File formats: WAV audio, PNG scalograms, JSON descriptors and run manifests.

pub mod descriptor_file;
pub mod manifest;
pub mod render;
pub mod wav;

pub use descriptor_file::{DescriptorDocument, DescriptorMetadata};
pub use manifest::{OutputPaths, RunManifest};
pub use render::{render_scalogram, scalogram_image};
pub use wav::{coerce_length, load_wav, save_wav, AudioBuffer, LengthPolicy, WavFormat};
