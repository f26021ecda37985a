//! Scattering-moment descriptors of audio textures and synthesis of new
//! signals that match them.
//!
//! A descriptor is built from a cascade of analytic constant-Q wavelet
//! filters and modulus envelopes:
//!
//! * order 1: `mean_t |x ⋆ ψ_λ₁|`
//! * order 2: `mean_t ||x ⋆ ψ_λ₁| ⋆ ψ_λ₂|` for `λ₂ < λ₁`
//! * frequency scattering: wavelet moduli of the scalogram columns along
//!   log-frequency, averaged over time.
//!
//! [`synthesis::Synthesizer`] then drives white noise towards a target
//! descriptor with gradient descent or Levenberg-Marquardt steps built on the
//! exact descriptor Jacobian from [`jacobian`].

pub mod config;
pub mod error;
pub mod fft;
pub mod io;
pub mod jacobian;
pub mod scattering;
pub mod synthesis;
pub mod textures;
pub mod wavelet_bank;

pub use config::DescriptorConfig;
pub use error::{Error, Result};
pub use jacobian::{jacobian_dense, jacobian_jvp, jacobian_vjp, modulus_gradient, ForwardCache, ScatteringJacobian};
pub use scattering::{
    descriptor_energy, full_descriptor, scalogram, scatter_freq, scatter_order1, scatter_order2, Block, BlockCounts,
    Scalogram, ScatteringIndex, ScatteringNetwork, ScatteringVector, SignalStats,
};
pub use synthesis::{synthesize, Optimizer, SynthesisConfig, SynthesisState, Synthesizer};
pub use wavelet_bank::{frame_bounds, FilterBank, FrameBounds, LogFreqBank, MotherWavelet, WindowShape};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
