use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::wavelet_bank::WindowShape;

/// Parameters that fully determine a scattering descriptor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DescriptorConfig {
    /// Signal length N (samples).
    pub signal_length: usize,
    /// Bands per octave of the first-order bank.
    #[serde(default = "default_q1")]
    pub q1: u32,
    /// Bands per octave of the envelope (second-order) bank.
    #[serde(default = "default_q2")]
    pub q2: u32,
    /// Lowest centre frequency N₀, in cycles per signal.
    #[serde(default = "default_min_frequency")]
    pub min_frequency: f64,
    /// Number of octave scales along log-frequency.
    #[serde(default = "default_alpha")]
    pub alpha: usize,
    #[serde(default = "yes")]
    pub include_order2: bool,
    #[serde(default = "yes")]
    pub include_freq_scattering: bool,
    /// Adds order-1 (and optionally order-2) moments of a Q=1 bank.
    #[serde(default)]
    pub include_dyadic_extra_bank: bool,
    #[serde(default = "yes")]
    pub dyadic_extra_order2: bool,
    #[serde(default)]
    pub window_shape: WindowShape,
}

fn default_q1() -> u32 {
    4
}
fn default_q2() -> u32 {
    1
}
fn default_min_frequency() -> f64 {
    4.0
}
fn default_alpha() -> usize {
    2
}
fn yes() -> bool {
    true
}

impl DescriptorConfig {
    /// Q₁ = 4, Q₂ = 1, N₀ = 4, α = 2 with frequency scattering.
    pub fn new(signal_length: usize) -> Self {
        DescriptorConfig {
            signal_length,
            q1: default_q1(),
            q2: default_q2(),
            min_frequency: default_min_frequency(),
            alpha: default_alpha(),
            include_order2: true,
            include_freq_scattering: true,
            include_dyadic_extra_bank: false,
            dyadic_extra_order2: true,
            window_shape: WindowShape::Gaussian,
        }
    }

    pub fn with_q(mut self, q1: u32, q2: u32) -> Self {
        self.q1 = q1;
        self.q2 = q2;
        self
    }

    pub fn with_min_frequency(mut self, n0: f64) -> Self {
        self.min_frequency = n0;
        self
    }

    pub fn with_alpha(mut self, alpha: usize) -> Self {
        self.alpha = alpha;
        self
    }

    pub fn with_order2(mut self, on: bool) -> Self {
        self.include_order2 = on;
        self
    }

    pub fn with_freq_scattering(mut self, on: bool) -> Self {
        self.include_freq_scattering = on;
        self
    }

    pub fn with_dyadic_extra(mut self, on: bool) -> Self {
        self.include_dyadic_extra_bank = on;
        self
    }

    /// Stable hex digest of every generating parameter.
    pub fn digest(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        let mut hasher = Sha256::new();
        hasher.update(b"scatsynth-descriptor-v1\0");
        hasher.update(canonical.as_bytes());
        hex::encode(&hasher.finalize()[..8])
    }
}
