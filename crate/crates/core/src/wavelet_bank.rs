//! Analytic constant-Q wavelet filter banks on the DFT grid.
//!
//! Filters are stored as real transfer functions `ψ̂_λ(k)` over the N DFT bins
//! of a circular signal. Frequencies are measured in cycles per signal length,
//! so bin `k` is frequency `k` for `k < N/2` and `k - N` above. Every filter is
//! zero on the DC bin and on negative frequencies. The Nyquist bin is shared by
//! `+N/2` and `-N/2`; it stores the average of the two aliases, i.e. half of
//! `ψ̂_λ(N/2)`, which keeps Parseval's identity exact for real inputs.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::FftPair;
use num_complex::Complex64;

pub const BANK_DOCUMENT_VERSION: u32 = 1;

/// Upper frame bound slack used by the certification checks.
pub const UPPER_BOUND_SLACK: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowShape {
    /// Gaussian bump in linear frequency with the Morlet zero-mean
    /// correction (Morlet-style analytic wavelet).
    #[default]
    Gaussian,
    /// Single cosine lobe with compact support.
    RaisedCosine,
}

/// Frequency-domain mother wavelet centred at 1.
///
/// `bandwidth_factor` is the Gaussian standard deviation, or the half-width
/// of the cosine lobe, in units of the centre frequency. The peak amplitude
/// is `sqrt(2)` so that a bank of analytic filters can reach the upper frame
/// bound before global renormalisation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MotherWavelet {
    pub center_frequency: f64,
    pub bandwidth_factor: f64,
    pub window_shape: WindowShape,
}

impl MotherWavelet {
    /// Mother wavelet whose dilations by `2^(1/q)` cross at half power.
    pub fn for_q_factor(q: f64, window_shape: WindowShape) -> Self {
        let ratio = 2f64.powf(1.0 / q);
        // Offset of the crossing point from the centre, relative to the centre.
        let d = (ratio - 1.0) / (ratio + 1.0);
        let bandwidth_factor = match window_shape {
            WindowShape::Gaussian => d / std::f64::consts::LN_2.sqrt(),
            WindowShape::RaisedCosine => 2.0 * d,
        };
        MotherWavelet { center_frequency: 1.0, bandwidth_factor, window_shape }
    }

    /// `ψ̂(ω)`; exactly zero for `ω <= 0`.
    pub fn transfer(&self, omega: f64) -> f64 {
        if omega <= 0.0 {
            return 0.0;
        }
        let offset = omega - self.center_frequency;
        match self.window_shape {
            WindowShape::Gaussian => {
                // Morlet admissibility correction: subtracting a scaled
                // Gaussian at the origin makes ψ̂(0⁺) = 0, so the filter has
                // zero mean instead of a step at DC. It stays positive for ω > 0.
                let two_var = 2.0 * self.bandwidth_factor * self.bandwidth_factor;
                let c = self.center_frequency;
                let bump = (-(offset * offset) / two_var).exp();
                let correction = (-(c * c) / two_var).exp() * (-(omega * omega) / two_var).exp();
                std::f64::consts::SQRT_2 * (bump - correction)
            }
            WindowShape::RaisedCosine => {
                let w = self.bandwidth_factor;
                if offset.abs() >= w {
                    0.0
                } else {
                    std::f64::consts::SQRT_2 * (std::f64::consts::FRAC_PI_2 * offset / w).cos()
                }
            }
        }
    }
}

/// Signed frequency of DFT bin `k` on an `n`-point grid.
pub fn bin_frequency(k: usize, n: usize) -> f64 {
    if 2 * k <= n {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Samples `scale * ψ̂(ω/λ)` on the n-point DFT grid (DC and negative bins zero,
/// Nyquist halved).
fn sample_transfer(mother: &MotherWavelet, lambda: f64, n: usize, scale: f64) -> Vec<f64> {
    let mut h = vec![0.0; n];
    for (k, v) in h.iter_mut().enumerate().take(n / 2 + 1).skip(1) {
        *v = scale * mother.transfer(k as f64 / lambda);
    }
    if n.is_multiple_of(2) {
        h[n / 2] *= 0.5;
    }
    h
}

/// Result of evaluating the frame sandwich over the certified range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameBounds {
    pub epsilon: f64,
    /// Bin (cycles per signal) where the lower bound is tightest.
    pub worst_frequency: f64,
    /// Largest half-sum over every positive bin.
    pub max_half_sum: f64,
}

impl FrameBounds {
    pub fn upper_bound_holds(&self) -> bool {
        self.max_half_sum <= 1.0 + UPPER_BOUND_SLACK
    }
}

#[derive(Debug, Clone)]
pub struct FilterBank {
    signal_length: usize,
    q_factor: u32,
    min_frequency: f64,
    lambda_grid: Vec<f64>,
    mother: MotherWavelet,
    normalization: f64,
    filters: Vec<Vec<f64>>,
    frame_epsilon: f64,
}

/// Centre frequencies `min_frequency * 2^(j/q)` up to Nyquist.
pub fn lambda_grid(signal_length: usize, q_factor: u32, min_frequency: f64) -> Vec<f64> {
    let nyquist = signal_length as f64 / 2.0;
    let mut grid = Vec::new();
    for j in 0.. {
        let lambda = min_frequency * (j as f64 / q_factor as f64).exp2();
        if lambda > nyquist * (1.0 + 1e-12) {
            break;
        }
        grid.push(lambda.min(nyquist));
    }
    grid
}

impl FilterBank {
    /// Default bank: Gaussian window, half-power crossings.
    pub fn new(signal_length: usize, q_factor: u32, min_frequency: f64) -> Result<Self> {
        Self::with_window(signal_length, q_factor, min_frequency, WindowShape::Gaussian)
    }

    pub fn with_window(
        signal_length: usize,
        q_factor: u32,
        min_frequency: f64,
        window_shape: WindowShape,
    ) -> Result<Self> {
        let mother = MotherWavelet::for_q_factor(q_factor as f64, window_shape);
        Self::with_mother(signal_length, q_factor, min_frequency, mother)
    }

    pub fn with_mother(signal_length: usize, q_factor: u32, min_frequency: f64, mother: MotherWavelet) -> Result<Self> {
        if signal_length < 16 || !signal_length.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!("signal length must be even and >= 16, got {signal_length}")));
        }
        if !(1..=32).contains(&q_factor) {
            return Err(Error::InvalidParameter(format!("q factor must be in 1..=32, got {q_factor}")));
        }
        if !(min_frequency >= 1.0 && min_frequency < signal_length as f64 / 2.0) {
            return Err(Error::InvalidParameter(format!("min frequency must be in [1, N/2), got {min_frequency}")));
        }
        if !(mother.bandwidth_factor > 0.0 && mother.bandwidth_factor.is_finite()) {
            return Err(Error::InvalidParameter("bandwidth factor must be positive".into()));
        }
        let grid = lambda_grid(signal_length, q_factor, min_frequency);
        if grid.len() < 2 {
            return Err(Error::GridTooSmall(format!(
                "only {} band(s) fit in [{min_frequency}, {}]",
                grid.len(),
                signal_length / 2
            )));
        }

        let raw_max = (1..=signal_length / 2).map(|k| half_sum(&mother, &grid, k as f64, 1.0)).fold(0.0, f64::max);
        let normalization = if raw_max > 1.0 { 1.0 / raw_max.sqrt() } else { 1.0 };

        let filters =
            grid.iter().map(|&lambda| sample_transfer(&mother, lambda, signal_length, normalization)).collect();
        let mut bank = FilterBank {
            signal_length,
            q_factor,
            min_frequency,
            lambda_grid: grid,
            mother,
            normalization,
            filters,
            frame_epsilon: f64::NAN,
        };
        let bounds = frame_bounds(&bank);
        if bounds.epsilon.is_nan() || bounds.epsilon >= 1.0 {
            return Err(Error::FrameFailure { epsilon: bounds.epsilon });
        }
        bank.frame_epsilon = bounds.epsilon;
        Ok(bank)
    }

    /// Same filters and normalisation restricted to the bands in `keep`.
    /// The stored epsilon is recomputed and may reach 1.
    pub fn subset(&self, keep: &[usize]) -> FilterBank {
        let mut bank = FilterBank {
            signal_length: self.signal_length,
            q_factor: self.q_factor,
            min_frequency: self.min_frequency,
            lambda_grid: keep.iter().map(|&i| self.lambda_grid[i]).collect(),
            mother: self.mother,
            normalization: self.normalization,
            filters: keep.iter().map(|&i| self.filters[i].clone()).collect(),
            frame_epsilon: f64::NAN,
        };
        bank.frame_epsilon = frame_bounds(&bank).epsilon;
        bank
    }

    pub fn signal_length(&self) -> usize {
        self.signal_length
    }

    pub fn q_factor(&self) -> u32 {
        self.q_factor
    }

    pub fn min_frequency(&self) -> f64 {
        self.min_frequency
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }

    pub fn len(&self) -> usize {
        self.lambda_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambda_grid.is_empty()
    }

    pub fn mother(&self) -> &MotherWavelet {
        &self.mother
    }

    /// Global renormalisation factor applied to the mother wavelet.
    pub fn normalization(&self) -> f64 {
        self.normalization
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    pub fn filter(&self, band: usize) -> &[f64] {
        &self.filters[band]
    }

    pub fn frame_epsilon(&self) -> f64 {
        self.frame_epsilon
    }

    /// Continuous transfer function of band `band` at frequency `omega`
    /// (cycles per signal), including the renormalisation.
    pub fn transfer(&self, band: usize, omega: f64) -> f64 {
        self.normalization * self.mother.transfer(omega / self.lambda_grid[band])
    }

    /// `½ Σ_λ |ψ̂_λ(ω)|²` using the continuous transfer functions.
    pub fn half_sum(&self, omega: f64) -> f64 {
        half_sum(&self.mother, &self.lambda_grid, omega, self.normalization)
    }

    pub fn to_document(&self) -> BankDocument {
        BankDocument {
            version: BANK_DOCUMENT_VERSION,
            signal_length: self.signal_length,
            q_factor: self.q_factor,
            min_frequency: self.min_frequency,
            lambda_grid: self.lambda_grid.clone(),
            window_shape: self.mother.window_shape,
            bandwidth_factor: self.mother.bandwidth_factor,
            frame_epsilon: self.frame_epsilon,
        }
    }

    /// Rebuilds the bank from its parameters and checks that the stored grid
    /// and epsilon are reproduced.
    pub fn from_document(doc: &BankDocument) -> Result<Self> {
        if doc.version != BANK_DOCUMENT_VERSION {
            return Err(Error::UnsupportedFormat(format!("bank document version {}", doc.version)));
        }
        let mother = MotherWavelet {
            center_frequency: 1.0,
            bandwidth_factor: doc.bandwidth_factor,
            window_shape: doc.window_shape,
        };
        let bank = Self::with_mother(doc.signal_length, doc.q_factor, doc.min_frequency, mother)?;
        let grid_matches = bank.lambda_grid.len() == doc.lambda_grid.len()
            && bank.lambda_grid.iter().zip(&doc.lambda_grid).all(|(a, b)| (a - b).abs() <= 1e-9 * a.abs());
        if !grid_matches {
            return Err(Error::UnsupportedFormat("lambda grid does not match parameters".into()));
        }
        if (bank.frame_epsilon - doc.frame_epsilon).abs() > 1e-9 {
            return Err(Error::UnsupportedFormat("frame epsilon does not match parameters".into()));
        }
        Ok(bank)
    }
}

fn half_sum(mother: &MotherWavelet, grid: &[f64], omega: f64, scale: f64) -> f64 {
    0.5 * grid
        .iter()
        .map(|&lambda| {
            let v = scale * mother.transfer(omega / lambda);
            v * v
        })
        .sum::<f64>()
}

/// Evaluates the frame sandwich. Epsilon is `1 - min` of the half-sum over
/// bins in `[N₀, N/2]`; the maximum is taken over every positive bin.
pub fn frame_bounds(bank: &FilterBank) -> FrameBounds {
    let n = bank.signal_length;
    let lo = bank.min_frequency.ceil() as usize;
    let mut min_sum = f64::INFINITY;
    let mut worst = lo as f64;
    let mut max_sum = 0.0f64;
    for k in 1..=n / 2 {
        let s = bank.half_sum(k as f64);
        max_sum = max_sum.max(s);
        if k >= lo && s < min_sum {
            min_sum = s;
            worst = k as f64;
        }
    }
    FrameBounds { epsilon: 1.0 - min_sum, worst_frequency: worst, max_half_sum: max_sum }
}

/// Versioned description of a bank; the filters are rebuilt from it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BankDocument {
    pub version: u32,
    #[serde(rename = "N")]
    pub signal_length: usize,
    #[serde(rename = "Q")]
    pub q_factor: u32,
    #[serde(rename = "N0")]
    pub min_frequency: f64,
    pub lambda_grid: Vec<f64>,
    pub window_shape: WindowShape,
    pub bandwidth_factor: f64,
    pub frame_epsilon: f64,
}

/// Dyadic analytic filters along the circular log-frequency axis of a
/// scalogram (one position per first-order band).
#[derive(Debug, Clone)]
pub struct LogFreqBank {
    grid_length: usize,
    scales: Vec<f64>,
    filters: Vec<Vec<f64>>,
    kernels: Vec<Vec<Complex64>>,
}

impl LogFreqBank {
    /// `alpha` octave-spaced scales; the finest is centred at `K/4` cycles
    /// per axis period and each further scale halves the centre.
    pub fn new(grid_length: usize, alpha: usize) -> Result<Self> {
        if grid_length < 4 {
            return Err(Error::GridTooSmall(format!(
                "log-frequency axis needs at least 4 positions, got {grid_length}"
            )));
        }
        if alpha < 1 {
            return Err(Error::InvalidParameter("alpha must be >= 1".into()));
        }
        let scales: Vec<f64> = (0..alpha).map(|s| grid_length as f64 / (1u64 << (s + 2)) as f64).collect();
        if scales[alpha - 1] < 1.0 {
            return Err(Error::GridTooSmall(format!(
                "{alpha} octave scales do not fit on a log-frequency axis of length {grid_length}"
            )));
        }
        let mother = MotherWavelet::for_q_factor(1.0, WindowShape::Gaussian);
        let raw_max = (1..=grid_length / 2).map(|k| half_sum(&mother, &scales, k as f64, 1.0)).fold(0.0, f64::max);
        let normalization = if raw_max > 1.0 { 1.0 / raw_max.sqrt() } else { 1.0 };
        let filters: Vec<Vec<f64>> =
            scales.iter().map(|&c| sample_transfer(&mother, c, grid_length, normalization)).collect();
        let fft = FftPair::new(grid_length);
        let kernels = filters
            .iter()
            .map(|h| {
                let mut buf: Vec<Complex64> = h.iter().map(|&v| Complex64::new(v, 0.0)).collect();
                fft.inverse(&mut buf);
                buf
            })
            .collect();
        Ok(LogFreqBank { grid_length, scales, filters, kernels })
    }

    pub fn grid_length(&self) -> usize {
        self.grid_length
    }

    pub fn alpha(&self) -> usize {
        self.scales.len()
    }

    /// Centre frequency of each scale, in cycles per axis period.
    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn filters(&self) -> &[Vec<f64>] {
        &self.filters
    }

    /// Circular impulse response of scale `s` (length K).
    pub fn kernel(&self, s: usize) -> &[Complex64] {
        &self.kernels[s]
    }

    /// Number of descriptor entries this bank contributes.
    pub fn coefficient_count(&self) -> usize {
        self.alpha() * self.grid_length
    }
}
