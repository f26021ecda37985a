//! Scalograms and empirical scattering moments.
//!
//! All convolutions are circular (the signal is one period of a periodic
//! signal) and every moment is a plain time average of a modulus, so the
//! descriptor is exactly invariant to circular shifts and 1-homogeneous in
//! the input.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::config::DescriptorConfig;
use crate::error::{Error, Result};
use crate::fft::{FftPair, FftStrategy};
use crate::wavelet_bank::{FilterBank, LogFreqBank};

/// Modulus envelopes `|x ⋆ ψ_λ|(t)`, one row per band.
#[derive(Debug, Clone, PartialEq)]
pub struct Scalogram {
    values: Vec<Vec<f64>>,
    lambda_grid: Vec<f64>,
}

impl Scalogram {
    pub fn new(values: Vec<Vec<f64>>, lambda_grid: Vec<f64>) -> Result<Self> {
        if values.len() != lambda_grid.len() {
            return Err(Error::LengthMismatch { expected: lambda_grid.len(), actual: values.len() });
        }
        if let Some(first) = values.first() {
            if let Some(bad) = values.iter().find(|r| r.len() != first.len()) {
                return Err(Error::LengthMismatch { expected: first.len(), actual: bad.len() });
            }
        }
        if values.iter().flatten().any(|&v| v.is_nan() || v < 0.0) {
            return Err(Error::InvalidParameter("scalogram entries must be finite and >= 0".into()));
        }
        Ok(Scalogram { values, lambda_grid })
    }

    pub fn bands(&self) -> usize {
        self.values.len()
    }

    pub fn time_len(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn row(&self, band: usize) -> &[f64] {
        &self.values[band]
    }

    pub fn rows(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn lambda_grid(&self) -> &[f64] {
        &self.lambda_grid
    }
}

/// Which block of the descriptor an entry belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Block {
    Order1,
    Order2,
    FreqOrder2,
    DyadicOrder1,
    DyadicOrder2,
}

impl Block {
    pub const ALL: [Block; 5] =
        [Block::Order1, Block::Order2, Block::FreqOrder2, Block::DyadicOrder1, Block::DyadicOrder2];

    /// Orders 1 and 2 of the primary bank.
    pub fn is_time_scattering(self) -> bool {
        matches!(self, Block::Order1 | Block::Order2)
    }
}

/// Typed position of one descriptor entry. Frequencies are in cycles per
/// signal; `scale` numbers the log-frequency scales from finest to coarsest.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum ScatteringIndex {
    Order1 { lambda1: f64 },
    Order2 { lambda1: f64, lambda2: f64 },
    FreqOrder2 { lambda1: f64, scale: usize },
    DyadicOrder1 { lambda1: f64 },
    DyadicOrder2 { lambda1: f64, lambda2: f64 },
}

impl ScatteringIndex {
    pub fn block(&self) -> Block {
        match self {
            ScatteringIndex::Order1 { .. } => Block::Order1,
            ScatteringIndex::Order2 { .. } => Block::Order2,
            ScatteringIndex::FreqOrder2 { .. } => Block::FreqOrder2,
            ScatteringIndex::DyadicOrder1 { .. } => Block::DyadicOrder1,
            ScatteringIndex::DyadicOrder2 { .. } => Block::DyadicOrder2,
        }
    }

    /// Sort key realising the descriptor order: block, then λ₁, then λ₂ or scale.
    pub fn sort_key(&self) -> (Block, f64, f64) {
        match *self {
            ScatteringIndex::Order1 { lambda1 } | ScatteringIndex::DyadicOrder1 { lambda1 } => {
                (self.block(), lambda1, 0.0)
            }
            ScatteringIndex::Order2 { lambda1, lambda2 } | ScatteringIndex::DyadicOrder2 { lambda1, lambda2 } => {
                (self.block(), lambda1, lambda2)
            }
            ScatteringIndex::FreqOrder2 { lambda1, scale } => (self.block(), lambda1, scale as f64),
        }
    }
}

/// Sample mean and (1/N-normalised) variance of the analysed signal.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalStats {
    pub mean: f64,
    pub variance: f64,
}

impl SignalStats {
    pub fn of(x: &[f64]) -> Self {
        let n = x.len().max(1) as f64;
        let mean = x.iter().sum::<f64>() / n;
        let variance = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        SignalStats { mean, variance }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatteringVector {
    pub indices: Vec<ScatteringIndex>,
    pub values: Vec<f64>,
    pub config_digest: String,
    #[serde(default)]
    pub source: Option<SignalStats>,
}

impl ScatteringVector {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn ensure_comparable(&self, other: &ScatteringVector) -> Result<()> {
        if self.config_digest != other.config_digest || self.len() != other.len() {
            return Err(Error::DigestMismatch { left: self.config_digest.clone(), right: other.config_digest.clone() });
        }
        Ok(())
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Values belonging to one block, in descriptor order.
    pub fn block_values(&self, block: Block) -> Vec<f64> {
        self.indices.iter().zip(&self.values).filter(|(i, _)| i.block() == block).map(|(_, &v)| v).collect()
    }

    pub fn counts(&self) -> BlockCounts {
        let mut c = BlockCounts::default();
        for idx in &self.indices {
            *c.get_mut(idx.block()) += 1;
        }
        c
    }
}

/// Number of entries per block.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlockCounts {
    pub order1: usize,
    pub order2: usize,
    pub freq_order2: usize,
    pub dyadic_order1: usize,
    pub dyadic_order2: usize,
}

impl BlockCounts {
    pub fn total(&self) -> usize {
        self.order1 + self.order2 + self.freq_order2 + self.dyadic_order1 + self.dyadic_order2
    }

    pub fn get(&self, block: Block) -> usize {
        match block {
            Block::Order1 => self.order1,
            Block::Order2 => self.order2,
            Block::FreqOrder2 => self.freq_order2,
            Block::DyadicOrder1 => self.dyadic_order1,
            Block::DyadicOrder2 => self.dyadic_order2,
        }
    }

    fn get_mut(&mut self, block: Block) -> &mut usize {
        match block {
            Block::Order1 => &mut self.order1,
            Block::Order2 => &mut self.order2,
            Block::FreqOrder2 => &mut self.freq_order2,
            Block::DyadicOrder1 => &mut self.dyadic_order1,
            Block::DyadicOrder2 => &mut self.dyadic_order2,
        }
    }
}

pub(crate) fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

pub(crate) fn mean_modulus(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm()).sum::<f64>() / z.len() as f64
}

/// Envelope pairs `(band1, band2)` with `λ₂ < λ₁`, ordered by band1 then band2.
pub fn retained_pairs(first: &[f64], second: &[f64]) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for (b1, &l1) in first.iter().enumerate() {
        for (b2, &l2) in second.iter().enumerate() {
            if l2 < l1 * (1.0 - 1e-9) {
                pairs.push((b1, b2));
            }
        }
    }
    pairs
}

pub fn scalogram(x: &[f64], bank: &FilterBank) -> Result<Scalogram> {
    scalogram_with(x, bank, &FftPair::new(bank.signal_length()))
}

pub(crate) fn scalogram_with(x: &[f64], bank: &FilterBank, fft: &FftPair) -> Result<Scalogram> {
    if x.len() != bank.signal_length() {
        return Err(Error::LengthMismatch { expected: bank.signal_length(), actual: x.len() });
    }
    let spectrum = fft.forward_real(x);
    let values = bank.filters().iter().map(|h| fft.filter(&spectrum, h).iter().map(|c| c.norm()).collect()).collect();
    Ok(Scalogram { values, lambda_grid: bank.lambda_grid().to_vec() })
}

/// `N⁻¹ Σ_t scal[λ₁, t]` for every band.
pub fn scatter_order1(scal: &Scalogram) -> Vec<f64> {
    scal.values.iter().map(|row| mean(row)).collect()
}

/// Second-order moments `mean_t |scal[λ₁] ⋆ ψ_λ₂|` for `λ₂ < λ₁`, in
/// [`retained_pairs`] order.
pub fn scatter_order2(scal: &Scalogram, bank2: &FilterBank) -> Result<Vec<((usize, usize), f64)>> {
    let fft = FftPair::new(bank2.signal_length());
    scatter_order2_with(scal, bank2, &fft)
}

pub(crate) fn scatter_order2_with(
    scal: &Scalogram,
    bank2: &FilterBank,
    fft: &FftPair,
) -> Result<Vec<((usize, usize), f64)>> {
    check_time_len(scal, bank2)?;
    let pairs = retained_pairs(&scal.lambda_grid, bank2.lambda_grid());
    let mut out = Vec::with_capacity(pairs.len());
    let mut current: Option<(usize, Vec<Complex64>)> = None;
    for (b1, b2) in pairs {
        if current.as_ref().map(|(b, _)| *b) != Some(b1) {
            current = Some((b1, fft.forward_real(&scal.values[b1])));
        }
        let spectrum = &current.as_ref().expect("set above").1;
        out.push(((b1, b2), mean_modulus(&fft.filter(spectrum, bank2.filter(b2)))));
    }
    Ok(out)
}

/// Every `(λ₁, λ₂)` moment, including the `λ₂ >= λ₁` pairs the descriptor
/// leaves out. Row-major `bands × bank2.len()`.
pub fn scatter_order2_all(scal: &Scalogram, bank2: &FilterBank) -> Result<Vec<Vec<f64>>> {
    check_time_len(scal, bank2)?;
    let fft = FftPair::new(bank2.signal_length());
    Ok(scal
        .values
        .iter()
        .map(|row| {
            let spectrum = fft.forward_real(row);
            bank2.filters().iter().map(|h| mean_modulus(&fft.filter(&spectrum, h))).collect()
        })
        .collect())
}

fn check_time_len(scal: &Scalogram, bank2: &FilterBank) -> Result<()> {
    if scal.time_len() != bank2.signal_length() {
        return Err(Error::LengthMismatch { expected: bank2.signal_length(), actual: scal.time_len() });
    }
    Ok(())
}

/// Circular convolution along the band axis:
/// `out(t) = Σ_k kernel[(band - k) mod K] · rows[k](t)`.
pub(crate) fn logfreq_convolve(rows: &[Vec<f64>], kernel: &[Complex64], band: usize) -> Vec<Complex64> {
    let k_len = rows.len();
    let n = rows.first().map_or(0, Vec::len);
    let mut out = vec![Complex64::new(0.0, 0.0); n];
    for (k, row) in rows.iter().enumerate() {
        let w = kernel[(band + k_len - k) % k_len];
        for (o, &v) in out.iter_mut().zip(row) {
            *o += w * v;
        }
    }
    out
}

/// Frequency-scattering moments `N⁻¹ Σ_t |F_t ⋆ ψ̄_s(γ)|`, ordered by band
/// then scale.
pub fn scatter_freq(scal: &Scalogram, lf_bank: &LogFreqBank) -> Result<Vec<((usize, usize), f64)>> {
    if lf_bank.grid_length() != scal.bands() {
        return Err(Error::GridMismatch { expected: lf_bank.grid_length(), actual: scal.bands() });
    }
    // Convolving every time column along the band axis in the transform
    // domain, a block of columns at a time, costs O(N·K log K) instead of
    // the O(N·K²) of `logfreq_convolve` per band.
    const BLOCK: usize = 512;
    let k_len = scal.bands();
    let alpha = lf_bank.alpha();
    let n = scal.time_len();
    let fft = FftPair::new(k_len);
    let mut sums = vec![0.0; k_len * alpha];
    let mut spectra = vec![Complex64::new(0.0, 0.0); BLOCK * k_len];
    let mut work = spectra.clone();
    for start in (0..n).step_by(BLOCK) {
        let width = BLOCK.min(n - start);
        let spectra = &mut spectra[..width * k_len];
        for (k, row) in scal.values.iter().enumerate() {
            for (c, &v) in row[start..start + width].iter().enumerate() {
                spectra[c * k_len + k] = Complex64::new(v, 0.0);
            }
        }
        fft.forward_batch(spectra);
        for s in 0..alpha {
            let h = &lf_bank.filters()[s];
            let work = &mut work[..width * k_len];
            for (w, (z, g)) in work.iter_mut().zip(spectra.iter().zip(h.iter().cycle())) {
                *w = z * g;
            }
            fft.inverse_batch(work);
            for column in work.chunks_exact(k_len) {
                for (band, z) in column.iter().enumerate() {
                    sums[band * alpha + s] += z.norm();
                }
            }
        }
    }
    Ok((0..k_len)
        .flat_map(|band| (0..alpha).map(move |s| (band, s)))
        .map(|(band, s)| ((band, s), sums[band * alpha + s] / n as f64))
        .collect())
}

/// Filter banks and layout for one [`DescriptorConfig`].
#[derive(Debug, Clone)]
pub struct ScatteringNetwork {
    config: DescriptorConfig,
    digest: String,
    fft: FftPair,
    primary: FilterBank,
    envelope: Option<FilterBank>,
    logfreq: Option<LogFreqBank>,
    dyadic: Option<FilterBank>,
    primary_pairs: Vec<(usize, usize)>,
    dyadic_pairs: Vec<(usize, usize)>,
    indices: Vec<ScatteringIndex>,
}

impl ScatteringNetwork {
    pub fn new(config: &DescriptorConfig) -> Result<Self> {
        Self::with_strategy(config, FftStrategy::Planned)
    }

    pub fn with_strategy(config: &DescriptorConfig, strategy: FftStrategy) -> Result<Self> {
        let n = config.signal_length;
        let n0 = config.min_frequency;
        let primary = FilterBank::with_window(n, config.q1, n0, config.window_shape)?;
        let dyadic = if config.include_dyadic_extra_bank {
            Some(FilterBank::with_window(n, 1, n0, config.window_shape)?)
        } else {
            None
        };
        let needs_envelope = config.include_order2 || (config.include_dyadic_extra_bank && config.dyadic_extra_order2);
        let envelope =
            if needs_envelope { Some(FilterBank::with_window(n, config.q2, n0, config.window_shape)?) } else { None };
        let logfreq =
            if config.include_freq_scattering { Some(LogFreqBank::new(primary.len(), config.alpha)?) } else { None };

        let primary_pairs = match (&envelope, config.include_order2) {
            (Some(env), true) => retained_pairs(primary.lambda_grid(), env.lambda_grid()),
            _ => Vec::new(),
        };
        let dyadic_pairs = match (&envelope, &dyadic, config.dyadic_extra_order2) {
            (Some(env), Some(dy), true) => retained_pairs(dy.lambda_grid(), env.lambda_grid()),
            _ => Vec::new(),
        };

        let mut indices = Vec::new();
        let l1 = primary.lambda_grid();
        indices.extend(l1.iter().map(|&lambda1| ScatteringIndex::Order1 { lambda1 }));
        if let Some(env) = &envelope {
            let l2 = env.lambda_grid();
            indices
                .extend(primary_pairs.iter().map(|&(a, b)| ScatteringIndex::Order2 { lambda1: l1[a], lambda2: l2[b] }));
        }
        if let Some(lf) = &logfreq {
            for &lambda1 in l1 {
                indices.extend((0..lf.alpha()).map(|scale| ScatteringIndex::FreqOrder2 { lambda1, scale }));
            }
        }
        if let Some(dy) = &dyadic {
            let ld = dy.lambda_grid();
            indices.extend(ld.iter().map(|&lambda1| ScatteringIndex::DyadicOrder1 { lambda1 }));
            if let Some(env) = &envelope {
                let l2 = env.lambda_grid();
                indices.extend(
                    dyadic_pairs.iter().map(|&(a, b)| ScatteringIndex::DyadicOrder2 { lambda1: ld[a], lambda2: l2[b] }),
                );
            }
        }

        Ok(ScatteringNetwork {
            config: config.clone(),
            digest: config.digest(),
            fft: FftPair::with_strategy(n, strategy),
            primary,
            envelope,
            logfreq,
            dyadic,
            primary_pairs,
            dyadic_pairs,
            indices,
        })
    }

    pub fn config(&self) -> &DescriptorConfig {
        &self.config
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn signal_length(&self) -> usize {
        self.config.signal_length
    }

    pub fn primary_bank(&self) -> &FilterBank {
        &self.primary
    }

    pub fn envelope_bank(&self) -> Option<&FilterBank> {
        self.envelope.as_ref()
    }

    pub fn logfreq_bank(&self) -> Option<&LogFreqBank> {
        self.logfreq.as_ref()
    }

    pub fn dyadic_bank(&self) -> Option<&FilterBank> {
        self.dyadic.as_ref()
    }

    pub(crate) fn fft(&self) -> &FftPair {
        &self.fft
    }

    pub(crate) fn primary_pairs(&self) -> &[(usize, usize)] {
        &self.primary_pairs
    }

    pub(crate) fn dyadic_pairs(&self) -> &[(usize, usize)] {
        &self.dyadic_pairs
    }

    pub fn indices(&self) -> &[ScatteringIndex] {
        &self.indices
    }

    /// Descriptor length M.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn counts(&self) -> BlockCounts {
        let mut c = BlockCounts::default();
        for idx in &self.indices {
            *c.get_mut(idx.block()) += 1;
        }
        c
    }

    pub fn scalogram(&self, x: &[f64]) -> Result<Scalogram> {
        scalogram_with(x, &self.primary, &self.fft)
    }

    /// Full descriptor of `x` in index order.
    pub fn descriptor(&self, x: &[f64]) -> Result<ScatteringVector> {
        let scal = self.scalogram(x)?;
        let mut values = scatter_order1(&scal);
        if let (Some(env), true) = (&self.envelope, self.config.include_order2) {
            values.extend(scatter_order2_with(&scal, env, &self.fft)?.into_iter().map(|(_, v)| v));
        }
        if let Some(lf) = &self.logfreq {
            values.extend(scatter_freq(&scal, lf)?.into_iter().map(|(_, v)| v));
        }
        drop(scal);
        if let Some(dy) = &self.dyadic {
            let scal = scalogram_with(x, dy, &self.fft)?;
            values.extend(scatter_order1(&scal));
            if let (Some(env), true) = (&self.envelope, self.config.dyadic_extra_order2) {
                values.extend(scatter_order2_with(&scal, env, &self.fft)?.into_iter().map(|(_, v)| v));
            }
        }
        debug_assert_eq!(values.len(), self.indices.len());
        Ok(ScatteringVector {
            indices: self.indices.clone(),
            values,
            config_digest: self.digest.clone(),
            source: Some(SignalStats::of(x)),
        })
    }
}

pub fn full_descriptor(x: &[f64], cfg: &DescriptorConfig) -> Result<ScatteringVector> {
    ScatteringNetwork::new(cfg)?.descriptor(x)
}

/// `Σ values²` over the primary order-1 and order-2 blocks.
pub fn descriptor_energy(s: &ScatteringVector) -> f64 {
    s.indices.iter().zip(&s.values).filter(|(i, _)| i.block().is_time_scattering()).map(|(_, v)| v * v).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textures;

    fn approx_eq(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
    }

    #[test]
    fn zero_and_constant_inputs_give_zero_scalogram() {
        let bank = FilterBank::new(512, 2, 4.0).unwrap();
        for c in [0.0, 3.5] {
            let scal = scalogram(&vec![c; 512], &bank).unwrap();
            assert!(scal.rows().iter().flatten().all(|&v| v.abs() < 1e-12));
        }
    }

    #[test]
    fn length_mismatch() {
        let bank = FilterBank::new(512, 2, 4.0).unwrap();
        assert!(matches!(scalogram(&[0.0; 100], &bank), Err(Error::LengthMismatch { .. })));
    }

    #[test]
    fn on_grid_tone_has_flat_rows() {
        let n = 1024;
        let bank = FilterBank::new(n, 4, 4.0).unwrap();
        let f = 64usize;
        let x = textures::tone(n, f as f64, 1.0);
        let scal = scalogram(&x, &bank).unwrap();
        let mut best = (0, 0.0);
        for b in 0..bank.len() {
            let expected = bank.filter(b)[f] / 2.0;
            for &v in scal.row(b) {
                assert!((v - expected).abs() < 1e-12);
            }
            if expected > best.1 {
                best = (b, expected);
            }
        }
        let nearest = bank
            .lambda_grid()
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - f as f64).abs().partial_cmp(&(b.1 - f as f64).abs()).unwrap())
            .unwrap()
            .0;
        assert_eq!(best.0, nearest);
    }

    #[test]
    fn order1_is_row_mean_and_homogeneous() {
        let n = 512;
        let bank = FilterBank::new(n, 2, 4.0).unwrap();
        let x = textures::white_noise(n, 3, 1.0);
        let s1 = scatter_order1(&scalogram(&x, &bank).unwrap());
        let y: Vec<f64> = x.iter().map(|v| -2.5 * v).collect();
        let s2 = scatter_order1(&scalogram(&y, &bank).unwrap());
        for (a, b) in s1.iter().zip(&s2) {
            assert!(approx_eq(2.5 * a, *b, 1e-13));
        }
    }

    #[test]
    fn order2_of_pure_tone_vanishes() {
        let n = 1024;
        let bank = FilterBank::new(n, 4, 4.0).unwrap();
        let bank2 = FilterBank::new(n, 1, 4.0).unwrap();
        let scal = scalogram(&textures::tone(n, 200.0, 1.0), &bank).unwrap();
        for (_, v) in scatter_order2(&scal, &bank2).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn order2_pairs_are_strictly_triangular() {
        let n = 4096;
        let bank = FilterBank::new(n, 4, 4.0).unwrap();
        let bank2 = FilterBank::new(n, 1, 4.0).unwrap();
        for (a, b) in retained_pairs(bank.lambda_grid(), bank2.lambda_grid()) {
            assert!(bank2.lambda_grid()[b] < bank.lambda_grid()[a]);
        }
    }

    #[test]
    fn am_tone_order2_matches_envelope_prediction() {
        let n = 4096;
        let (f, g) = (1024.0, 16.0);
        let bank = FilterBank::new(n, 4, 4.0).unwrap();
        let bank2 = FilterBank::new(n, 1, 4.0).unwrap();
        let x = textures::am_tone(n, f, g, 1.0);
        let scal = scalogram(&x, &bank).unwrap();
        let band_f = bank.lambda_grid().iter().position(|&l| l == f).unwrap();
        let all = scatter_order2_all(&scal, &bank2).unwrap();
        let row = &all[band_f];
        let peak = row.iter().enumerate().max_by(|a, b| a.1.partial_cmp(b.1).unwrap()).unwrap().0;
        let band_g = bank2.lambda_grid().iter().position(|&l| l == g).unwrap();
        assert_eq!(peak, band_g);
        // Envelope ≈ (ψ̂_f(f)/2)(1 + cos(2πgt/N)); its wavelet modulus at λ₂ = g
        // is constant (ψ̂_f(f)/2)·ψ̂_g(g)/2.
        let predicted = bank.filter(band_f)[f as usize] / 2.0 * bank2.filter(band_g)[g as usize] / 2.0;
        assert!((row[band_g] - predicted).abs() <= 0.1 * predicted, "{} vs {}", row[band_g], predicted);
    }

    #[test]
    fn freq_scattering_of_flat_columns_vanishes() {
        let lf = LogFreqBank::new(8, 2).unwrap();
        let rows = vec![vec![1.5, 2.0, 0.5, 3.0]; 8];
        let scal = Scalogram::new(rows, (0..8).map(|i| 4.0 * 2f64.powi(i)).collect()).unwrap();
        for (_, v) in scatter_freq(&scal, &lf).unwrap() {
            assert!(v.abs() < 1e-12);
        }
    }

    #[test]
    fn freq_scattering_of_single_line_follows_kernel() {
        let k = 16;
        let lf = LogFreqBank::new(k, 2).unwrap();
        let active = 5;
        let amp = [0.5, 2.0, 1.0, 0.25];
        let rows: Vec<Vec<f64>> = (0..k).map(|b| if b == active { amp.to_vec() } else { vec![0.0; 4] }).collect();
        let scal = Scalogram::new(rows, (0..k).map(|i| 4.0 + i as f64).collect()).unwrap();
        let out = scatter_freq(&scal, &lf).unwrap();
        let mean_amp = amp.iter().sum::<f64>() / 4.0;
        // Oracle: impulse response computed by a direct inverse DFT of the filter.
        for ((band, s), v) in out {
            let h = &lf.filters()[s];
            let shift = (band + k - active) % k;
            let mut acc = Complex64::new(0.0, 0.0);
            for (m, &hm) in h.iter().enumerate() {
                let ang = 2.0 * std::f64::consts::PI * (m * shift) as f64 / k as f64;
                acc += hm * Complex64::new(ang.cos(), ang.sin());
            }
            let expected = mean_amp * acc.norm() / k as f64;
            assert!((v - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn freq_grid_mismatch() {
        let lf = LogFreqBank::new(8, 1).unwrap();
        let scal = Scalogram::new(vec![vec![0.0; 4]; 6], vec![1.0; 6]).unwrap();
        assert!(matches!(scatter_freq(&scal, &lf), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn descriptor_layout_and_counts() {
        let cfg = DescriptorConfig::new(1 << 14);
        let net = ScatteringNetwork::new(&cfg).unwrap();
        let c = net.counts();
        assert_eq!(c.order1, 45);
        assert_eq!(c.order2, 264);
        assert_eq!(c.freq_order2, 90);
        let keys: Vec<_> = net.indices().iter().map(|i| i.sort_key()).collect();
        for w in keys.windows(2) {
            assert!(w[0] < w[1], "{:?} !< {:?}", w[0], w[1]);
        }
    }

    #[test]
    fn dyadic_extra_bank_counts() {
        let cfg = DescriptorConfig::new(1 << 17).with_dyadic_extra(true);
        let c = ScatteringNetwork::new(&cfg).unwrap().counts();
        assert_eq!(c.dyadic_order1 + c.dyadic_order2, 120);
    }

    #[test]
    fn zero_signal_descriptor() {
        let cfg = DescriptorConfig::new(1024).with_dyadic_extra(true);
        let d = full_descriptor(&vec![0.0; 1024], &cfg).unwrap();
        assert_eq!(d.len(), ScatteringNetwork::new(&cfg).unwrap().len());
        assert!(d.values.iter().all(|&v| v == 0.0));
        assert_eq!(descriptor_energy(&d), 0.0);
    }
}
