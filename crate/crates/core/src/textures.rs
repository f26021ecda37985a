//! Seeded synthetic test signals: noise, tones and simple textures.
//!
//! Frequencies are in cycles per signal length, like everywhere else.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::fft::FftPair;

use std::f64::consts::TAU;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn white_noise(n: usize, seed: u64, std_dev: f64) -> Vec<f64> {
    let mut r = rng(seed);
    (0..n).map(|_| std_dev * r.sample::<f64, _>(StandardNormal)).collect()
}

pub fn tone(n: usize, freq: f64, amp: f64) -> Vec<f64> {
    (0..n).map(|t| amp * (TAU * freq * t as f64 / n as f64).cos()).collect()
}

/// `amp · (1 + cos(2π g t/N)) · cos(2π f t/N)`.
pub fn am_tone(n: usize, carrier: f64, modulation: f64, amp: f64) -> Vec<f64> {
    (0..n)
        .map(|t| {
            let u = t as f64 / n as f64;
            amp * (1.0 + (TAU * modulation * u).cos()) * (TAU * carrier * u).cos()
        })
        .collect()
}

/// White noise with the spectrum restricted to `[lo, hi]` cycles per signal.
pub fn band_noise(n: usize, lo: f64, hi: f64, seed: u64) -> Vec<f64> {
    let fft = FftPair::new(n);
    let mut spec = fft.forward_real(&white_noise(n, seed, 1.0));
    for (k, v) in spec.iter_mut().enumerate() {
        let f = k.min(n - k) as f64;
        if f < lo || f > hi {
            *v = num_complex::Complex64::new(0.0, 0.0);
        }
    }
    fft.inverse(&mut spec);
    let x: Vec<f64> = spec.iter().map(|c| c.re).collect();
    normalize_rms(x)
}

/// Noise whose amplitude is modulated by `1 + depth·cos(2π g t/N)`.
pub fn am_noise(n: usize, modulation: f64, depth: f64, seed: u64) -> Vec<f64> {
    white_noise(n, seed, 1.0)
        .into_iter()
        .enumerate()
        .map(|(t, v)| v * (1.0 + depth * (TAU * modulation * t as f64 / n as f64).cos()))
        .collect()
}

/// Sparse decaying clicks over a faint noise floor.
pub fn clicks(n: usize, count: usize, seed: u64) -> Vec<f64> {
    let mut r = rng(seed);
    let mut x: Vec<f64> = (0..n).map(|_| 0.05 * r.sample::<f64, _>(StandardNormal)).collect();
    let decay = (n as f64 / 512.0).max(4.0);
    for _ in 0..count {
        let start = r.random_range(0..n);
        let amp = 1.0 + r.random::<f64>();
        for i in 0..(8.0 * decay) as usize {
            let t = (start + i) % n;
            x[t] += amp * (-(i as f64) / decay).exp() * r.sample::<f64, _>(StandardNormal);
        }
    }
    x
}

/// White noise through a gentle first-order low-pass with corner `N/16`:
/// every band keeps a share of the energy, so no envelope is vanishingly
/// small and derivative checks stay in the linear regime.
pub fn smooth_noise(n: usize, seed: u64) -> Vec<f64> {
    let fft = FftPair::new(n);
    let mut spec = fft.forward_real(&white_noise(n, seed, 1.0));
    let corner = n as f64 / 16.0;
    for (k, v) in spec.iter_mut().enumerate() {
        let f = k.min(n - k) as f64;
        *v /= (1.0 + (f / corner).powi(2)).sqrt();
    }
    fft.inverse(&mut spec);
    normalize_rms(spec.iter().map(|c| c.re).collect())
}

fn normalize_rms(mut x: Vec<f64>) -> Vec<f64> {
    let rms = (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt();
    if rms > 0.0 {
        x.iter_mut().for_each(|v| *v /= rms);
    }
    x
}
