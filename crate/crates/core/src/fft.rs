//! Thin wrapper over `rustfft` for the circular convolutions used everywhere
//! in the crate.
//!
//! Conventions: `forward` is the unnormalized DFT, `inverse` includes the
//! `1/N` factor, so `inverse(forward(x)) == x`. Circular convolution with a
//! transfer function `h` is `inverse(forward(x) * h)`, and its adjoint is
//! `inverse(forward(y) * conj(h))`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::algorithm::MixedRadix;
use rustfft::{Fft, FftDirection, FftPlanner};

/// How the length-N transform is factored.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FftStrategy {
    /// Whatever `FftPlanner` picks for N.
    #[default]
    Planned,
    /// Explicit two-factor split N = N1 * N2 with N1 ≈ sqrt(N).
    Blocked,
}

#[derive(Clone)]
pub struct FftPair {
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for FftPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftPair").field("len", &self.len).finish()
    }
}

impl FftPair {
    pub fn new(len: usize) -> Self {
        Self::with_strategy(len, FftStrategy::Planned)
    }

    pub fn with_strategy(len: usize, strategy: FftStrategy) -> Self {
        let mut planner = FftPlanner::<f64>::new();
        let (forward, inverse) = match strategy {
            FftStrategy::Planned => (planner.plan_fft_forward(len), planner.plan_fft_inverse(len)),
            FftStrategy::Blocked => match split_factor(len) {
                Some(n1) => {
                    let n2 = len / n1;
                    let fwd: Arc<dyn Fft<f64>> = Arc::new(MixedRadix::new(
                        planner.plan_fft(n1, FftDirection::Forward),
                        planner.plan_fft(n2, FftDirection::Forward),
                    ));
                    let inv: Arc<dyn Fft<f64>> = Arc::new(MixedRadix::new(
                        planner.plan_fft(n1, FftDirection::Inverse),
                        planner.plan_fft(n2, FftDirection::Inverse),
                    ));
                    (fwd, inv)
                }
                None => (planner.plan_fft_forward(len), planner.plan_fft_inverse(len)),
            },
        };
        FftPair { len, forward, inverse }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.forward.process(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.len);
        self.inverse.process(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Forward transforms of consecutive length-`len` chunks of `buf`.
    pub fn forward_batch(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.len, 0);
        self.forward.process(buf);
    }

    /// Inverse transforms (with `1/len`) of consecutive chunks of `buf`.
    pub fn inverse_batch(&self, buf: &mut [Complex64]) {
        debug_assert_eq!(buf.len() % self.len, 0);
        self.inverse.process(buf);
        let scale = 1.0 / self.len as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Spectrum of a real signal.
    pub fn forward_real(&self, x: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = x.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward(&mut buf);
        buf
    }

    /// `inverse(spectrum * transfer)`.
    pub fn filter(&self, spectrum: &[Complex64], transfer: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = spectrum.iter().zip(transfer).map(|(s, &h)| s * h).collect();
        self.inverse(&mut buf);
        buf
    }
}

fn split_factor(len: usize) -> Option<usize> {
    let mut best = None;
    let mut d = 2;
    while d * d <= len {
        if len.is_multiple_of(d) {
            best = Some(d);
        }
        d += 1;
    }
    best
}
