//! Derivatives of the empirical scattering descriptor with respect to the
//! input signal.
//!
//! Every descriptor entry is a time average of a modulus of a linear filter of
//! (a modulus of a linear filter of) the signal. The adjoint chain is
//! therefore: mean → `1/N`; modulus → multiply by the guarded phase
//! `z/|z|`; convolution with `ψ` → correlation, i.e. multiplication by
//! `conj(ψ̂)` in the DFT domain; real part at the real-valued inputs.
//!
//! Three routes are provided: [`jacobian_jvp`] (forward mode),
//! [`jacobian_vjp`] (reverse mode) and [`jacobian_dense`] (one reverse pass
//! per entry over a shared forward cache).

use std::io::Write;

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::config::DescriptorConfig;
use crate::error::{Error, Result};
use crate::scattering::{logfreq_convolve, ScatteringNetwork};
use crate::wavelet_bank::FilterBank;

/// Phase derivative is zeroed where `|z| <= GUARD_RATIO · max|z|` of the
/// envelope it belongs to.
pub const GUARD_RATIO: f64 = 1e-10;

pub const DEFAULT_DENSE_CAP: usize = 4096;

const ZERO: Complex64 = Complex64 { re: 0.0, im: 0.0 };

/// `z/|z|` where `|z| > guard`, zero elsewhere.
pub fn modulus_gradient(z: &[Complex64], guard: f64) -> Vec<Complex64> {
    z.iter()
        .map(|&c| {
            let r = c.norm();
            if r > guard {
                c / r
            } else {
                ZERO
            }
        })
        .collect()
}

fn guarded_phase(z: &[Complex64]) -> Vec<Complex64> {
    let peak = z.iter().map(|c| c.norm()).fold(0.0, f64::max);
    modulus_gradient(z, GUARD_RATIO * peak)
}

/// Forward intermediates of one first-layer bank.
struct LayerCache<'a> {
    bank: &'a FilterBank,
    pairs: &'a [(usize, usize)],
    phase: Vec<Vec<Complex64>>,
    envelope: Vec<Vec<f64>>,
    envelope_spectrum: Vec<Option<Vec<Complex64>>>,
}

/// Shared forward pass at one signal, reused by every derivative product.
pub struct ForwardCache<'a> {
    net: &'a ScatteringNetwork,
    primary: LayerCache<'a>,
    dyadic: Option<LayerCache<'a>>,
}

impl<'a> ForwardCache<'a> {
    pub fn new(net: &'a ScatteringNetwork, x: &[f64]) -> Result<Self> {
        let n = net.signal_length();
        if x.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: x.len() });
        }
        let spectrum = net.fft().forward_real(x);
        let primary = Self::layer(net, net.primary_bank(), net.primary_pairs(), &spectrum);
        let dyadic = net.dyadic_bank().map(|bank| Self::layer(net, bank, net.dyadic_pairs(), &spectrum));
        Ok(ForwardCache { net, primary, dyadic })
    }

    fn layer(
        net: &ScatteringNetwork,
        bank: &'a FilterBank,
        pairs: &'a [(usize, usize)],
        spectrum: &[Complex64],
    ) -> LayerCache<'a> {
        let fft = net.fft();
        let mut phase = Vec::with_capacity(bank.len());
        let mut envelope = Vec::with_capacity(bank.len());
        let mut envelope_spectrum = Vec::with_capacity(bank.len());
        for (b, h) in bank.filters().iter().enumerate() {
            let z = fft.filter(spectrum, h);
            let u: Vec<f64> = z.iter().map(|c| c.norm()).collect();
            let has_pairs = pairs.iter().any(|&(b1, _)| b1 == b);
            envelope_spectrum.push(has_pairs.then(|| fft.forward_real(&u)));
            phase.push(guarded_phase(&z));
            envelope.push(u);
        }
        LayerCache { bank, pairs, phase, envelope, envelope_spectrum }
    }

    pub fn network(&self) -> &ScatteringNetwork {
        self.net
    }

    fn layers(&self) -> impl Iterator<Item = &LayerCache<'a>> {
        std::iter::once(&self.primary).chain(self.dyadic.as_ref())
    }

    /// Second-layer complex envelope `|x⋆ψ_λ₁| ⋆ ψ_λ₂` for a cached pair.
    fn second_layer(&self, layer: &LayerCache, b1: usize, b2: usize) -> Vec<Complex64> {
        let env = self.net.envelope_bank().expect("pairs imply an envelope bank");
        let spec = layer.envelope_spectrum[b1].as_ref().expect("cached for paired bands");
        self.net.fft().filter(spec, env.filter(b2))
    }

    /// `J v`.
    pub fn jvp(&self, v: &[f64]) -> Result<Vec<f64>> {
        let n = self.net.signal_length();
        if v.len() != n {
            return Err(Error::LengthMismatch { expected: n, actual: v.len() });
        }
        let fft = self.net.fft();
        let inv_n = 1.0 / n as f64;
        let v_hat = fft.forward_real(v);
        let mut out = Vec::with_capacity(self.net.len());

        let mut layer_deltas = Vec::new();
        for layer in self.layers() {
            let du: Vec<Vec<f64>> = layer
                .bank
                .filters()
                .iter()
                .zip(&layer.phase)
                .map(|(h, p)| {
                    let dz = fft.filter(&v_hat, h);
                    dz.iter().zip(p).map(|(d, q)| (q.conj() * d).re).collect()
                })
                .collect();
            layer_deltas.push(du);
        }

        let mut blocks: Vec<Vec<f64>> = Vec::new();
        for (layer, du) in self.layers().zip(&layer_deltas) {
            let order1: Vec<f64> = du.iter().map(|d| d.iter().sum::<f64>() * inv_n).collect();
            let mut order2 = Vec::with_capacity(layer.pairs.len());
            let mut current: Option<(usize, Vec<Complex64>)> = None;
            for &(b1, b2) in layer.pairs {
                if current.as_ref().map(|c| c.0) != Some(b1) {
                    current = Some((b1, fft.forward_real(&du[b1])));
                }
                let env = self.net.envelope_bank().expect("pairs imply an envelope bank");
                let z2 = self.second_layer(layer, b1, b2);
                let p2 = guarded_phase(&z2);
                let dz2 = fft.filter(&current.as_ref().expect("set above").1, env.filter(b2));
                order2.push(p2.iter().zip(&dz2).map(|(q, d)| (q.conj() * d).re).sum::<f64>() * inv_n);
            }
            blocks.push(order1);
            blocks.push(order2);
        }

        // Layout: primary order 1, primary order 2, frequency block, dyadic blocks.
        out.extend_from_slice(&blocks[0]);
        out.extend_from_slice(&blocks[1]);
        if let Some(lf) = self.net.logfreq_bank() {
            let u = &self.primary.envelope;
            let du = &layer_deltas[0];
            for band in 0..u.len() {
                for s in 0..lf.alpha() {
                    let z = logfreq_convolve(u, lf.kernel(s), band);
                    let p = guarded_phase(&z);
                    let dz = logfreq_convolve(du, lf.kernel(s), band);
                    out.push(p.iter().zip(&dz).map(|(q, d)| (q.conj() * d).re).sum::<f64>() * inv_n);
                }
            }
        }
        for block in blocks.iter().skip(2) {
            out.extend_from_slice(block);
        }
        Ok(out)
    }

    /// `Jᵀ w`. Zero cotangent entries are skipped, so a basis vector costs one
    /// reverse pass through a single path of the network.
    pub fn vjp(&self, w: &[f64]) -> Result<Vec<f64>> {
        let m = self.net.len();
        if w.len() != m {
            return Err(Error::LengthMismatch { expected: m, actual: w.len() });
        }
        let n = self.net.signal_length();
        let fft = self.net.fft();
        let inv_n = 1.0 / n as f64;

        let k1 = self.primary.bank.len();
        let p2_len = self.primary.pairs.len();
        let freq_len = self.net.logfreq_bank().map_or(0, |lf| lf.coefficient_count());
        let (w_o1, rest) = w.split_at(k1);
        let (w_o2, rest) = rest.split_at(p2_len);
        let (w_freq, w_dyadic) = rest.split_at(freq_len);

        let mut grad_spectrum = vec![ZERO; n];
        let mut touched = false;

        // Envelope cotangents of the primary layer, filled by the frequency block.
        let mut freq_gu: Vec<Option<Vec<f64>>> = vec![None; k1];
        if let Some(lf) = self.net.logfreq_bank() {
            let u = &self.primary.envelope;
            let k_len = u.len();
            for band in 0..k_len {
                for s in 0..lf.alpha() {
                    let wk = w_freq[band * lf.alpha() + s];
                    if wk == 0.0 {
                        continue;
                    }
                    let kernel = lf.kernel(s);
                    let p = guarded_phase(&logfreq_convolve(u, kernel, band));
                    for (k, slot) in freq_gu.iter_mut().enumerate() {
                        let c = kernel[(band + k_len - k) % k_len] * (wk * inv_n);
                        let g = slot.get_or_insert_with(|| vec![0.0; n]);
                        for (gi, q) in g.iter_mut().zip(&p) {
                            *gi += (c * q.conj()).re;
                        }
                    }
                }
            }
        }

        let (w_d1, w_d2) = match &self.dyadic {
            Some(layer) => w_dyadic.split_at(layer.bank.len()),
            None => (&w_dyadic[..0], &w_dyadic[..0]),
        };
        let mut layer_weights = vec![(&self.primary, w_o1, w_o2, freq_gu)];
        if let Some(layer) = &self.dyadic {
            layer_weights.push((layer, w_d1, w_d2, vec![None; layer.bank.len()]));
        }

        for (layer, w1, w2, mut gu) in layer_weights {
            // Second-order contributions, grouped by band1 in the DFT domain.
            let mut pair_iter = layer.pairs.iter().zip(w2).peekable();
            while let Some(&(&(b1, _), _)) = pair_iter.peek() {
                let mut acc: Option<Vec<Complex64>> = None;
                while let Some(&(&(c1, b2), &wk)) = pair_iter.peek() {
                    if c1 != b1 {
                        break;
                    }
                    pair_iter.next();
                    if wk == 0.0 {
                        continue;
                    }
                    let env = self.net.envelope_bank().expect("pairs imply an envelope bank");
                    let mut p2 = guarded_phase(&self.second_layer(layer, b1, b2));
                    fft.forward(&mut p2);
                    let h = env.filter(b2);
                    let a = acc.get_or_insert_with(|| vec![ZERO; n]);
                    let scale = wk * inv_n;
                    for ((ai, pi), &hi) in a.iter_mut().zip(&p2).zip(h) {
                        *ai += pi * (hi * scale);
                    }
                }
                if let Some(mut a) = acc {
                    fft.inverse(&mut a);
                    let g = gu[b1].get_or_insert_with(|| vec![0.0; n]);
                    for (gi, ai) in g.iter_mut().zip(&a) {
                        *gi += ai.re;
                    }
                }
            }

            for (b, h) in layer.bank.filters().iter().enumerate() {
                let w_first = w1[b] * inv_n;
                let g = gu[b].take();
                if w_first == 0.0 && g.is_none() {
                    continue;
                }
                let p = &layer.phase[b];
                let mut buf: Vec<Complex64> = match g {
                    Some(g) => g.iter().zip(p).map(|(gi, pi)| pi * (gi + w_first)).collect(),
                    None => p.iter().map(|pi| pi * w_first).collect(),
                };
                fft.forward(&mut buf);
                for ((acc, bi), &hi) in grad_spectrum.iter_mut().zip(&buf).zip(h) {
                    *acc += bi * hi;
                }
                touched = true;
            }
        }

        if !touched {
            return Ok(vec![0.0; n]);
        }
        fft.inverse(&mut grad_spectrum);
        Ok(grad_spectrum.iter().map(|c| c.re).collect())
    }

    /// All rows, one reverse pass per descriptor entry.
    pub fn dense(&self, cap: usize) -> Result<ScatteringJacobian> {
        let m = self.net.len();
        if m > cap {
            return Err(Error::CapExceeded { rows: m, cap });
        }
        let n = self.net.signal_length();
        let mut data = Vec::with_capacity(m * n);
        let mut basis = vec![0.0; m];
        for k in 0..m {
            basis[k] = 1.0;
            data.extend(self.vjp(&basis)?);
            basis[k] = 0.0;
        }
        Ok(ScatteringJacobian { rows: m, cols: n, data, guard_ratio: GUARD_RATIO })
    }
}

/// Dense `M × N` Jacobian, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteringJacobian {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    /// Modulus derivatives were zeroed below this fraction of each envelope's peak.
    pub guard_ratio: f64,
}

impl ScatteringJacobian {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, k: usize) -> &[f64] {
        &self.data[k * self.cols..(k + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `J v`.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        (0..self.rows).map(|k| dot(self.row(k), v)).collect()
    }

    /// `Jᵀ w`.
    pub fn apply_transpose(&self, w: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        for (k, &wk) in w.iter().enumerate() {
            if wk != 0.0 {
                for (o, &j) in out.iter_mut().zip(self.row(k)) {
                    *o += wk * j;
                }
            }
        }
        out
    }

    /// `J Jᵀ` (M × M).
    pub fn gram(&self) -> DMatrix<f64> {
        let (m, n) = (self.rows, self.cols);
        let mut out = vec![0.0; m * m];
        // SAFETY: slices are sized m×n, n×m (the transposed view of the same
        // buffer) and m×m with matching strides.
        unsafe {
            matrixmultiply::dgemm(
                m,
                n,
                m,
                1.0,
                self.data.as_ptr(),
                n as isize,
                1,
                self.data.as_ptr(),
                1,
                n as isize,
                0.0,
                out.as_mut_ptr(),
                m as isize,
                1,
            );
        }
        let mut g = DMatrix::from_row_slice(m, m, &out);
        // Exact symmetry for the Cholesky factorisation.
        for i in 0..m {
            for j in 0..i {
                let s = 0.5 * (g[(i, j)] + g[(j, i)]);
                g[(i, j)] = s;
                g[(j, i)] = s;
            }
        }
        g
    }

    /// `{M, N}` as little-endian u64, then row-major little-endian f64.
    pub fn write_binary<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        w.write_all(&(self.rows as u64).to_le_bytes())?;
        w.write_all(&(self.cols as u64).to_le_bytes())?;
        for v in &self.data {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary(bytes: &[u8]) -> Result<Self> {
        let bad = || Error::UnsupportedFormat("truncated Jacobian dump".into());
        let word = |i: usize| -> Result<[u8; 8]> {
            bytes.get(i * 8..i * 8 + 8).ok_or_else(bad)?.try_into().map_err(|_| bad())
        };
        let rows = u64::from_le_bytes(word(0)?) as usize;
        let cols = u64::from_le_bytes(word(1)?) as usize;
        if bytes.len() != 16 + rows * cols * 8 {
            return Err(bad());
        }
        let data = (0..rows * cols).map(|i| word(i + 2).map(f64::from_le_bytes)).collect::<Result<_>>()?;
        Ok(ScatteringJacobian { rows, cols, data, guard_ratio: GUARD_RATIO })
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn jacobian_dense(x: &[f64], cfg: &DescriptorConfig) -> Result<ScatteringJacobian> {
    let net = ScatteringNetwork::new(cfg)?;
    ForwardCache::new(&net, x)?.dense(DEFAULT_DENSE_CAP)
}

pub fn jacobian_vjp(x: &[f64], cotangent: &[f64], cfg: &DescriptorConfig) -> Result<Vec<f64>> {
    let net = ScatteringNetwork::new(cfg)?;
    ForwardCache::new(&net, x)?.vjp(cotangent)
}

pub fn jacobian_jvp(x: &[f64], direction: &[f64], cfg: &DescriptorConfig) -> Result<Vec<f64>> {
    let net = ScatteringNetwork::new(cfg)?;
    ForwardCache::new(&net, x)?.jvp(direction)
}
