//! Numeric primitives shared by the whole chain: forward/inverse DFT of
//! arbitrary length, linear cross-correlation, circularly-symmetric complex
//! AWGN, and splittable deterministic RNG streams.
//!
//! DFT normalisation convention, applied everywhere in this crate: the
//! forward transform is unnormalised and the inverse carries the `1/size`
//! factor, so `idft(dft(x)) == x`.

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rustfft::{Fft, FftPlanner};

use crate::{Error, Result};

/// A deterministic random stream. `(seed, stream_id)` fully determines the
/// generated sequence, so Monte-Carlo trials can each own an independent
/// stream and reproduce bit-exactly regardless of thread scheduling.
#[derive(Clone, Debug)]
pub struct RngStream {
    inner: ChaCha8Rng,
}

impl RngStream {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        let mut inner = ChaCha8Rng::seed_from_u64(seed);
        inner.set_stream(stream_id);
        RngStream { inner }
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.inner.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.inner.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.inner.fill_bytes(dest)
    }
}

thread_local! {
    static PLANNER: RefCell<FftPlanner<f64>> = RefCell::new(FftPlanner::new());
}

fn plan_forward(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(len))
}

fn plan_inverse(len: usize) -> Arc<dyn Fft<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(len))
}

/// Unnormalised forward DFT of the whole buffer.
pub fn dft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput("dft"));
    }
    let mut buf = x.to_vec();
    plan_forward(buf.len()).process(&mut buf);
    Ok(buf)
}

/// Inverse DFT with `1/size` scaling, the exact inverse of [`dft`].
pub fn idft(x: &[Complex64]) -> Result<Vec<Complex64>> {
    if x.is_empty() {
        return Err(Error::EmptyInput("idft"));
    }
    let mut buf = x.to_vec();
    plan_inverse(buf.len()).process(&mut buf);
    let scale = 1.0 / buf.len() as f64;
    for v in &mut buf {
        *v *= scale;
    }
    Ok(buf)
}

/// Linear cross-correlation of a sample stream against a known reference.
///
/// Output has length `y.len() + p.len() - 1`. Output index `i` corresponds
/// to aligning the start of `p` at stream position `i - (p.len() - 1)`, so a
/// copy of `p` embedded at stream offset `d` produces its peak at index
/// `d + p.len() - 1`, with peak value `sum(|p|^2)` in the noiseless case.
pub fn xcorr(y: &[Complex64], p: &[Complex64]) -> Result<Vec<Complex64>> {
    if y.is_empty() || p.is_empty() {
        return Err(Error::EmptyInput("xcorr"));
    }
    let out_len = y.len() + p.len() - 1;
    let fft_len = out_len.next_power_of_two();
    let fwd = plan_forward(fft_len);

    let mut a = vec![Complex64::ZERO; fft_len];
    a[..y.len()].copy_from_slice(y);
    fwd.process(&mut a);

    // Correlation == convolution with the reversed conjugate reference.
    let mut b = vec![Complex64::ZERO; fft_len];
    for (i, v) in p.iter().rev().enumerate() {
        b[i] = v.conj();
    }
    fwd.process(&mut b);

    for (va, vb) in a.iter_mut().zip(&b) {
        *va *= vb;
    }
    plan_inverse(fft_len).process(&mut a);
    let scale = 1.0 / fft_len as f64;
    a.truncate(out_len);
    for v in &mut a {
        *v *= scale;
    }
    Ok(a)
}

/// `n` circularly-symmetric complex Gaussian samples with per-sample total
/// variance `variance` (`variance/2` per real/imaginary component).
pub fn gaussian_noise(rng: &mut RngStream, n: usize, variance: f64) -> Result<Vec<Complex64>> {
    if variance < 0.0 || variance.is_nan() {
        return Err(Error::invalid("variance", format!("{variance}")));
    }
    let sigma = (variance / 2.0).sqrt();
    let normal = StandardNormal;
    Ok((0..n)
        .map(|_| {
            let re: f64 = normal.sample(rng);
            let im: f64 = normal.sample(rng);
            Complex64::new(re * sigma, im * sigma)
        })
        .collect())
}

/// Mean of `|x|^2` over the buffer.
pub fn avg_power(x: &[Complex64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    x.iter().map(|v| v.norm_sqr()).sum::<f64>() / x.len() as f64
}
