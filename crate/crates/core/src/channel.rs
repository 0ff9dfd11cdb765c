//! Dispersive link simulation: uncorrelated Rayleigh multipath taps, linear
//! convolution of the transmitted frame, AWGN injection at a requested SNR,
//! and exact CFR computation for perfect-CSI baselines.

use num_complex::Complex64;

use crate::dsp::{self, RngStream};
use crate::{Error, Result};

/// Receiver-input SNR: average data-symbol power over noise variance per
/// sample. The transmitted payload has unit power, so the AWGN variance is
/// simply `1/gamma`. `f64::INFINITY` models a noiseless link.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SnrPoint {
    gamma: f64,
}

impl SnrPoint {
    pub fn new(gamma: f64) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::invalid("gamma", format!("{gamma} must be > 0")));
        }
        Ok(SnrPoint { gamma })
    }

    pub fn from_db(db: f64) -> Self {
        SnrPoint {
            gamma: 10f64.powf(db / 10.0),
        }
    }

    pub const NOISELESS: SnrPoint = SnrPoint { gamma: f64::INFINITY };

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// AWGN variance per complex sample, `1/gamma`.
    pub fn noise_var(&self) -> f64 {
        self.gamma.recip()
    }
}

/// One multipath realization: symbol-spaced taps, constant over a frame.
#[derive(Clone, Debug)]
pub struct ChannelRealization {
    taps: Vec<Complex64>,
    power_profile: Vec<f64>,
}

impl ChannelRealization {
    /// Build from explicit taps; the profile records per-tap `|h|^2`.
    pub fn from_taps(taps: Vec<Complex64>) -> Result<Self> {
        if taps.is_empty() {
            return Err(Error::EmptyInput("channel taps"));
        }
        let power_profile = taps.iter().map(|t| t.norm_sqr()).collect();
        Ok(ChannelRealization {
            taps,
            power_profile,
        })
    }

    pub fn taps(&self) -> &[Complex64] {
        &self.taps
    }

    pub fn power_profile(&self) -> &[f64] {
        &self.power_profile
    }

    pub fn len(&self) -> usize {
        self.taps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.taps.is_empty()
    }
}

/// Draw `taps` uncorrelated Rayleigh taps with a uniform power-delay profile
/// normalised to unit energy in expectation (`E[|h_i|^2] = 1/taps`).
///
/// `guard_len` is the zero-guard budget of the frame; a response longer than
/// the guard would leak between blocks, so it is rejected.
pub fn draw_channel(
    rng: &mut RngStream,
    taps: usize,
    guard_len: usize,
) -> Result<ChannelRealization> {
    if taps == 0 {
        return Err(Error::EmptyInput("channel taps"));
    }
    if taps > guard_len {
        return Err(Error::invalid(
            "taps",
            format!("{taps} exceeds the zero-guard length {guard_len}"),
        ));
    }
    let var = 1.0 / taps as f64;
    let h = dsp::gaussian_noise(rng, taps, var)?;
    Ok(ChannelRealization {
        taps: h,
        power_profile: vec![var; taps],
    })
}

/// Linear convolution of the frame with the channel taps plus AWGN of
/// variance `1/gamma` per sample. Output length is
/// `frame.len() + taps - 1`.
pub fn apply(
    frame: &[Complex64],
    ch: &ChannelRealization,
    snr: SnrPoint,
    rng: &mut RngStream,
) -> Vec<Complex64> {
    let mut out = convolve(frame, ch.taps());
    let noise = dsp::gaussian_noise(rng, out.len(), snr.noise_var())
        .expect("noise variance is non-negative");
    for (o, n) in out.iter_mut().zip(noise) {
        *o += n;
    }
    out
}

/// Plain linear convolution, no noise.
pub fn convolve(x: &[Complex64], h: &[Complex64]) -> Vec<Complex64> {
    if x.is_empty() || h.is_empty() {
        return Vec::new();
    }
    let mut out = vec![Complex64::ZERO; x.len() + h.len() - 1];
    for (i, &xv) in x.iter().enumerate() {
        for (j, &hv) in h.iter().enumerate() {
            out[i + j] += xv * hv;
        }
    }
    out
}

/// Channel frequency response: DFT of the zero-padded taps.
pub fn exact_cfr(ch: &ChannelRealization, size: usize) -> Result<Vec<Complex64>> {
    if size < ch.len() {
        return Err(Error::invalid(
            "size",
            format!("{size} shorter than the {}-tap response", ch.len()),
        ));
    }
    let mut padded = ch.taps().to_vec();
    padded.resize(size, Complex64::ZERO);
    dsp::dft(&padded)
}
