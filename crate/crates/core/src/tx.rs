//! Transmit chain: QPSK mapping, SRRC windowing, block packing with time
//! interleaving, and frame assembly.
//!
//! A block is built per symbol as `truncate(window .* [idft(S); idft(S)])`:
//! the length-`n` IDFT is tiled twice, shaped by the square-root
//! raised-cosine window, and truncated to the central `n*(1+beta)` samples.
//! The `n_s` windowed symbols are then stacked as columns and read out
//! row-wise, which spreads every OFDM symbol uniformly across the block.
//! Squared overlapped window copies sum to one, so the receiver's matched
//! filter fold reconstructs each symbol exactly.

use num_complex::Complex64;
use rand::Rng;

use crate::config::SystemConfig;
use crate::dsp::{self, RngStream};
use crate::{Error, Result};

const FRAC_1_SQRT_2: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Square-root raised-cosine window of roll-off `beta`, sampled at
/// `2n` points indexed `m = -n .. n-1` (array index `m + n`).
///
/// For `beta = 0` the window degenerates to the rectangular window covering
/// one full IDFT period, `m in [-n/2, n/2)`.
pub fn srrc_window(n: usize, beta: f64) -> Result<Vec<f64>> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::invalid("beta", format!("{beta} not in [0, 1]")));
    }
    let nf = n as f64;
    let lo = nf * (1.0 - beta) / 2.0;
    let hi = nf * (1.0 + beta) / 2.0;
    if (lo - lo.round()).abs() > 1e-9 || (hi - hi.round()).abs() > 1e-9 {
        return Err(Error::invalid(
            "beta",
            format!("window breakpoints {lo}/{hi} not on sample indices"),
        ));
    }

    let mut w = vec![0.0; 2 * n];
    for (a, wv) in w.iter_mut().enumerate() {
        let m = a as f64 - nf;
        if beta == 0.0 {
            *wv = if (-nf / 2.0..nf / 2.0).contains(&m) { 1.0 } else { 0.0 };
            continue;
        }
        let am = m.abs();
        *wv = if am < lo {
            1.0
        } else if am < hi {
            (std::f64::consts::PI / (4.0 * beta) * (2.0 * am / nf - (1.0 - beta))).cos()
        } else {
            0.0
        };
    }
    Ok(w)
}

/// Gray-mapped QPSK with unit symbol power. Bit pair `(b0, b1)` maps to
/// `((1-2*b1) + j*(1-2*b0)) / sqrt(2)`, i.e. `00 -> (+1+j)/sqrt(2)`,
/// `01 -> (-1+j)/sqrt(2)`, `11 -> (-1-j)/sqrt(2)`, `10 -> (+1-j)/sqrt(2)`.
pub fn map_qpsk(bits: &[u8]) -> Result<Vec<Complex64>> {
    if bits.len() % 2 != 0 {
        return Err(Error::invalid("bits", format!("odd count {}", bits.len())));
    }
    Ok(bits
        .chunks_exact(2)
        .map(|b| {
            let re = if b[1] & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            let im = if b[0] & 1 == 0 { FRAC_1_SQRT_2 } else { -FRAC_1_SQRT_2 };
            Complex64::new(re, im)
        })
        .collect())
}

/// Minimum-distance hard demapping, the inverse of [`map_qpsk`].
pub fn demap_qpsk(symbols: &[Complex64]) -> Vec<u8> {
    let mut bits = Vec::with_capacity(2 * symbols.len());
    for s in symbols {
        bits.push(u8::from(s.im < 0.0));
        bits.push(u8::from(s.re < 0.0));
    }
    bits
}

/// Nearest QPSK constellation point.
pub fn hard_symbol(s: Complex64) -> Complex64 {
    Complex64::new(
        FRAC_1_SQRT_2.copysign(s.re),
        FRAC_1_SQRT_2.copysign(s.im),
    )
}

/// Column-stacked matrix (`rows * cols`, column-major) read out row-wise.
pub fn interleave(stacked: &[Complex64], rows: usize, cols: usize) -> Result<Vec<Complex64>> {
    if stacked.len() != rows * cols {
        return Err(Error::LengthMismatch {
            what: "interleave input",
            expected: rows * cols,
            actual: stacked.len(),
        });
    }
    let mut out = Vec::with_capacity(stacked.len());
    for r in 0..rows {
        for c in 0..cols {
            out.push(stacked[c * rows + r]);
        }
    }
    Ok(out)
}

/// Exact inverse of [`interleave`].
pub fn deinterleave(block: &[Complex64], rows: usize, cols: usize) -> Result<Vec<Complex64>> {
    if block.len() != rows * cols {
        return Err(Error::LengthMismatch {
            what: "deinterleave input",
            expected: rows * cols,
            actual: block.len(),
        });
    }
    let mut out = vec![Complex64::ZERO; block.len()];
    for r in 0..rows {
        for c in 0..cols {
            out[c * rows + r] = block[r * cols + c];
        }
    }
    Ok(out)
}

/// Pack `n_s * n` frequency-domain symbols into one interleaved block of
/// `n_b` time samples.
///
/// Each IDFT output is scaled by `sqrt(n*(1+beta))` so the packed payload
/// has unit average power when the input constellation does.
pub fn build_block(data_symbols: &[Complex64], cfg: &SystemConfig) -> Result<Vec<Complex64>> {
    if data_symbols.len() != cfg.symbols_per_block() {
        return Err(Error::LengthMismatch {
            what: "data symbols",
            expected: cfg.symbols_per_block(),
            actual: data_symbols.len(),
        });
    }
    let n = cfg.n;
    let wl = cfg.window_len();
    let keep_lo = (2 * n - wl) / 2;
    let win = srrc_window(n, cfg.beta)?;
    let scale = (wl as f64).sqrt();

    let mut stacked = Vec::with_capacity(cfg.block_len());
    for sym in data_symbols.chunks_exact(n) {
        let x = dsp::idft(sym)?;
        // Tiled IDFT periods shaped by the window, central wl samples kept.
        // The tile phase is anchored at the kept region so the first kept
        // sample is x[0]; with beta = 0 the block is then the plain
        // concatenation of the IDFTs.
        for r in 0..wl {
            stacked.push(x[r % n] * win[keep_lo + r] * scale);
        }
    }
    interleave(&stacked, wl, cfg.n_s)
}

/// One assembled frame plus the bits it carries, the ground truth for BER.
#[derive(Clone, Debug)]
pub struct TibwbFrame {
    samples: Vec<Complex64>,
    tx_bits: Vec<u8>,
    preamble_len: usize,
    block_len: usize,
}

impl TibwbFrame {
    /// Full transmitted sample sequence
    /// `[preamble | payload | zeros(n_zp)]`.
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// The channel bits carried by the payload.
    pub fn tx_bits(&self) -> &[u8] {
        &self.tx_bits
    }

    pub fn payload(&self) -> &[Complex64] {
        &self.samples[self.preamble_len..self.preamble_len + self.block_len]
    }
}

/// Attach preamble and trailing zero guard to a payload block.
pub fn assemble_frame(
    payload: &[Complex64],
    cfg: &SystemConfig,
    tx_bits: Vec<u8>,
) -> Result<TibwbFrame> {
    if payload.len() != cfg.block_len() {
        return Err(Error::LengthMismatch {
            what: "payload",
            expected: cfg.block_len(),
            actual: payload.len(),
        });
    }
    let preamble = cfg.preamble()?;
    let mut samples = Vec::with_capacity(cfg.frame_len());
    samples.extend_from_slice(preamble.samples());
    samples.extend_from_slice(payload);
    samples.resize(cfg.frame_len(), Complex64::ZERO);
    Ok(TibwbFrame {
        samples,
        tx_bits,
        preamble_len: cfg.preamble_len(),
        block_len: cfg.block_len(),
    })
}

/// Random uncoded QPSK frame, bits drawn from `rng`.
pub fn random_frame(cfg: &SystemConfig, rng: &mut RngStream) -> Result<TibwbFrame> {
    let bits: Vec<u8> = (0..cfg.bits_per_block())
        .map(|_| rng.random_range(0..2u8))
        .collect();
    frame_from_bits(&bits, cfg)
}

/// Build a frame carrying exactly the given channel bits.
pub fn frame_from_bits(bits: &[u8], cfg: &SystemConfig) -> Result<TibwbFrame> {
    let symbols = map_qpsk(bits)?;
    let payload = build_block(&symbols, cfg)?;
    assemble_frame(&payload, cfg, bits.to_vec())
}
