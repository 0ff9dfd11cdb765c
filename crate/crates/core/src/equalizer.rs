//! Frequency-domain equalization of the received block and unformatting
//! back to constellation symbols.
//!
//! The whole `n_b`-sample payload is treated as one block: the trailing
//! zero guard lets the receiver fold the convolution tail back onto the
//! block head ([`extract_payload_spectrum`]), turning the dispersive link
//! into the per-bin model `Y_k = H_k X_k + N_k`. Linear ZF/MMSE weights or
//! the iterative block DFE then operate bin-wise, and [`unformat`] undoes
//! interleaving and windowing to recover the per-symbol QPSK constellation.

use num_complex::Complex64;

use crate::channel::SnrPoint;
use crate::config::SystemConfig;
use crate::dsp;
use crate::tx;
use crate::{Error, Result};

/// ZF weights invert the channel; deep fades are clipped to this magnitude
/// instead of propagating infinities.
const ZF_CLIP_MAGNITUDE: f64 = 1e9;

/// One set of per-bin equalizer filters.
#[derive(Clone, Debug)]
pub struct EqualizerWeights {
    /// Feedforward filter `F_k`.
    pub feedforward: Vec<Complex64>,
    /// Feedback filter `B_k`; `None` for linear equalizers.
    pub feedback: Option<Vec<Complex64>>,
    /// Iteration index this set was built for (1-based; 0 for linear).
    pub iteration: usize,
    /// Decision correlation factor the filters assume.
    pub rho: f64,
}

/// Zero-forcing: `F_k = 1/H_k`, with deep fades clipped to a large
/// magnitude while keeping the correct phase.
pub fn zf_weights(cfr: &[Complex64]) -> EqualizerWeights {
    let feedforward = cfr
        .iter()
        .map(|h| {
            if h.norm() < 1.0 / ZF_CLIP_MAGNITUDE {
                if h.norm() == 0.0 {
                    Complex64::new(ZF_CLIP_MAGNITUDE, 0.0)
                } else {
                    (h / h.norm()).conj() * ZF_CLIP_MAGNITUDE
                }
            } else {
                h.inv()
            }
        })
        .collect();
    EqualizerWeights {
        feedforward,
        feedback: None,
        iteration: 0,
        rho: 0.0,
    }
}

/// MMSE: `F_k = H_k* / (|H_k|^2 + 1/gamma)`. Nulls dead bins instead of
/// amplifying them.
pub fn mmse_weights(cfr: &[Complex64], snr: SnrPoint) -> EqualizerWeights {
    let inv_gamma = snr.noise_var();
    let feedforward = cfr
        .iter()
        .map(|h| h.conj() / (h.norm_sqr() + inv_gamma))
        .collect();
    EqualizerWeights {
        feedforward,
        feedback: None,
        iteration: 0,
        rho: 0.0,
    }
}

/// Feedforward/feedback filter pair for one DFE iteration:
/// `F_k = kappa * H_k* / (1/gamma + (1 - rho^2)|H_k|^2)` with `kappa`
/// normalising `(1/n_b) * sum(F_k H_k)` to one, and
/// `B_k = rho * (F_k H_k - 1)`.
pub fn ibdfe_weights(cfr: &[Complex64], snr: SnrPoint, rho: f64) -> Result<EqualizerWeights> {
    if !(0.0..=1.0).contains(&rho) {
        return Err(Error::invalid("rho", format!("{rho} not in [0, 1]")));
    }
    if cfr.is_empty() {
        return Err(Error::EmptyInput("cfr"));
    }
    let inv_gamma = snr.noise_var();
    let residual = 1.0 - rho * rho;
    let raw: Vec<Complex64> = cfr
        .iter()
        .map(|h| h.conj() / (inv_gamma + residual * h.norm_sqr()))
        .collect();
    let gain: f64 = raw
        .iter()
        .zip(cfr)
        .map(|(f, h)| (f * h).re)
        .sum::<f64>()
        / cfr.len() as f64;
    if !(gain.is_finite() && gain > 0.0) {
        return Err(Error::invalid("cfr", "degenerate channel, cannot normalise"));
    }
    let kappa = 1.0 / gain;
    let feedforward: Vec<Complex64> = raw.iter().map(|f| f * kappa).collect();
    let feedback = feedforward
        .iter()
        .zip(cfr)
        .map(|(f, h)| (f * h - 1.0) * rho)
        .collect();
    Ok(EqualizerWeights {
        feedforward,
        feedback: Some(feedback),
        iteration: 0,
        rho,
    })
}

/// `F_k * Y_k` for a linear weight set.
pub fn apply_feedforward(y: &[Complex64], w: &EqualizerWeights) -> Result<Vec<Complex64>> {
    if y.len() != w.feedforward.len() {
        return Err(Error::LengthMismatch {
            what: "equalizer input",
            expected: w.feedforward.len(),
            actual: y.len(),
        });
    }
    Ok(y.iter().zip(&w.feedforward).map(|(yv, f)| yv * f).collect())
}

/// Output of one equalization pass over a block.
#[derive(Clone, Debug)]
pub struct EqualizedBlock {
    /// Equalized block spectrum before decisions.
    pub soft_freq: Vec<Complex64>,
    /// Hard decisions mapped back to the block-frequency domain, the
    /// feedback input of the next iteration.
    pub decided_freq: Vec<Complex64>,
    /// Constellation-domain soft symbols after unformatting.
    pub soft_symbols: Vec<Complex64>,
    /// Demapped hard bits.
    pub bits: Vec<u8>,
    /// 1-based DFE iteration that produced this block (0 for linear).
    pub iteration: usize,
}

/// Unformat an equalized spectrum and take hard decisions.
pub fn demodulate(soft_freq: Vec<Complex64>, cfg: &SystemConfig) -> Result<EqualizedBlock> {
    let soft_symbols = unformat(&soft_freq, cfg)?;
    let bits = tx::demap_qpsk(&soft_symbols);
    let decided: Vec<Complex64> = soft_symbols.iter().map(|&s| tx::hard_symbol(s)).collect();
    let decided_freq = reformat(&decided, cfg)?;
    Ok(EqualizedBlock {
        soft_freq,
        decided_freq,
        soft_symbols,
        bits,
        iteration: 0,
    })
}

/// One iteration of the block decision-feedback equalizer:
/// `X~_k = F_k Y_k - B_k X^_k` where `X^` are the previous iteration's
/// reformatted hard decisions. With `prev = None` (first iteration) the
/// feedback branch is off and `rho` is forced to zero.
pub fn ibdfe_iterate(
    y: &[Complex64],
    cfr: &[Complex64],
    snr: SnrPoint,
    prev: Option<&EqualizedBlock>,
    rho: f64,
    cfg: &SystemConfig,
) -> Result<EqualizedBlock> {
    if y.len() != cfr.len() {
        return Err(Error::LengthMismatch {
            what: "ibdfe input",
            expected: cfr.len(),
            actual: y.len(),
        });
    }
    let rho = if prev.is_some() { rho } else { 0.0 };
    let w = ibdfe_weights(cfr, snr, rho)?;
    let feedback = w.feedback.as_ref().expect("dfe weights carry feedback");
    let mut soft = apply_feedforward(y, &w)?;
    if let Some(p) = prev {
        if p.decided_freq.len() != soft.len() {
            return Err(Error::LengthMismatch {
                what: "feedback block",
                expected: soft.len(),
                actual: p.decided_freq.len(),
            });
        }
        for ((s, b), d) in soft.iter_mut().zip(feedback).zip(&p.decided_freq) {
            *s -= b * d;
        }
    }
    let mut block = demodulate(soft, cfg)?;
    block.iteration = prev.map_or(1, |p| p.iteration + 1);
    Ok(block)
}

/// Blockwise decision-to-estimate correlation,
/// `|sum(X^_k * conj(X~_k))| / sum(|X~_k|^2)`, clipped to `[0, 1]`.
/// A zero-energy soft block yields 0.
pub fn estimate_rho(decided: &[Complex64], soft: &[Complex64]) -> f64 {
    let energy: f64 = soft.iter().map(|v| v.norm_sqr()).sum();
    if energy <= 0.0 {
        return 0.0;
    }
    let cross: Complex64 = decided.iter().zip(soft).map(|(d, s)| d * s.conj()).sum();
    (cross.norm() / energy).clamp(0.0, 1.0)
}

/// Extract the payload region of a received frame and turn it into the
/// block spectrum `Y_k` of the circular model.
///
/// The linear convolution tail that spills into the trailing zero guard is
/// folded back onto the block head (overlap-add), which makes the extracted
/// block an exact circular convolution of payload and channel.
pub fn extract_payload_spectrum(
    rx: &[Complex64],
    frame_start: usize,
    cfg: &SystemConfig,
) -> Result<Vec<Complex64>> {
    let n_b = cfg.block_len();
    let payload_start = frame_start + cfg.preamble_len();
    if rx.len() < payload_start + n_b {
        return Err(Error::LengthMismatch {
            what: "received frame",
            expected: payload_start + n_b,
            actual: rx.len(),
        });
    }
    let mut block = rx[payload_start..payload_start + n_b].to_vec();
    let tail_end = (payload_start + n_b + cfg.n_zp).min(rx.len());
    for (j, t) in rx[payload_start + n_b..tail_end].iter().enumerate() {
        block[j] += t;
    }
    dsp::dft(&block)
}

/// Invert the block packing: time-deinterleave, matched-filter fold each
/// windowed symbol, and DFT back to the `n_s * n` constellation symbols.
pub fn unformat(block_freq: &[Complex64], cfg: &SystemConfig) -> Result<Vec<Complex64>> {
    if block_freq.len() != cfg.block_len() {
        return Err(Error::LengthMismatch {
            what: "block spectrum",
            expected: cfg.block_len(),
            actual: block_freq.len(),
        });
    }
    let n = cfg.n;
    let wl = cfg.window_len();
    let keep_lo = (2 * n - wl) / 2;
    let win = tx::srrc_window(n, cfg.beta)?;
    let scale = 1.0 / (wl as f64).sqrt();

    let time = dsp::idft(block_freq)?;
    let stacked = tx::deinterleave(&time, wl, cfg.n_s)?;
    let mut symbols = Vec::with_capacity(cfg.symbols_per_block());
    for col in stacked.chunks_exact(wl) {
        // matched filter + overlap fold; squared window copies one period
        // apart sum to one
        let mut folded = vec![Complex64::ZERO; n];
        for (r, v) in col.iter().enumerate() {
            folded[r % n] += v * win[keep_lo + r];
        }
        let spec = dsp::dft(&folded)?;
        symbols.extend(spec.into_iter().map(|s| s * scale));
    }
    Ok(symbols)
}

/// Map constellation symbols back to the block-frequency domain: pack them
/// exactly like the transmitter and take the block DFT. Right inverse of
/// [`unformat`].
pub fn reformat(symbols: &[Complex64], cfg: &SystemConfig) -> Result<Vec<Complex64>> {
    let block = tx::build_block(symbols, cfg)?;
    dsp::dft(&block)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{self, ChannelRealization};
    use crate::dsp::RngStream;
    use rand::Rng;

    fn random_symbols(rng: &mut RngStream, n: usize) -> Vec<Complex64> {
        let bits: Vec<u8> = (0..2 * n).map(|_| rng.random_range(0..2u8)).collect();
        tx::map_qpsk(&bits).unwrap()
    }

    fn random_cfr(rng: &mut RngStream, n: usize) -> Vec<Complex64> {
        dsp::gaussian_noise(rng, n, 1.0).unwrap()
    }

    #[test]
    fn zf_reference_cases() {
        let ones = vec![Complex64::new(1.0, 0.0); 8];
        let w = zf_weights(&ones);
        for f in &w.feedforward {
            assert!((f - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }

        let w = zf_weights(&[Complex64::new(2.0, 0.0)]);
        assert!((w.feedforward[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);

        // deep fade clipped at large magnitude with the right phase
        let h = Complex64::from_polar(1e-12, 0.7);
        let w = zf_weights(&[h]);
        assert!((w.feedforward[0].norm() - ZF_CLIP_MAGNITUDE).abs() < 1.0);
        assert!((w.feedforward[0].arg() + 0.7).abs() < 1e-9);
    }

    #[test]
    fn mmse_reference_cases() {
        let w = mmse_weights(&[Complex64::new(1.0, 0.0)], SnrPoint::new(1.0).unwrap());
        assert!((w.feedforward[0] - Complex64::new(0.5, 0.0)).norm() < 1e-15);

        let w = mmse_weights(&[Complex64::ZERO], SnrPoint::new(10.0).unwrap());
        assert_eq!(w.feedforward[0], Complex64::ZERO);
    }

    #[test]
    fn mmse_approaches_zf_at_high_snr() {
        let mut rng = RngStream::new(50, 0);
        let cfr = random_cfr(&mut rng, 64);
        let wz = zf_weights(&cfr);
        let wm = mmse_weights(&cfr, SnrPoint::new(1e12).unwrap());
        for ((m, z), h) in wm.feedforward.iter().zip(&wz.feedforward).zip(&cfr) {
            if h.norm() > 0.01 {
                assert!((m - z).norm() < 1e-6, "|H| = {}", h.norm());
            }
        }
    }

    #[test]
    fn ibdfe_weights_flat_channel_closed_form() {
        // On a flat channel the normalisation drives F to exactly 1, which
        // means kappa = 1/gamma + (1 - rho^2), and the feedback filter
        // F*H - 1 vanishes.
        let n = 16;
        let cfr = vec![Complex64::new(1.0, 0.0); n];
        let gamma = 4.0;
        let rho: f64 = 0.6;
        let w = ibdfe_weights(&cfr, SnrPoint::new(gamma).unwrap(), rho).unwrap();
        for f in &w.feedforward {
            assert!((f - Complex64::new(1.0, 0.0)).norm() < 1e-12);
        }
        for b in w.feedback.as_ref().unwrap() {
            assert!(b.norm() < 1e-12);
        }
    }

    #[test]
    fn ibdfe_weights_satisfy_normalisation() {
        let mut rng = RngStream::new(51, 0);
        for rho in [0.0, 0.3, 0.9, 1.0] {
            let cfr = random_cfr(&mut rng, 256);
            let w = ibdfe_weights(&cfr, SnrPoint::from_db(8.0), rho).unwrap();
            let gain: Complex64 = w
                .feedforward
                .iter()
                .zip(&cfr)
                .map(|(f, h)| f * h)
                .sum::<Complex64>()
                / 256.0;
            assert!((gain - Complex64::new(1.0, 0.0)).norm() < 1e-9);
        }
        assert!(ibdfe_weights(&random_cfr(&mut rng, 8), SnrPoint::from_db(8.0), 1.2).is_err());
        assert!(ibdfe_weights(&random_cfr(&mut rng, 8), SnrPoint::from_db(8.0), -0.1).is_err());
    }

    #[test]
    fn first_iteration_matches_mmse_decisions() {
        let cfg = SystemConfig::default();
        let mut rng = RngStream::new(52, 0);
        let symbols = random_symbols(&mut rng, cfg.symbols_per_block());
        let x = reformat(&symbols, &cfg).unwrap();
        let cfr = random_cfr(&mut rng, cfg.block_len());
        let snr = SnrPoint::from_db(12.0);
        let noise = dsp::gaussian_noise(&mut rng, x.len(), snr.noise_var() * x.len() as f64)
            .unwrap();
        let y: Vec<Complex64> = x
            .iter()
            .zip(&cfr)
            .zip(&noise)
            .map(|((xv, h), n)| xv * h + n)
            .collect();

        let blk = ibdfe_iterate(&y, &cfr, snr, None, 0.0, &cfg).unwrap();
        assert_eq!(blk.iteration, 1);

        let wm = mmse_weights(&cfr, snr);
        let soft = apply_feedforward(&y, &wm).unwrap();
        let mmse_blk = demodulate(soft, &cfg).unwrap();
        assert_eq!(blk.bits, mmse_blk.bits);
    }

    #[test]
    fn perfect_feedback_cancels_isi_exactly() {
        let cfg = SystemConfig::default();
        let mut rng = RngStream::new(53, 0);
        let symbols = random_symbols(&mut rng, cfg.symbols_per_block());
        let x = reformat(&symbols, &cfg).unwrap();
        let cfr = random_cfr(&mut rng, cfg.block_len());
        let snr = SnrPoint::from_db(10.0);
        let noise =
            dsp::gaussian_noise(&mut rng, x.len(), snr.noise_var() * x.len() as f64).unwrap();
        let y: Vec<Complex64> = x
            .iter()
            .zip(&cfr)
            .zip(&noise)
            .map(|((xv, h), n)| xv * h + n)
            .collect();

        // pretend the previous iteration decided everything correctly
        let prev = EqualizedBlock {
            soft_freq: x.clone(),
            decided_freq: x.clone(),
            soft_symbols: symbols.clone(),
            bits: Vec::new(),
            iteration: 1,
        };
        let blk = ibdfe_iterate(&y, &cfr, snr, Some(&prev), 1.0, &cfg).unwrap();
        let w = ibdfe_weights(&cfr, snr, 1.0).unwrap();
        // X~ - X must be exactly F .* N: all ISI cancelled
        for (((s, xv), f), n) in blk
            .soft_freq
            .iter()
            .zip(&x)
            .zip(&w.feedforward)
            .zip(&noise)
        {
            assert!((s - xv - f * n).norm() < 1e-9);
        }
        assert_eq!(blk.iteration, 2);
    }

    #[test]
    fn rho_estimator_reference_cases() {
        let mut rng = RngStream::new(54, 0);
        let x = dsp::gaussian_noise(&mut rng, 64, 1.0).unwrap();
        assert!((estimate_rho(&x, &x) - 1.0).abs() < 1e-12);

        // orthogonal blocks decorrelate to zero
        let mut y = vec![Complex64::ZERO; 64];
        y[0] = Complex64::new(1.0, 0.0);
        let mut z = vec![Complex64::ZERO; 64];
        z[1] = Complex64::new(1.0, 0.0);
        assert_eq!(estimate_rho(&y, &z), 0.0);

        assert_eq!(estimate_rho(&x, &vec![Complex64::ZERO; 64]), 0.0);
    }

    #[test]
    fn rho_is_high_after_one_clean_iteration() {
        let cfg = SystemConfig {
            n_s: 4,
            ..SystemConfig::default()
        };
        let snr = SnrPoint::from_db(20.0);
        let mut rng = RngStream::new(55, 0);
        let cfr = vec![Complex64::new(1.0, 0.0); cfg.block_len()];
        for _ in 0..100 {
            let symbols = random_symbols(&mut rng, cfg.symbols_per_block());
            let x = reformat(&symbols, &cfg).unwrap();
            let noise =
                dsp::gaussian_noise(&mut rng, x.len(), snr.noise_var() * x.len() as f64)
                    .unwrap();
            let y: Vec<Complex64> = x.iter().zip(&noise).map(|(xv, n)| xv + n).collect();
            let blk = ibdfe_iterate(&y, &cfr, snr, None, 0.0, &cfg).unwrap();
            let rho = estimate_rho(&blk.decided_freq, &blk.soft_freq);
            assert!(rho > 0.95, "rho = {rho}");
        }
    }

    #[test]
    fn unformat_inverts_build_block() {
        for (n, n_s, beta) in [(64usize, 42usize, 0.5), (32, 8, 0.25), (8, 3, 0.0)] {
            let cfg = SystemConfig {
                n,
                n_s,
                beta,
                ..SystemConfig::default()
            };
            let mut rng = RngStream::new(56, 0);
            let symbols = random_symbols(&mut rng, cfg.symbols_per_block());
            let block = tx::build_block(&symbols, &cfg).unwrap();
            let freq = dsp::dft(&block).unwrap();
            let back = unformat(&freq, &cfg).unwrap();
            let err = back
                .iter()
                .zip(&symbols)
                .map(|(a, b)| (a - b).norm())
                .fold(0.0, f64::max);
            assert!(err < 1e-10, "n={n} beta={beta}: err {err}");
        }
    }

    #[test]
    fn unformat_is_linear_single_tone() {
        let cfg = SystemConfig {
            n_s: 3,
            ..SystemConfig::default()
        };
        let mut symbols = vec![Complex64::ZERO; cfg.symbols_per_block()];
        symbols[5] = Complex64::new(0.0, 1.0);
        let freq = reformat(&symbols, &cfg).unwrap();
        let back = unformat(&freq, &cfg).unwrap();
        for (k, v) in back.iter().enumerate() {
            if k == 5 {
                assert!((v - symbols[5]).norm() < 1e-10);
            } else {
                assert!(v.norm() < 1e-10);
            }
        }
    }

    #[test]
    fn reformat_unformat_are_inverse_pair() {
        let cfg = SystemConfig {
            n_s: 6,
            ..SystemConfig::default()
        };
        let mut rng = RngStream::new(57, 0);
        let s = random_symbols(&mut rng, cfg.symbols_per_block());
        let round = unformat(&reformat(&s, &cfg).unwrap(), &cfg).unwrap();
        let es: f64 = s.iter().map(|v| v.norm_sqr()).sum();
        let er: f64 = round.iter().map(|v| v.norm_sqr()).sum();
        assert!((es - er).abs() / es < 1e-9);
        for (a, b) in round.iter().zip(&s) {
            assert!((a - b).norm() < 1e-10);
        }

        let b = reformat(&s, &cfg).unwrap();
        let again = reformat(&unformat(&b, &cfg).unwrap(), &cfg).unwrap();
        for (x, y) in again.iter().zip(&b) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn extracted_spectrum_obeys_circular_model() {
        let cfg = SystemConfig::default();
        let mut rng = RngStream::new(58, 0);
        let frame = tx::random_frame(&cfg, &mut rng).unwrap();
        let ch = channel::draw_channel(&mut rng, 32, cfg.n_zp).unwrap();
        let rx = channel::apply(frame.samples(), &ch, SnrPoint::NOISELESS, &mut rng);

        let y = extract_payload_spectrum(&rx, 0, &cfg).unwrap();
        let x = dsp::dft(frame.payload()).unwrap();
        let h = channel::exact_cfr(&ch, cfg.block_len()).unwrap();
        for ((yv, xv), hv) in y.iter().zip(&x).zip(&h) {
            assert!((yv - xv * hv).norm() < 1e-9);
        }
    }

    #[test]
    fn zf_with_exact_cfr_recovers_bits_noiselessly() {
        let cfg = SystemConfig::default();
        let mut rng = RngStream::new(59, 0);
        for _ in 0..5 {
            let frame = tx::random_frame(&cfg, &mut rng).unwrap();
            let ch = channel::draw_channel(&mut rng, 8, cfg.n_zp).unwrap();
            let rx = channel::apply(frame.samples(), &ch, SnrPoint::NOISELESS, &mut rng);
            let y = extract_payload_spectrum(&rx, 0, &cfg).unwrap();
            let h = channel::exact_cfr(&ch, cfg.block_len()).unwrap();
            let soft = apply_feedforward(&y, &zf_weights(&h)).unwrap();
            let blk = demodulate(soft, &cfg).unwrap();
            assert_eq!(blk.bits, frame.tx_bits());
        }
    }

    #[test]
    fn rejects_mismatched_lengths() {
        let cfg = SystemConfig::default();
        assert!(unformat(&[Complex64::ZERO; 10], &cfg).is_err());
        assert!(reformat(&[Complex64::ZERO; 10], &cfg).is_err());
        let w = zf_weights(&[Complex64::new(1.0, 0.0); 4]);
        assert!(apply_feedforward(&[Complex64::ZERO; 3], &w).is_err());
    }
}
