//! Zadoff-Chu sequences and the transmitted frame preamble.
//!
//! ZC sequences are CAZAC: constant amplitude with a delta-like cyclic
//! autocorrelation, and for prime length the cyclic cross-correlation of two
//! distinct-root sequences has constant magnitude `sqrt(N_ZC)`. Both
//! properties make them good frame markers and channel-sounding signals.
//!
//! The preamble block transmitted ahead of each data block is
//! `[zc * g, zeros(n_zp)]`: the (zero-padded) ZC sequence scaled to sit
//! `boost_db` above the unit data power, followed by a zero guard. The guard
//! keeps the ZC's multipath tail inside the preamble observation window and
//! out of the payload, and the previous frame's trailing guard protects the
//! ZC itself, so the `n_zp + n_p` receive window obeys an exact circular
//! convolution model whenever the channel impulse response is shorter than
//! the guard.

use num_complex::Complex64;

use crate::{Error, Result};

/// Parameters of a Zadoff-Chu preamble sequence.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ZcSpec {
    root: usize,
    length: usize,
    pad_to: usize,
}

impl ZcSpec {
    /// `length` must be odd, `root` in `1..length`, `pad_to >= length`.
    pub fn new(root: usize, length: usize, pad_to: usize) -> Result<Self> {
        if length % 2 == 0 {
            return Err(Error::invalid("n_zc", format!("{length} is even")));
        }
        if root == 0 || root >= length {
            return Err(Error::invalid(
                "zc_root",
                format!("{root} not in 1..{length}"),
            ));
        }
        if pad_to < length {
            return Err(Error::invalid(
                "n_p",
                format!("padded length {pad_to} < sequence length {length}"),
            ));
        }
        Ok(ZcSpec {
            root,
            length,
            pad_to,
        })
    }

    pub fn root(&self) -> usize {
        self.root
    }

    pub fn length(&self) -> usize {
        self.length
    }

    pub fn pad_to(&self) -> usize {
        self.pad_to
    }
}

/// `zc[q] = exp(-j*pi*root*q*(q+1)/length)` for `q = 0..length`, then
/// zero-padded to `pad_to` samples.
pub fn generate_zc(spec: &ZcSpec) -> Vec<Complex64> {
    let n = spec.length as f64;
    let mut out = Vec::with_capacity(spec.pad_to);
    for q in 0..spec.length {
        let qf = q as f64;
        let phase = -std::f64::consts::PI * spec.root as f64 * qf * (qf + 1.0) / n;
        out.push(Complex64::from_polar(1.0, phase));
    }
    out.resize(spec.pad_to, Complex64::ZERO);
    out
}

/// The transmitted preamble: boosted ZC followed by a zero guard.
#[derive(Clone, Debug)]
pub struct PreambleBlock {
    samples: Vec<Complex64>,
    boost_db: f64,
    zc_len: usize,
    guard_len: usize,
}

impl PreambleBlock {
    /// Full preamble samples, `pad_to + n_zp` long.
    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn boost_db(&self) -> f64 {
        self.boost_db
    }

    pub fn guard_len(&self) -> usize {
        self.guard_len
    }

    /// The non-zero ZC region, the reference the frame detector correlates
    /// against. The zero guard adds nothing to a correlation.
    pub fn correlation_ref(&self) -> &[Complex64] {
        &self.samples[..self.zc_len]
    }

    /// Autocorrelation peak of the boosted preamble,
    /// `n_zc * 10^(boost_db/10)` for a unit-modulus ZC.
    pub fn expected_peak(&self) -> f64 {
        self.zc_len as f64 * 10f64.powf(self.boost_db / 10.0)
    }
}

/// Build the transmitted preamble block `[zc_padded * g, zeros(n_zp)]` where
/// `g = 10^(boost_db/20)` scales the ZC average power to `boost_db` above the
/// unit per-sample data power.
pub fn build_preamble(spec: &ZcSpec, n_zp: usize, boost_db: f64) -> Result<PreambleBlock> {
    let gain = 10f64.powf(boost_db / 20.0);
    let mut samples = generate_zc(spec);
    for v in &mut samples {
        *v *= gain;
    }
    samples.resize(spec.pad_to + n_zp, Complex64::ZERO);
    Ok(PreambleBlock {
        samples,
        boost_db,
        zc_len: spec.length,
        guard_len: n_zp,
    })
}

/// Closed-form autocorrelation peak of a boosted preamble built from `spec`.
pub fn expected_peak(spec: &ZcSpec, boost_db: f64) -> f64 {
    spec.length as f64 * 10f64.powf(boost_db / 10.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp;

    /// Brute-force cyclic correlation at every lag.
    fn cyclic_xcorr(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
        let n = a.len();
        (0..n)
            .map(|lag| {
                (0..n)
                    .map(|m| a[m] * b[(m + lag) % n].conj())
                    .sum::<Complex64>()
            })
            .collect()
    }

    fn table_spec() -> ZcSpec {
        ZcSpec::new(34, 95, 96).unwrap()
    }

    #[test]
    fn first_sample_is_one() {
        for root in [1, 17, 34, 90] {
            let zc = generate_zc(&ZcSpec::new(root, 95, 95).unwrap());
            assert!((zc[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn constant_amplitude() {
        let spec = table_spec();
        let zc = generate_zc(&spec);
        for v in &zc[..95] {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }
        assert_eq!(zc[95], Complex64::ZERO);
    }

    #[test]
    fn cyclic_autocorrelation_is_delta() {
        let spec = ZcSpec::new(34, 95, 95).unwrap();
        let zc = generate_zc(&spec);
        let c = cyclic_xcorr(&zc, &zc);
        assert!((c[0].norm() - 95.0).abs() < 1e-9);
        for v in &c[1..] {
            assert!(v.norm() < 1e-9 * 95.0, "sidelobe {}", v.norm());
        }
    }

    #[test]
    fn coprime_roots_cross_correlate_flat() {
        let a = generate_zc(&ZcSpec::new(34, 95, 95).unwrap());
        let b = generate_zc(&ZcSpec::new(25, 95, 95).unwrap());
        let c = cyclic_xcorr(&a, &b);
        let want = 95f64.sqrt();
        for v in &c {
            assert!((v.norm() - want).abs() < 1e-9, "|c| = {}", v.norm());
        }
    }

    #[test]
    fn preamble_layout_and_boost() {
        let spec = table_spec();
        let p = build_preamble(&spec, 32, 0.0).unwrap();
        assert_eq!(p.len(), 128);
        for v in &p.samples()[96..] {
            assert_eq!(*v, Complex64::ZERO);
        }
        for v in &p.samples()[..95] {
            assert!((v.norm() - 1.0).abs() < 1e-12);
        }

        let boosted = build_preamble(&spec, 32, 6.0).unwrap();
        let zc_power = dsp::avg_power(&boosted.samples()[..95]);
        assert!((zc_power - 10f64.powf(0.6)).abs() < 1e-12);
    }

    #[test]
    fn degenerate_guard_is_plain_sequence() {
        let spec = table_spec();
        let p = build_preamble(&spec, 0, 0.0).unwrap();
        assert_eq!(p.samples(), &generate_zc(&spec)[..]);
    }

    #[test]
    fn expected_peak_values() {
        let spec = table_spec();
        assert!((expected_peak(&spec, 0.0) - 95.0).abs() < 1e-12);
        let want_3db = 95.0 * 10f64.powf(0.3);
        assert!((expected_peak(&spec, 3.0) - want_3db).abs() < 1e-9);
    }

    #[test]
    fn expected_peak_matches_correlation_peak() {
        for boost in [0.0, 3.0, 6.0] {
            let spec = table_spec();
            let p = build_preamble(&spec, 32, boost).unwrap();
            let c = dsp::xcorr(p.samples(), p.samples()).unwrap();
            let peak = c.iter().map(|v| v.norm()).fold(0.0, f64::max);
            let want = expected_peak(&spec, boost);
            assert!((peak - want).abs() / want < 1e-10);
            assert!((p.expected_peak() - want).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_invalid_specs() {
        assert!(ZcSpec::new(34, 96, 96).is_err());
        assert!(ZcSpec::new(0, 95, 96).is_err());
        assert!(ZcSpec::new(95, 95, 96).is_err());
        assert!(ZcSpec::new(34, 95, 94).is_err());
    }
}
