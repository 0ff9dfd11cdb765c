//! Waveform and frame parameters shared by transmitter and receiver.

use crate::zc::{self, PreambleBlock, ZcSpec};
use crate::{Error, Result};

/// All waveform-level parameters of one link configuration.
///
/// The frame layout is `[preamble | payload | zero guard]` where the
/// preamble is `[boosted ZC (n_p samples) | zeros (n_zp samples)]` and the
/// payload is the interleaved block of `n_s` windowed OFDM symbols,
/// `n_b = n_s * n * (1 + beta)` samples long.
#[derive(Clone, Debug, PartialEq)]
pub struct SystemConfig {
    /// Subcarriers per OFDM symbol.
    pub n: usize,
    /// OFDM symbols packed per block.
    pub n_s: usize,
    /// SRRC window roll-off, in `[0, 1]`.
    pub beta: f64,
    /// Zadoff-Chu sequence length (odd).
    pub n_zc: usize,
    /// Zadoff-Chu root index.
    pub zc_root: usize,
    /// Preamble sequence length after zero-padding the ZC.
    pub n_p: usize,
    /// Zero-guard length, appended to both preamble and payload.
    pub n_zp: usize,
    /// ZC power boost over the unit data power, in dB.
    pub boost_db: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        SystemConfig {
            n: 64,
            n_s: 42,
            beta: 0.5,
            n_zc: 95,
            zc_root: 34,
            n_p: 96,
            n_zp: 32,
            boost_db: 0.0,
        }
    }
}

fn as_exact_usize(x: f64, name: &'static str) -> Result<usize> {
    let r = x.round();
    if (x - r).abs() > 1e-9 || r < 0.0 {
        return Err(Error::invalid(name, format!("{x} is not a whole sample count")));
    }
    Ok(r as usize)
}

impl SystemConfig {
    /// Check all structural invariants. The SRRC breakpoints
    /// `n*(1-beta)/2` and `n*(1+beta)/2` must fall on integer sample
    /// indices, otherwise the window cannot be sampled consistently.
    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.n_s == 0 {
            return Err(Error::invalid("n/n_s", "must be positive"));
        }
        if !(0.0..=1.0).contains(&self.beta) {
            return Err(Error::invalid("beta", format!("{} not in [0, 1]", self.beta)));
        }
        as_exact_usize(self.n as f64 * (1.0 - self.beta) / 2.0, "beta")?;
        as_exact_usize(self.n as f64 * (1.0 + self.beta) / 2.0, "beta")?;
        self.zc_spec()?;
        Ok(())
    }

    pub fn zc_spec(&self) -> Result<ZcSpec> {
        ZcSpec::new(self.zc_root, self.n_zc, self.n_p)
    }

    pub fn preamble(&self) -> Result<PreambleBlock> {
        zc::build_preamble(&self.zc_spec()?, self.n_zp, self.boost_db)
    }

    /// Samples per windowed OFDM symbol, `n * (1 + beta)`.
    pub fn window_len(&self) -> usize {
        (self.n as f64 * (1.0 + self.beta)).round() as usize
    }

    /// Payload block length `n_b = n_s * n * (1 + beta)`.
    pub fn block_len(&self) -> usize {
        self.n_s * self.window_len()
    }

    /// Preamble region length `n_p + n_zp`.
    pub fn preamble_len(&self) -> usize {
        self.n_p + self.n_zp
    }

    /// Total frame length: preamble, payload, trailing zero guard.
    pub fn frame_len(&self) -> usize {
        self.preamble_len() + self.block_len() + self.n_zp
    }

    /// QPSK symbols carried per block.
    pub fn symbols_per_block(&self) -> usize {
        self.n_s * self.n
    }

    /// Channel bits carried per block (2 per QPSK symbol).
    pub fn bits_per_block(&self) -> usize {
        2 * self.symbols_per_block()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_matches_reference_dimensions() {
        let cfg = SystemConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.window_len(), 96);
        assert_eq!(cfg.block_len(), 4032);
        assert_eq!(cfg.preamble_len(), 128);
        assert_eq!(cfg.frame_len(), 4192);
        assert_eq!(cfg.bits_per_block(), 5376);
    }

    #[test]
    fn rejects_non_integer_breakpoints() {
        let cfg = SystemConfig {
            beta: 0.3,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn rejects_bad_beta() {
        let cfg = SystemConfig {
            beta: 1.5,
            ..SystemConfig::default()
        };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn alternate_geometry_validates() {
        let cfg = SystemConfig {
            n: 32,
            n_s: 8,
            beta: 0.25,
            ..SystemConfig::default()
        };
        cfg.validate().unwrap();
        assert_eq!(cfg.window_len(), 40);
        assert_eq!(cfg.block_len(), 320);
    }
}
