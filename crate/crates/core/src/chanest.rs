//! Block-resolution CFR estimation from the received frame.
//!
//! Three estimators are provided:
//!
//! - [`preamble_estimate`]: least squares on the received preamble window,
//!   upsampled to block resolution through a pseudo impulse response. Exact
//!   for any noiseless channel whose response fits the preamble zero guard.
//! - [`decision_estimate`]: least squares against the previous iteration's
//!   hard decisions, usable once a feedback equalizer is running.
//! - [`fuse_estimates`]: inverse-variance weighted mean of the two.

use num_complex::Complex64;

use crate::dsp;
use crate::zc::PreambleBlock;
use crate::{Error, Result};

/// Bins with reference magnitude below this are considered unusable for
/// least-squares division and get interpolated from their neighbours.
const MIN_REF_MAGNITUDE: f64 = 1e-12;

/// Where a CFR estimate came from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CfrSource {
    /// Oracle CFR from the channel realization itself.
    Perfect,
    /// Least squares on the received preamble.
    Preamble,
    /// Least squares against decided data.
    DecisionDirected,
    /// Inverse-variance fusion of preamble and data estimates.
    Fused,
}

/// A CFR estimate at block resolution, optionally annotated with its
/// measured mean-square error against the true channel.
#[derive(Clone, Debug)]
pub struct CfrEstimate {
    pub values: Vec<Complex64>,
    pub source: CfrSource,
    pub mse: Option<f64>,
}

impl CfrEstimate {
    pub fn perfect(values: Vec<Complex64>) -> Self {
        CfrEstimate {
            values,
            source: CfrSource::Perfect,
            mse: Some(0.0),
        }
    }

    /// Attach the oracle MSE measured against the true CFR.
    pub fn with_mse_against(mut self, truth: &[Complex64]) -> Result<Self> {
        self.mse = Some(cfr_mse(&self.values, truth)?);
        Ok(self)
    }
}

/// Per-bin least squares `H_k = Y_k / X_k` on spectra of equal length.
/// Bins where `|X_k|` is too small for a meaningful division are filled by
/// linear interpolation between the nearest usable neighbours (circularly).
pub fn ls_estimate(rx: &[Complex64], tx: &[Complex64]) -> Result<Vec<Complex64>> {
    if rx.len() != tx.len() {
        return Err(Error::LengthMismatch {
            what: "ls spectra",
            expected: tx.len(),
            actual: rx.len(),
        });
    }
    if rx.is_empty() {
        return Err(Error::EmptyInput("ls_estimate"));
    }
    let mut est = Vec::with_capacity(rx.len());
    let mut flagged = Vec::new();
    for (k, (y, x)) in rx.iter().zip(tx).enumerate() {
        if x.norm() < MIN_REF_MAGNITUDE {
            flagged.push(k);
            est.push(Complex64::ZERO);
        } else {
            est.push(y / x);
        }
    }
    if flagged.len() == est.len() {
        return Err(Error::invalid("tx spectrum", "no usable bins"));
    }
    interpolate_flagged(&mut est, &flagged);
    Ok(est)
}

/// Fill flagged bins by linear interpolation between the nearest valid
/// neighbours on either side, wrapping around the spectrum edges.
fn interpolate_flagged(est: &mut [Complex64], flagged: &[usize]) {
    if flagged.is_empty() {
        return;
    }
    let n = est.len();
    let bad: Vec<bool> = {
        let mut b = vec![false; n];
        for &k in flagged {
            b[k] = true;
        }
        b
    };
    for &k in flagged {
        let mut prev = k;
        let mut dp = 0usize;
        loop {
            prev = (prev + n - 1) % n;
            dp += 1;
            if !bad[prev] {
                break;
            }
        }
        let mut next = k;
        let mut dn = 0usize;
        loop {
            next = (next + 1) % n;
            dn += 1;
            if !bad[next] {
                break;
            }
        }
        let w = dp as f64 / (dp + dn) as f64;
        est[k] = est[prev] * (1.0 - w) + est[next] * w;
    }
}

/// CFR estimate from the received preamble window.
///
/// `rx_window` must hold the `n_p + n_zp` received samples starting at the
/// detected frame head. The window is divided bin-wise by the transmitted
/// preamble spectrum, converted to a pseudo impulse response, zero-padded
/// and retransformed at length `n_b`. Because the transmitted preamble ends
/// in a zero guard longer than the channel response and is preceded by the
/// previous frame's guard, the window obeys an exact circular model and the
/// pseudo response equals the true taps in the noiseless case.
pub fn preamble_estimate(
    rx_window: &[Complex64],
    preamble: &PreambleBlock,
    n_b: usize,
) -> Result<CfrEstimate> {
    if rx_window.len() != preamble.len() {
        return Err(Error::LengthMismatch {
            what: "preamble window",
            expected: preamble.len(),
            actual: rx_window.len(),
        });
    }
    if n_b < preamble.len() {
        return Err(Error::invalid(
            "n_b",
            format!("{n_b} shorter than the preamble window {}", preamble.len()),
        ));
    }
    let rx_f = dsp::dft(rx_window)?;
    let tx_f = dsp::dft(preamble.samples())?;
    let h_low = ls_estimate(&rx_f, &tx_f)?;
    let mut pseudo_cir = dsp::idft(&h_low)?;
    pseudo_cir.resize(n_b, Complex64::ZERO);
    Ok(CfrEstimate {
        values: dsp::dft(&pseudo_cir)?,
        source: CfrSource::Preamble,
        mse: None,
    })
}

/// Decision-directed estimate `H_k = Y_k / X_hat_k` from the previous
/// iteration's frequency-domain hard decisions.
pub fn decision_estimate(y: &[Complex64], decided: &[Complex64]) -> Result<CfrEstimate> {
    Ok(CfrEstimate {
        values: ls_estimate(y, decided)?,
        source: CfrSource::DecisionDirected,
        mse: None,
    })
}

/// Inverse-variance weighted fusion of a preamble-based and a data-based
/// estimate: `H = (H_d/var_d + H_z/var_z) / (1/var_d + 1/var_z)` per bin.
/// Variances must be positive; `f64::INFINITY` disables a branch.
pub fn fuse_estimates(
    zc_est: &CfrEstimate,
    data_est: &CfrEstimate,
    var_zc: f64,
    var_data: f64,
) -> Result<CfrEstimate> {
    if zc_est.values.len() != data_est.values.len() {
        return Err(Error::LengthMismatch {
            what: "fused estimates",
            expected: zc_est.values.len(),
            actual: data_est.values.len(),
        });
    }
    for (name, v) in [("var_zc", var_zc), ("var_data", var_data)] {
        if !(v > 0.0) {
            return Err(Error::invalid(name, format!("{v} must be > 0")));
        }
    }
    let wz = var_zc.recip();
    let wd = var_data.recip();
    let denom = wz + wd;
    if denom == 0.0 {
        return Err(Error::invalid("variances", "both branches disabled"));
    }
    let values = zc_est
        .values
        .iter()
        .zip(&data_est.values)
        .map(|(z, d)| (z * wz + d * wd) / denom)
        .collect();
    Ok(CfrEstimate {
        values,
        source: CfrSource::Fused,
        mse: None,
    })
}

/// Mean over bins of `|H_k - H_hat_k|^2`.
pub fn cfr_mse(est: &[Complex64], truth: &[Complex64]) -> Result<f64> {
    if est.len() != truth.len() {
        return Err(Error::LengthMismatch {
            what: "cfr mse",
            expected: truth.len(),
            actual: est.len(),
        });
    }
    if est.is_empty() {
        return Err(Error::EmptyInput("cfr_mse"));
    }
    Ok(est
        .iter()
        .zip(truth)
        .map(|(e, t)| (e - t).norm_sqr())
        .sum::<f64>()
        / est.len() as f64)
}
