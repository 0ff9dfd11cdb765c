//! Frame detection in a continuous sample stream.
//!
//! The stream is cross-correlated against the known boosted ZC reference
//! and the threshold is `delta_decision` times the preamble
//! autocorrelation peak, so it rides up and down with the preamble boost.
//! Each frame-length analysis interval is classified by the sliding-window
//! rule: a frame is declared when the correlation magnitude within the
//! tracking window at the interval head reaches the threshold, and the
//! frame start is taken from the strongest peak there (multipath echoes of
//! one preamble land within a few samples and collapse onto the strongest
//! arrival). Threshold crossings elsewhere in an interval never create a
//! detection: the reference also correlates against random payload data,
//! which puts a self-noise floor of roughly `sqrt(n_zc)` under the whole
//! correlation, and out-of-place peaks are precisely the signature of a
//! noise block.

use num_complex::Complex64;

use crate::config::SystemConfig;
use crate::dsp;
use crate::zc::PreambleBlock;
use crate::{Error, Result};

/// Detector settings.
#[derive(Clone, Copy, Debug)]
pub struct SyncConfig {
    /// Detection threshold as a fraction of the preamble self-peak,
    /// in `(0, 1]`.
    pub delta_decision: f64,
    /// Peak-tracking window length; defaults to twice the correlation
    /// reference length.
    pub window_len: usize,
    /// Length of one analysis interval (one frame slot) in samples.
    pub interval_len: usize,
}

impl SyncConfig {
    pub fn new(delta_decision: f64, window_len: usize, interval_len: usize) -> Result<Self> {
        if !(delta_decision > 0.0 && delta_decision <= 1.0) {
            return Err(Error::invalid(
                "delta_decision",
                format!("{delta_decision} not in (0, 1]"),
            ));
        }
        if window_len == 0 || interval_len == 0 {
            return Err(Error::invalid("sync windows", "must be positive"));
        }
        Ok(SyncConfig {
            delta_decision,
            window_len,
            interval_len,
        })
    }

    /// Defaults for a system configuration: tracking window `2 * n_zc`,
    /// analysis interval of one frame.
    pub fn for_system(cfg: &SystemConfig, delta_decision: f64) -> Result<Self> {
        SyncConfig::new(delta_decision, 2 * cfg.n_zc, cfg.frame_len())
    }
}

/// Binary hypothesis per analysis interval.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Hypothesis {
    /// Only noise observed.
    Absent,
    /// A frame was detected.
    Detected,
}

/// Verdict for one analysis interval.
#[derive(Clone, Copy, Debug)]
pub struct IntervalVerdict {
    pub hypothesis: Hypothesis,
    /// Estimated frame-start sample, present for detected intervals.
    pub frame_start: Option<usize>,
    /// Correlation magnitude of the accepted peak.
    pub peak_value: Option<f64>,
}

/// Detection outcome over a whole stream.
#[derive(Clone, Debug)]
pub struct DetectionReport {
    /// One verdict per analysis interval.
    pub verdicts: Vec<IntervalVerdict>,
    /// All peaks that survived threshold and window tracking, as
    /// `(frame_start, magnitude)` in stream order.
    pub survivors: Vec<(usize, f64)>,
    /// Ground-truth labels (`true` = frame present), when known.
    pub truth: Option<Vec<bool>>,
}

impl DetectionReport {
    pub fn with_truth(mut self, truth: Vec<bool>) -> Result<Self> {
        if truth.len() != self.verdicts.len() {
            return Err(Error::LengthMismatch {
                what: "truth labels",
                expected: self.verdicts.len(),
                actual: truth.len(),
            });
        }
        self.truth = Some(truth);
        Ok(self)
    }

    /// Frame starts of all detected intervals, strictly increasing.
    pub fn detected_starts(&self) -> Vec<usize> {
        self.verdicts
            .iter()
            .filter_map(|v| v.frame_start)
            .collect()
    }
}

/// Scan a stream for frame beginnings.
///
/// The correlation reference is the boosted ZC region of the preamble; the
/// threshold is `delta_decision` times its autocorrelation peak, so it
/// rides up and down with the configured preamble boost.
pub fn detect_frames(
    stream: &[Complex64],
    preamble: &PreambleBlock,
    cfg: &SyncConfig,
) -> Result<DetectionReport> {
    let reference = preamble.correlation_ref();
    if stream.is_empty() {
        return Err(Error::EmptyInput("stream"));
    }
    if stream.len() <= preamble.len() {
        return Err(Error::invalid(
            "stream",
            format!(
                "length {} not longer than the preamble {}",
                stream.len(),
                preamble.len()
            ),
        ));
    }

    let autocorr = dsp::xcorr(reference, reference)?;
    let p_zc = autocorr.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let threshold = cfg.delta_decision * p_zc;

    let corr = dsp::xcorr(stream, reference)?;

    // threshold crossings collapsed to one peak per tracking window
    let mut survivors: Vec<(usize, f64)> = Vec::new();
    let mut current: Option<(usize, f64)> = None;
    for (i, c) in corr.iter().enumerate() {
        let m = c.norm();
        if m < threshold {
            continue;
        }
        match current {
            Some((pi, pv)) if i - pi <= cfg.window_len => {
                if m > pv {
                    current = Some((i, m));
                }
            }
            Some(done) => {
                survivors.push(done);
                current = Some((i, m));
            }
            None => current = Some((i, m)),
        }
    }
    if let Some(done) = current {
        survivors.push(done);
    }

    // correlation index -> frame start: the reference peak sits at its last
    // sample, so the frame begins reference-length - 1 samples earlier
    let offset = reference.len() - 1;
    let survivors: Vec<(usize, f64)> = survivors
        .into_iter()
        .map(|(i, v)| (i.saturating_sub(offset), v))
        .collect();

    let n_intervals = (stream.len() / cfg.interval_len).max(1);
    let mut per_interval: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n_intervals];
    for &(start, v) in &survivors {
        let idx = (start / cfg.interval_len).min(n_intervals - 1);
        per_interval[idx].push((start, v));
    }

    let verdicts = per_interval
        .into_iter()
        .map(|peaks| match peaks.as_slice() {
            // a single clean peak marks the frame beginning; several
            // scattered peaks make the interval look like noise and the
            // block is rejected
            [(start, value)] => IntervalVerdict {
                hypothesis: Hypothesis::Detected,
                frame_start: Some(*start),
                peak_value: Some(*value),
            },
            _ => IntervalVerdict {
                hypothesis: Hypothesis::Absent,
                frame_start: None,
                peak_value: None,
            },
        })
        .collect();

    Ok(DetectionReport {
        verdicts,
        survivors,
        truth: None,
    })
}

/// Aggregate detection probabilities over a labelled report.
#[derive(Clone, Copy, Debug)]
pub struct DetectionScore {
    /// Probability of a correct classification, each conditional weighted
    /// by its empirical prior: `P(detect|frame) P(frame) +
    /// P(reject|noise) P(noise)`.
    pub p_d: f64,
    /// Probability of declaring a frame when only noise was sent,
    /// `P(detect|noise)`.
    pub p_m: f64,
    /// Probability of declaring noise when a frame was sent,
    /// `P(reject|frame)`.
    pub p_f: f64,
    pub frames_sent: usize,
    pub noise_sent: usize,
}

impl DetectionScore {
    /// Conventional hit rate `P(detect|frame)`, complement of `p_f`.
    pub fn hit_rate(&self) -> f64 {
        1.0 - self.p_f
    }

    /// Conventional correct-rejection rate `P(reject|noise)`, complement
    /// of `p_m`.
    pub fn correct_rejection_rate(&self) -> f64 {
        1.0 - self.p_m
    }
}

/// Score a report against its ground-truth labels.
pub fn score(report: &DetectionReport) -> Result<DetectionScore> {
    let truth = report
        .truth
        .as_ref()
        .ok_or_else(|| Error::invalid("report", "missing ground-truth labels"))?;
    let mut frames_sent = 0usize;
    let mut noise_sent = 0usize;
    let mut hits = 0usize;
    let mut false_detects = 0usize;
    for (v, &is_frame) in report.verdicts.iter().zip(truth) {
        let detected = v.hypothesis == Hypothesis::Detected;
        if is_frame {
            frames_sent += 1;
            hits += usize::from(detected);
        } else {
            noise_sent += 1;
            false_detects += usize::from(detected);
        }
    }
    let total = frames_sent + noise_sent;
    if total == 0 {
        return Err(Error::EmptyInput("report"));
    }
    let correct_rejects = noise_sent - false_detects;
    Ok(DetectionScore {
        p_d: (hits + correct_rejects) as f64 / total as f64,
        p_m: if noise_sent == 0 {
            0.0
        } else {
            false_detects as f64 / noise_sent as f64
        },
        p_f: if frames_sent == 0 {
            0.0
        } else {
            (frames_sent - hits) as f64 / frames_sent as f64
        },
        frames_sent,
        noise_sent,
    })
}
