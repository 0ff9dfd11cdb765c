//! Baseband simulation library for TIBWB-OFDM links.
//!
//! A TIBWB-OFDM block packs `N_s` SRRC-windowed OFDM symbols into a single
//! transmission block and sample-interleaves them, so every OFDM symbol is
//! spread across the whole block spectrum. Each block is prefixed with a
//! boosted Zadoff-Chu preamble that the receiver uses both to locate the
//! frame in the sample stream and to acquire the channel frequency response.
//!
//! The crate is organised along the transmit/receive chain:
//!
//! - [`dsp`]: DFTs of arbitrary length, linear cross-correlation, complex
//!   AWGN and reproducible per-trial RNG streams.
//! - [`zc`]: Zadoff-Chu sequence and preamble construction.
//! - [`config`]: waveform parameters shared by transmitter and receiver.
//! - [`tx`]: QPSK mapping, SRRC windowing, block packing and frame assembly.
//! - [`channel`]: Rayleigh multipath simulation and exact CFR computation.
//! - [`sync`]: correlation-based frame detection and scoring.
//! - [`chanest`]: least-squares CFR estimators (preamble-based,
//!   decision-directed, and their variance-weighted fusion).
//! - [`equalizer`]: ZF/MMSE linear FDE, the iterative block DFE, and block
//!   unformatting back to constellation symbols.
//! - [`fec`]: LDPC(128,64) coding and the word-level bit interleaver.
//!
//! All operations are pure functions of their inputs; randomness enters only
//! through explicit [`dsp::RngStream`] values, so independent trials can run
//! on any number of threads with bit-identical results.

pub mod chanest;
pub mod channel;
pub mod config;
pub mod dsp;
pub mod equalizer;
pub mod fec;
pub mod sync;
pub mod tx;
pub mod zc;

mod error;

pub use error::{Error, Result};
pub use num_complex::Complex64;
