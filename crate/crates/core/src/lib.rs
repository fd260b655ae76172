//! Sub-Nyquist sampling OFDM radar.
//!
//! The receiver samples a bandwidth-`B` OFDM echo at `B/L`. The `L` sub-bands
//! alias onto each other; because the transmitted symbols are known, the
//! folded spectrum can be unfolded back to the full band, at the cost of a
//! cross-band residual (symbol-mismatch noise) that an iterative canceller
//! removes.
//!
//! Processing chain:
//!
//! ```text
//! symbols ── modulate ── channel ── subsample ── DFT (Nc/L) ── unfold ── SMNC ── range/Doppler
//! ```
//!
//! All signal-processing code is generic over the scalar type (`f32` or
//! `f64`, see [`Real`]); the aliases below fix it to `f64`, which is what the
//! pipeline, the scenario files and the reports use.

pub mod analysis;
pub mod channel;
pub mod config;
pub mod detect;
pub mod error;
pub mod iq;
pub mod pipeline;
pub mod rng;
pub mod sampler;
pub mod scalar;
pub mod scenario;
pub mod smnc;
pub mod unfold;
pub mod waveform;

mod dft;

pub use config::RadarConfig;
pub use error::{Error, Result};
pub use scalar::Real;

/// Double-precision frequency-domain frame.
pub type Frame = channel::FreqFrame<f64>;
/// Double-precision symbol matrix.
pub type Symbols = waveform::SymbolMatrix<f64>;
/// Double-precision time-domain signal.
pub type Signal = waveform::TimeSignal<f64>;
/// Double-precision range/Doppler product.
pub type Product = detect::RangeDopplerProduct<f64>;
/// Double-precision target estimate.
pub type Estimate = detect::TargetEstimate<f64>;

/// Single-precision frame, e.g. for data ingested from 32-bit IQ captures.
pub type Frame32 = channel::FreqFrame<f32>;
/// Single-precision time-domain signal.
pub type Signal32 = waveform::TimeSignal<f32>;

/// Speed of light in vacuum (m/s).
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Linear power (mW) to dBm.
pub fn to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// dBm to linear power (mW).
pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}
