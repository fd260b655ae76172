//! Multi-target echo models.
//!
//! Two models produce the received frame:
//!
//! * [`apply_channel_freq`]: `S = C ⊙ (R A Vᵀ) + W` directly in the frequency
//!   domain, Doppler constant within a symbol.
//! * [`apply_channel_time`]: sample-exact delayed copies of the transmitted
//!   waveform with a per-sample Doppler phasor, so fast movers show
//!   inter-carrier interference.
//!
//! Phase indices are 0-based (`n = 0..Nc`, `q = 0..Ns`); against 1-based
//! indexing this is a constant phase per target, invisible in magnitudes.
//!
//! `|α|²` and `noise_power_mw` are both per-bin powers in mW. Both models draw
//! `W` from the same noise stream, so static scenes agree noise included.

use std::f64::consts::PI;

use ndarray::{Array2, Zip};
use num_complex::Complex;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::config::RadarConfig;
use crate::dft::Dft;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::scalar::{narrow, phasor, Real};
use crate::waveform::{analyze, synthesize, SymbolMatrix, TimeSignal};
use crate::SPEED_OF_LIGHT;

/// Point target: round-trip delay, Doppler (rad/s) and complex amplitude.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub delay_s: f64,
    pub doppler_rad_s: f64,
    pub amplitude: Complex<f64>,
}

impl Target {
    pub fn new(delay_s: f64, doppler_rad_s: f64, amplitude: Complex<f64>) -> Self {
        Self {
            delay_s,
            doppler_rad_s,
            amplitude,
        }
    }

    /// Static target sitting exactly on range bin `bin`.
    pub fn on_bin(bin: usize, amplitude: Complex<f64>, config: &RadarConfig) -> Self {
        Self::new(bin as f64 / config.bandwidth_hz, 0.0, amplitude)
    }

    pub fn from_range_velocity(
        range_m: f64,
        velocity_mps: f64,
        amplitude: Complex<f64>,
        config: &RadarConfig,
    ) -> Self {
        Self::new(
            2.0 * range_m / SPEED_OF_LIGHT,
            4.0 * PI * config.carrier_freq_hz * velocity_mps / SPEED_OF_LIGHT,
            amplitude,
        )
    }

    /// Doppler given as a fraction of the subcarrier spacing, `ω/(2πΔf)`.
    pub fn with_normalized_doppler(mut self, nu: f64, config: &RadarConfig) -> Self {
        self.doppler_rad_s = 2.0 * PI * config.subcarrier_spacing_hz() * nu;
        self
    }

    pub fn range_m(&self) -> f64 {
        self.delay_s * SPEED_OF_LIGHT / 2.0
    }

    pub fn velocity_mps(&self, config: &RadarConfig) -> f64 {
        self.doppler_rad_s * SPEED_OF_LIGHT / (4.0 * PI * config.carrier_freq_hz)
    }

    pub fn normalized_doppler(&self, config: &RadarConfig) -> f64 {
        self.doppler_rad_s / (2.0 * PI * config.subcarrier_spacing_hz())
    }

    pub fn power_mw(&self) -> f64 {
        self.amplitude.norm_sqr()
    }

    /// Delay in Nyquist-rate samples (fractional range bin).
    pub fn range_bin(&self, config: &RadarConfig) -> f64 {
        self.delay_s * config.bandwidth_hz
    }

    /// Nearest integer range bin, wrapped into `0..Nc`.
    pub fn nearest_bin(&self, config: &RadarConfig) -> usize {
        (self.range_bin(config).round() as usize) % config.num_subcarriers
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TargetSet {
    pub targets: Vec<Target>,
}

impl TargetSet {
    pub fn new(targets: Vec<Target>) -> Self {
        Self { targets }
    }

    pub fn len(&self) -> usize {
        self.targets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.targets.is_empty()
    }

    pub fn total_power_mw(&self) -> f64 {
        self.targets.iter().map(Target::power_mw).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Target> {
        self.targets.iter()
    }

    /// Delays must lie in `[0, 1/Δf)` and amplitudes must be finite and nonzero.
    pub fn validate(&self, config: &RadarConfig) -> Result<()> {
        let span = 1.0 / config.subcarrier_spacing_hz();
        for (index, t) in self.targets.iter().enumerate() {
            if !(t.delay_s >= 0.0 && t.delay_s < span) {
                return Err(Error::Target {
                    index,
                    reason: format!("delay {:e} s outside unambiguous span [0, {span:e})", t.delay_s),
                });
            }
            if !t.doppler_rad_s.is_finite() {
                return Err(Error::Target {
                    index,
                    reason: "Doppler is not finite".into(),
                });
            }
            let a = t.amplitude;
            if !(a.re.is_finite() && a.im.is_finite()) || a.norm_sqr() == 0.0 {
                return Err(Error::Target {
                    index,
                    reason: "amplitude must be finite and nonzero".into(),
                });
            }
        }
        Ok(())
    }
}

impl FromIterator<Target> for TargetSet {
    fn from_iter<I: IntoIterator<Item = Target>>(iter: I) -> Self {
        Self::new(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Band {
    FullBand,
    Folded { ratio: usize },
}

/// Frequency-domain frame, `rows x Ns`: full band (`Nc` rows) or folded (`Nc/L` rows).
#[derive(Debug, Clone, PartialEq)]
pub struct FreqFrame<T: Real> {
    pub entries: Array2<Complex<T>>,
    pub band: Band,
}

impl<T: Real> FreqFrame<T> {
    pub fn full(entries: Array2<Complex<T>>) -> Self {
        Self {
            entries,
            band: Band::FullBand,
        }
    }

    pub fn folded(entries: Array2<Complex<T>>, ratio: usize) -> Self {
        Self {
            entries,
            band: Band::Folded { ratio },
        }
    }

    pub fn zeros(rows: usize, cols: usize, band: Band) -> Self {
        Self {
            entries: Array2::from_elem((rows, cols), Complex::new(T::zero(), T::zero())),
            band,
        }
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn is_finite(&self) -> bool {
        self.entries.iter().all(|v| v.re.is_finite() && v.im.is_finite())
    }

    /// Frobenius norm of the difference relative to `other`'s norm.
    pub fn relative_error(&self, other: &Self) -> f64 {
        let num: f64 = Zip::from(&self.entries)
            .and(&other.entries)
            .fold(0.0, |acc, a, b| acc + (*a - *b).norm_sqr().as_f64());
        let den: f64 = other.entries.iter().map(|v| v.norm_sqr().as_f64()).sum();
        (num / den).sqrt()
    }

    pub fn total_power(&self) -> f64 {
        self.entries.iter().map(|v| v.norm_sqr().as_f64()).sum()
    }
}

/// Range steering vector `exp(-j2π n Δf τ)` and Doppler steering vector
/// `exp(+j q ω Ts)`.
pub fn steering_vectors<T: Real>(
    target: &Target,
    config: &RadarConfig,
) -> (Vec<Complex<T>>, Vec<Complex<T>>) {
    let df = config.subcarrier_spacing_hz();
    let ts = config.symbol_duration_s();
    let range = (0..config.num_subcarriers)
        .map(|n| phasor(-2.0 * PI * n as f64 * df * target.delay_s))
        .collect();
    let doppler = (0..config.num_symbols)
        .map(|q| phasor(q as f64 * target.doppler_rad_s * ts))
        .collect();
    (range, doppler)
}

/// Target information matrix `X = R A Vᵀ`.
pub fn target_matrix<T: Real>(targets: &TargetSet, config: &RadarConfig) -> Array2<Complex<T>> {
    let (nc, ns) = (config.num_subcarriers, config.num_symbols);
    let mut x = Array2::from_elem((nc, ns), Complex::new(T::zero(), T::zero()));
    for t in targets.iter() {
        let (r, v) = steering_vectors::<T>(t, config);
        let a: Complex<T> = narrow(t.amplitude);
        for q in 0..ns {
            let av = a * v[q];
            for n in 0..nc {
                x[[n, q]] = x[[n, q]] + r[n] * av;
            }
        }
    }
    x
}

/// I.i.d. `CN(0, σ²)` noise frame, `Nc x Ns`, from the config's noise stream.
pub fn noise_frame<T: Real>(config: &RadarConfig) -> Array2<Complex<T>> {
    let (nc, ns) = (config.num_subcarriers, config.num_symbols);
    let sd = (config.noise_power_mw / 2.0).sqrt();
    let mut rng = rng::stream(config.rng_seed, Stream::Noise);
    let mut w = Array2::from_elem((nc, ns), Complex::new(T::zero(), T::zero()));
    for q in 0..ns {
        for n in 0..nc {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            w[[n, q]] = Complex::new(T::of(re * sd), T::of(im * sd));
        }
    }
    w
}

/// `S = C ⊙ X + W` (full band).
pub fn apply_channel_freq<T: Real>(
    symbols: &SymbolMatrix<T>,
    targets: &TargetSet,
    config: &RadarConfig,
    add_noise: bool,
) -> Result<FreqFrame<T>> {
    check_symbols(symbols, config)?;
    targets.validate(config)?;
    let mut s = target_matrix::<T>(targets, config) * symbols.entries();
    if add_noise {
        s = s + noise_frame::<T>(config);
    }
    Ok(FreqFrame::full(s))
}

/// Delayed, Doppler-rotated, scaled copies of `tx` plus noise, at rate `B`.
///
/// Each echo is evaluated as the continuous-time OFDM waveform delayed by
/// `τ`: the active symbol changes at `q·Ts + τ` and within a symbol the
/// fractional delay is a phase ramp across subcarriers. Doppler multiplies
/// every sample by `exp(jωt)`. Delays beyond the cyclic prefix set
/// `isi_warning`.
pub fn apply_channel_time<T: Real>(
    tx: &TimeSignal<T>,
    targets: &TargetSet,
    config: &RadarConfig,
    add_noise: bool,
) -> Result<TimeSignal<T>> {
    targets.validate(config)?;
    let nc = config.num_subcarriers;
    let ns = config.num_symbols;
    let ncp = config.cp_samples()?;
    let per_symbol = nc + ncp;
    // recover the per-symbol spectra; exact for a modulate() output
    let spectra = analyze(&tx.samples, nc, ncp, ns, T::one())?;
    let dft = Dft::<T>::new(nc);
    let inv_nc = T::one() / T::of(nc as f64);
    let df = config.subcarrier_spacing_hz();
    let len = tx.samples.len();
    let mut rx = vec![Complex::new(T::zero(), T::zero()); len];
    let mut isi = false;

    for t in targets.iter() {
        if t.delay_s > config.cp_duration_s + 1e-15 {
            isi = true;
        }
        let ramp: Vec<Complex<T>> = (0..nc)
            .map(|n| phasor(-2.0 * PI * n as f64 * df * t.delay_s))
            .collect();
        let delayed: Vec<Vec<Complex<T>>> = spectra
            .columns()
            .into_iter()
            .map(|col| {
                let mut buf: Vec<Complex<T>> =
                    col.iter().zip(&ramp).map(|(c, r)| *c * *r).collect();
                dft.inverse(&mut buf);
                buf.iter_mut().for_each(|v| *v = *v * inv_nc);
                buf
            })
            .collect();
        let shift = t.range_bin(config);
        for (m, out) in rx.iter_mut().enumerate() {
            let src = m as f64 - shift;
            if src < 0.0 {
                continue;
            }
            let q = (src / per_symbol as f64).floor() as usize;
            if q >= ns {
                continue;
            }
            let local = m as i64 - (q * per_symbol + ncp) as i64;
            let idx = local.rem_euclid(nc as i64) as usize;
            let rot = t.amplitude * Complex::from_polar(1.0, t.doppler_rad_s * m as f64 / config.bandwidth_hz);
            *out = *out + delayed[q][idx] * narrow(rot);
        }
    }

    if add_noise {
        let w = noise_frame::<T>(config);
        for (out, n) in rx.iter_mut().zip(synthesize(&w, ncp)) {
            *out = *out + n;
        }
    }

    Ok(TimeSignal {
        samples: rx,
        sample_rate_hz: config.bandwidth_hz,
        isi_warning: isi,
    })
}

fn check_symbols<T: Real>(symbols: &SymbolMatrix<T>, config: &RadarConfig) -> Result<()> {
    if symbols.num_subcarriers() != config.num_subcarriers {
        return Err(Error::Shape {
            what: "symbol rows vs subcarriers",
            expected: config.num_subcarriers,
            actual: symbols.num_subcarriers(),
        });
    }
    if symbols.num_symbols() != config.num_symbols {
        return Err(Error::Shape {
            what: "symbol columns vs symbols per frame",
            expected: config.num_symbols,
            actual: symbols.num_symbols(),
        });
    }
    Ok(())
}
