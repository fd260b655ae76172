//! OFDM symbol generation and cyclic-prefix modulation.
//!
//! DFT convention: forward transforms are unnormalized and synthesis scales
//! the inverse by `1/Nc`, so `demodulate(modulate(C)) == C`.

use std::fmt;
use std::str::FromStr;

use ndarray::{s, Array2, ArrayView2};
use num_complex::Complex;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::config::RadarConfig;
use crate::dft::Dft;
use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    #[default]
    Qpsk,
    Bpsk,
    /// Unit average power. Unfolding divides by the symbols, so the noise is
    /// no longer scaled uniformly across bins.
    Qam16,
}

impl Constellation {
    fn points(self) -> Vec<Complex<f64>> {
        match self {
            Constellation::Bpsk => vec![Complex::new(1.0, 0.0), Complex::new(-1.0, 0.0)],
            Constellation::Qpsk => {
                let a = std::f64::consts::FRAC_1_SQRT_2;
                vec![
                    Complex::new(a, a),
                    Complex::new(-a, a),
                    Complex::new(-a, -a),
                    Complex::new(a, -a),
                ]
            }
            Constellation::Qam16 => {
                let norm = 10f64.sqrt();
                let levels = [-3.0, -1.0, 1.0, 3.0];
                levels
                    .iter()
                    .flat_map(|&i| levels.iter().map(move |&q| Complex::new(i / norm, q / norm)))
                    .collect()
            }
        }
    }

    pub fn is_unit_modulus(self) -> bool {
        !matches!(self, Constellation::Qam16)
    }
}

impl fmt::Display for Constellation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Constellation::Qpsk => "qpsk",
            Constellation::Bpsk => "bpsk",
            Constellation::Qam16 => "qam16",
        })
    }
}

impl FromStr for Constellation {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "qpsk" => Ok(Constellation::Qpsk),
            "bpsk" => Ok(Constellation::Bpsk),
            "qam16" => Ok(Constellation::Qam16),
            other => Err(Error::Config(format!("unsupported constellation: {other}"))),
        }
    }
}

/// Transmitted symbols, `Nc x Ns` (subcarrier by symbol).
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolMatrix<T: Real> {
    entries: Array2<Complex<T>>,
    constellation: Constellation,
}

impl<T: Real> SymbolMatrix<T> {
    pub fn from_entries(entries: Array2<Complex<T>>, constellation: Constellation) -> Self {
        Self {
            entries,
            constellation,
        }
    }

    pub fn entries(&self) -> &Array2<Complex<T>> {
        &self.entries
    }

    pub fn constellation(&self) -> Constellation {
        self.constellation
    }

    pub fn num_subcarriers(&self) -> usize {
        self.entries.nrows()
    }

    pub fn num_symbols(&self) -> usize {
        self.entries.ncols()
    }

    /// Row block `i` (0-based) of `l` equal blocks: rows `i*Nc/l .. (i+1)*Nc/l`.
    pub fn block(&self, i: usize, l: usize) -> ArrayView2<'_, Complex<T>> {
        let m = self.num_subcarriers() / l;
        self.entries.slice(s![i * m..(i + 1) * m, ..])
    }
}

/// I.i.d. uniformly drawn constellation points, reproducible from `config.rng_seed`.
pub fn generate_symbols<T: Real>(
    config: &RadarConfig,
    constellation: Constellation,
) -> Result<SymbolMatrix<T>> {
    config.validate()?;
    let points = constellation.points();
    let mut rng = rng::stream(config.rng_seed, Stream::Symbols);
    let (nc, ns) = (config.num_subcarriers, config.num_symbols);
    let mut entries = Array2::from_elem((nc, ns), Complex::new(T::zero(), T::zero()));
    // symbol-major draw order
    for q in 0..ns {
        for n in 0..nc {
            let p = points[rng.random_range(0..points.len())];
            entries[[n, q]] = Complex::new(T::of(p.re), T::of(p.im));
        }
    }
    Ok(SymbolMatrix::from_entries(entries, constellation))
}

/// Complex baseband samples at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct TimeSignal<T: Real> {
    pub samples: Vec<Complex<T>>,
    pub sample_rate_hz: f64,
    /// Set when some echo arrives later than the cyclic prefix absorbs.
    pub isi_warning: bool,
}

impl<T: Real> TimeSignal<T> {
    pub fn new(samples: Vec<Complex<T>>, sample_rate_hz: f64) -> Self {
        Self {
            samples,
            sample_rate_hz,
            isi_warning: false,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Inverse DFT of each symbol column (scaled `1/Nc`) with the cyclic prefix
/// prepended. Output runs at rate `B` and holds `Ns*(Nc+Ncp)` samples.
pub fn modulate<T: Real>(symbols: &SymbolMatrix<T>, config: &RadarConfig) -> Result<TimeSignal<T>> {
    let nc = config.num_subcarriers;
    let ncp = config.cp_samples()?;
    if symbols.num_subcarriers() != nc {
        return Err(Error::Shape {
            what: "symbol rows vs subcarriers",
            expected: nc,
            actual: symbols.num_subcarriers(),
        });
    }
    Ok(TimeSignal::new(
        synthesize(symbols.entries(), ncp),
        config.bandwidth_hz,
    ))
}

/// Per-column `1/Nc`-scaled inverse DFT with a cyclic prefix of `ncp` samples.
pub(crate) fn synthesize<T: Real>(cols: &Array2<Complex<T>>, ncp: usize) -> Vec<Complex<T>> {
    let nc = cols.nrows();
    let dft = Dft::new(nc);
    let scale = T::one() / T::of(nc as f64);
    let mut out = Vec::with_capacity(cols.ncols() * (nc + ncp));
    let mut buf = vec![Complex::new(T::zero(), T::zero()); nc];
    for col in cols.columns() {
        for (b, v) in buf.iter_mut().zip(col.iter()) {
            *b = *v;
        }
        dft.inverse(&mut buf);
        buf.iter_mut().for_each(|v| *v = *v * scale);
        out.extend_from_slice(&buf[nc - ncp..]);
        out.extend_from_slice(&buf);
    }
    out
}

/// Strips the cyclic prefix of every symbol and takes a forward DFT of
/// `fft_len` points, multiplying by `scale`.
pub(crate) fn analyze<T: Real>(
    samples: &[Complex<T>],
    fft_len: usize,
    cp_len: usize,
    num_symbols: usize,
    scale: T,
) -> Result<Array2<Complex<T>>> {
    let per_symbol = fft_len + cp_len;
    let expected = per_symbol * num_symbols;
    if samples.len() != expected {
        return Err(Error::Shape {
            what: "time samples per frame",
            expected,
            actual: samples.len(),
        });
    }
    let dft = Dft::new(fft_len);
    let mut out = Array2::from_elem((fft_len, num_symbols), Complex::new(T::zero(), T::zero()));
    let mut buf = vec![Complex::new(T::zero(), T::zero()); fft_len];
    for q in 0..num_symbols {
        let start = q * per_symbol + cp_len;
        buf.copy_from_slice(&samples[start..start + fft_len]);
        dft.forward(&mut buf);
        for (n, v) in buf.iter().enumerate() {
            out[[n, q]] = *v * scale;
        }
    }
    Ok(out)
}

/// Nyquist-rate receiver front end: CP removal and `Nc`-point DFT per symbol.
pub fn demodulate<T: Real>(signal: &TimeSignal<T>, config: &RadarConfig) -> Result<Array2<Complex<T>>> {
    analyze(
        &signal.samples,
        config.num_subcarriers,
        config.cp_samples()?,
        config.num_symbols,
        T::one(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn small(nc: usize, ns: usize, seed: u64) -> RadarConfig {
        RadarConfig {
            num_subcarriers: nc,
            num_symbols: ns,
            bandwidth_hz: nc as f64 * 1e6,
            cp_duration_s: (nc / 4) as f64 * 1e-6 / nc as f64,
            carrier_freq_hz: 77e9,
            sub_sampling_ratio: 1,
            noise_power_mw: 0.0,
            rng_seed: seed,
        }
    }

    #[test]
    fn qpsk_full_frame_is_unit_modulus() {
        let cfg = RadarConfig::automotive_1ghz(1).with_seed(7);
        let cfg = RadarConfig { num_symbols: 10, ..cfg };
        let c = generate_symbols::<f64>(&cfg, Constellation::Qpsk).unwrap();
        assert_eq!(c.entries().dim(), (2048, 10));
        let a = std::f64::consts::FRAC_1_SQRT_2;
        for v in c.entries() {
            assert!((v.norm() - 1.0).abs() < 1e-15);
            assert!((v.re.abs() - a).abs() < 1e-15 && (v.im.abs() - a).abs() < 1e-15);
        }
    }

    #[test]
    fn bpsk_smallest_frame() {
        let c = generate_symbols::<f64>(&small(4, 1, 0), Constellation::Bpsk).unwrap();
        assert_eq!(c.entries().dim(), (4, 1));
        for v in c.entries() {
            assert!(v.im == 0.0 && (v.re == 1.0 || v.re == -1.0));
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = small(8, 2, 3);
        let a = generate_symbols::<f64>(&cfg, Constellation::Qpsk).unwrap();
        let b = generate_symbols::<f64>(&cfg, Constellation::Qpsk).unwrap();
        assert_eq!(a, b);
        let other = generate_symbols::<f64>(&small(8, 2, 4), Constellation::Qpsk).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn qam16_has_unit_average_power() {
        let cfg = RadarConfig {
            num_symbols: 64,
            ..RadarConfig::automotive_1ghz(1)
        };
        let c = generate_symbols::<f64>(&cfg, Constellation::Qam16).unwrap();
        let p = c.entries().iter().map(|v| v.norm_sqr()).sum::<f64>() / c.entries().len() as f64;
        assert!((p - 1.0).abs() < 0.02, "{p}");
    }

    #[test]
    fn unknown_constellation_is_named() {
        let err = "qam64".parse::<Constellation>().unwrap_err().to_string();
        assert!(err.contains("qam64"));
    }

    #[test]
    fn cp_length_for_automotive_frame() {
        let cfg = RadarConfig::automotive_1ghz(1);
        let c = generate_symbols::<f64>(&cfg, Constellation::Qpsk).unwrap();
        let tx = modulate(&c, &cfg).unwrap();
        assert_eq!(tx.len(), 2048 + 512);
        assert_eq!(&tx.samples[..512], &tx.samples[2048..]);
    }

    #[test]
    fn single_tone_column_gives_cp_extended_exponential() {
        let cfg = small(16, 1, 0);
        let mut e = Array2::from_elem((16, 1), Complex::new(0.0, 0.0));
        e[[3, 0]] = Complex::new(1.0, 0.0);
        let c = SymbolMatrix::from_entries(e, Constellation::Qpsk);
        let tx = modulate(&c, &cfg).unwrap();
        let ncp = cfg.cp_samples().unwrap();
        for (m, v) in tx.samples.iter().enumerate() {
            let t = m as f64 - ncp as f64;
            let ph = 2.0 * std::f64::consts::PI * 3.0 * t / 16.0;
            let want = Complex::new(ph.cos(), ph.sin()) / 16.0;
            assert!((v - want).norm() < 1e-15);
        }
    }

    #[test]
    fn blocks_tile_matrix() {
        let c = generate_symbols::<f64>(&small(16, 3, 1), Constellation::Qpsk).unwrap();
        let l = 4;
        let stacked = ndarray::concatenate(
            ndarray::Axis(0),
            &(0..l).map(|i| c.block(i, l)).collect::<Vec<_>>(),
        )
        .unwrap();
        assert_eq!(&stacked, c.entries());
    }

    #[test]
    fn parseval_per_symbol() {
        let cfg = small(64, 3, 9);
        let c = generate_symbols::<f64>(&cfg, Constellation::Qpsk).unwrap();
        let tx = modulate(&c, &cfg).unwrap();
        let ncp = cfg.cp_samples().unwrap();
        for q in 0..3 {
            let body = &tx.samples[q * (64 + ncp) + ncp..(q + 1) * (64 + ncp)];
            let e_t: f64 = body.iter().map(|v| v.norm_sqr()).sum();
            let e_f: f64 = c.entries().column(q).iter().map(|v| v.norm_sqr()).sum();
            // 1/Nc synthesis: sum |x|^2 = sum |C|^2 / Nc
            assert!((e_t * 64.0 - e_f).abs() < 1e-12 * e_f);
        }
    }

    #[test]
    fn single_precision_round_trip() {
        let cfg = small(32, 2, 5);
        let c = generate_symbols::<f32>(&cfg, Constellation::Qpsk).unwrap();
        let back = demodulate(&modulate(&c, &cfg).unwrap(), &cfg).unwrap();
        let err: f32 = (&back - c.entries()).iter().map(|v| v.norm_sqr()).sum::<f32>().sqrt();
        assert!(err < 1e-5);
    }

    proptest! {
        #[test]
        fn round_trip_reproduces_symbols(seed in any::<u64>(), log_nc in 2usize..9, ns in 1usize..4) {
            let cfg = small(1 << log_nc, ns, seed);
            let c = generate_symbols::<f64>(&cfg, Constellation::Qpsk).unwrap();
            let back = demodulate(&modulate(&c, &cfg).unwrap(), &cfg).unwrap();
            let err: f64 = (&back - c.entries()).iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            let norm: f64 = c.entries().iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
            prop_assert!(err <= 1e-12 * norm);
        }
    }
}
