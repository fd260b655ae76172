//! ADC model: uniform sub-Nyquist decimation and folded demodulation.
//!
//! No anti-alias filter is applied; the `L` sub-bands are meant to fold.
//! Decimation keeps samples `0, L, 2L, …` of every frame and requires `L` to
//! divide the cyclic prefix length, so each decimated symbol keeps an exact
//! `Nc/L`-periodic structure after its `Ncp/L` prefix samples are dropped.

use ndarray::{s, Array2};
use num_complex::Complex;

use crate::channel::{Band, FreqFrame};
use crate::config::RadarConfig;
use crate::error::{Error, Result};
use crate::scalar::Real;
use crate::waveform::{analyze, TimeSignal};

/// Keeps every `L`-th sample; the output rate is `B/L`.
pub fn subsample<T: Real>(rx: &TimeSignal<T>, config: &RadarConfig) -> Result<TimeSignal<T>> {
    config.validate()?;
    let l = config.sub_sampling_ratio;
    if !rx.len().is_multiple_of(l) {
        return Err(Error::Shape {
            what: "frame length must be a multiple of L",
            expected: (rx.len() / l + 1) * l,
            actual: rx.len(),
        });
    }
    Ok(TimeSignal {
        samples: rx.samples.iter().step_by(l).copied().collect(),
        sample_rate_hz: rx.sample_rate_hz / l as f64,
        isi_warning: rx.isi_warning,
    })
}

/// CP removal and `Nc/L`-point DFT of each decimated symbol, giving the
/// folded frame `Z = S_1 + … + S_L`.
///
/// The decimated sequence of a `1/Nc`-synthesized symbol transforms to
/// `Z/L`, so the output is scaled by `L`.
pub fn demodulate_folded<T: Real>(rx_sub: &TimeSignal<T>, config: &RadarConfig) -> Result<FreqFrame<T>> {
    config.validate()?;
    let l = config.sub_sampling_ratio;
    let ncp = config.cp_samples()?;
    let z = analyze(
        &rx_sub.samples,
        config.num_subcarriers / l,
        ncp / l,
        config.num_symbols,
        T::of(l as f64),
    )?;
    Ok(FreqFrame::folded(z, l))
}

/// Frequency-domain folding: sum of the `L` row blocks of a full-band frame.
pub fn fold_frame<T: Real>(s: &FreqFrame<T>, l: usize) -> Result<FreqFrame<T>> {
    if s.band != Band::FullBand {
        return Err(Error::Config("only a full-band frame can be folded".into()));
    }
    if l == 0 || !s.rows().is_multiple_of(l) {
        return Err(Error::Config(format!(
            "L must divide Nc (L={l}, Nc={})",
            s.rows()
        )));
    }
    let m = s.rows() / l;
    let mut z = Array2::from_elem((m, s.cols()), Complex::new(T::zero(), T::zero()));
    for k in 0..l {
        z = z + s.entries.slice(s![k * m..(k + 1) * m, ..]);
    }
    Ok(FreqFrame::folded(z, l))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{apply_channel_freq, apply_channel_time, Target, TargetSet};
    use crate::waveform::{generate_symbols, modulate, Constellation, SymbolMatrix};
    use std::f64::consts::PI;

    fn cfg(nc: usize, l: usize) -> RadarConfig {
        RadarConfig {
            num_subcarriers: nc,
            num_symbols: 2,
            bandwidth_hz: nc as f64 * 1e6,
            cp_duration_s: 0.25e-6,
            carrier_freq_hz: 77e9,
            sub_sampling_ratio: l,
            noise_power_mw: 0.0,
            rng_seed: 4,
        }
    }

    #[test]
    fn unit_ratio_is_identity() {
        let c = cfg(64, 1);
        let sym = generate_symbols::<f64>(&c, Constellation::Qpsk).unwrap();
        let tx = modulate(&sym, &c).unwrap();
        let sub = subsample(&tx, &c).unwrap();
        assert_eq!(sub, tx);
        let z = demodulate_folded(&sub, &c).unwrap();
        assert!(z.relative_error(&FreqFrame::full(sym.entries().clone())) < 1e-12);
    }

    #[test]
    fn adc_rate_at_l8() {
        let c = RadarConfig::automotive_1ghz(8);
        let sym = generate_symbols::<f64>(&c, Constellation::Qpsk).unwrap();
        let sub = subsample(&modulate(&sym, &c).unwrap(), &c).unwrap();
        assert!((sub.sample_rate_hz - 125e6).abs() < 1e-3);
        assert_eq!(sub.len(), (2048 + 512) / 8);
    }

    #[test]
    fn alias_pair_decimates_identically() {
        let (nc, l) = (32usize, 4usize);
        let c = cfg(nc, l);
        let tone = |n: usize| {
            let mut e = Array2::from_elem((nc, 2), Complex::new(0.0, 0.0));
            e[[n, 0]] = Complex::new(1.0, 0.0);
            e[[n, 1]] = Complex::new(1.0, 0.0);
            let tx = modulate(&SymbolMatrix::from_entries(e, Constellation::Qpsk), &c).unwrap();
            subsample(&tx, &c).unwrap()
        };
        let a = tone(3);
        let b = tone(3 + nc / l);
        for (x, y) in a.samples.iter().zip(&b.samples) {
            assert!((x - y).norm() < 1e-15);
        }
        // and both equal the analytic exponential at the decimated instants
        let ncp = c.cp_samples().unwrap();
        for (j, x) in a.samples.iter().enumerate().take((nc + ncp) / l) {
            let t = (j * l) as f64 - ncp as f64;
            let want = Complex::from_polar(1.0 / nc as f64, 2.0 * PI * 3.0 * t / nc as f64);
            assert!((x - want).norm() < 1e-15);
        }
    }

    #[test]
    fn folded_demodulation_sums_sub_bands() {
        for l in [2, 4, 8] {
            let c = cfg(64, l);
            let sym = generate_symbols::<f64>(&c, Constellation::Qpsk).unwrap();
            let targets = TargetSet::new(vec![
                Target::on_bin(5, Complex::new(1.0, -0.5), &c),
                Target::on_bin(11, Complex::new(0.1, 0.2), &c),
            ]);
            let s = apply_channel_freq(&sym, &targets, &c, false).unwrap();
            let rx = apply_channel_time(&modulate(&sym, &c).unwrap(), &targets, &c, false).unwrap();
            let z = demodulate_folded(&subsample(&rx, &c).unwrap(), &c).unwrap();
            let oracle = fold_frame(&s, l).unwrap();
            assert_eq!(z.band, Band::Folded { ratio: l });
            assert!(z.relative_error(&oracle) < 1e-12);
        }
    }

    #[test]
    fn folding_preserves_power_on_average() {
        // cross terms between sub-bands carry independent random symbols, so
        // they cancel in expectation only
        let l = 8;
        let c = RadarConfig {
            num_symbols: 64,
            ..cfg(1024, l)
        };
        let targets = TargetSet::new(vec![Target::on_bin(9, Complex::new(1.0, 0.0), &c)]);
        let (mut full, mut folded) = (0.0, 0.0);
        for seed in 0..8 {
            let c = c.clone().with_seed(seed);
            let sym = generate_symbols::<f64>(&c, Constellation::Qpsk).unwrap();
            let s = apply_channel_freq(&sym, &targets, &c, false).unwrap();
            full += s.total_power();
            folded += fold_frame(&s, l).unwrap().total_power();
        }
        assert!((folded / full - 1.0).abs() < 0.02, "{}", folded / full);
    }

    #[test]
    fn misaligned_input_reports_counts() {
        let c = cfg(64, 4);
        let sig = TimeSignal::new(vec![Complex::new(0.0f64, 0.0); 7], 16e6);
        match demodulate_folded(&sig, &c) {
            Err(Error::Shape { expected, actual, .. }) => {
                assert_eq!(expected, 2 * (64 + 16) / 4);
                assert_eq!(actual, 7);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn noise_only_folding_raises_variance_by_l() {
        let l = 4;
        let c = RadarConfig {
            num_symbols: 256,
            noise_power_mw: 0.5,
            ..cfg(2048, l)
        };
        let sym = generate_symbols::<f64>(&c, Constellation::Qpsk).unwrap();
        let s = apply_channel_freq(&sym, &TargetSet::default(), &c, true).unwrap();
        let z = fold_frame(&s, l).unwrap();
        assert!(z.entries.len() >= 100_000);
        let var = z.total_power() / z.entries.len() as f64;
        assert!((var / (0.5 * l as f64) - 1.0).abs() < 0.02, "{var}");
    }
}
