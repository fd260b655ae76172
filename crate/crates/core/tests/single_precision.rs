use num_complex::Complex;
use snsradar::channel::{apply_channel_freq, apply_channel_time, Target, TargetSet};
use snsradar::detect::range_profiles;
use snsradar::pipeline::process_folded;
use snsradar::sampler::{demodulate_folded, fold_frame, subsample};
use snsradar::smnc::SmncParams;
use snsradar::unfold::unfold_full;
use snsradar::waveform::{generate_symbols, modulate, Constellation};
use snsradar::{Frame32, RadarConfig};

fn scene(c: &RadarConfig) -> TargetSet {
    TargetSet::new(vec![
        Target::on_bin(27, Complex::new(1.0 / 2048f64.sqrt(), 0.0), c),
        Target::on_bin(67, Complex::new(0.05 / 2048f64.sqrt(), 0.0), c),
    ])
}

#[test]
fn folding_equivalence_in_f32() {
    let c = RadarConfig::automotive_1ghz(8).with_noise_mw(0.0);
    let sym = generate_symbols::<f32>(&c, Constellation::Qpsk).unwrap();
    let t = scene(&c);
    let rx = apply_channel_time(&modulate(&sym, &c).unwrap(), &t, &c, false).unwrap();
    let z: Frame32 = demodulate_folded(&subsample(&rx, &c).unwrap(), &c).unwrap();
    let s = apply_channel_freq(&sym, &t, &c, false).unwrap();
    assert!(z.relative_error(&fold_frame(&s, 8).unwrap()) < 1e-5);
}

#[test]
fn cancellation_in_f32_tracks_f64() {
    let c = RadarConfig::automotive_1ghz(8).with_noise_mw(1e-8);
    let t = scene(&c);
    let run32 = {
        let sym = generate_symbols::<f32>(&c, Constellation::Qpsk).unwrap();
        let s = apply_channel_freq(&sym, &t, &c, true).unwrap();
        process_folded(&fold_frame(&s, 8).unwrap(), &sym, &c, &SmncParams::default(), true).unwrap()
    };
    let run64 = {
        let sym = generate_symbols::<f64>(&c, Constellation::Qpsk).unwrap();
        let s = apply_channel_freq(&sym, &t, &c, true).unwrap();
        process_folded(&fold_frame(&s, 8).unwrap(), &sym, &c, &SmncParams::default(), true).unwrap()
    };
    assert_eq!(run32.post.detected_bins(), run64.post.detected_bins());
    for (a, b) in run32.post.integrated.iter().zip(&run64.post.integrated) {
        assert!((10.0 * (a / b).log10()).abs() < 0.5);
    }
}

#[test]
fn unfold_and_profile_in_f32() {
    let c = RadarConfig::automotive_1ghz(4).with_noise_mw(0.0);
    let sym = generate_symbols::<f32>(&c, Constellation::Qpsk).unwrap();
    let s = apply_channel_freq(&sym, &scene(&c), &c, false).unwrap();
    let d = unfold_full(&fold_frame(&s, 4).unwrap(), &sym).unwrap();
    let p = range_profiles(&d, &c).unwrap();
    assert!(p.integrated[27] > 0.5 && p.integrated[27] < 2.0);
}
